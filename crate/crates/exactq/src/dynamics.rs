//! Closed-form dynamics of the reduced system state.
//!
//! Starting from (α|0⟩ + β|1⟩) ⊗ |0…0⟩, everything is carried by the phasor
//! sum over the single-excitation eigenmodes,
//!
//! ```text
//! Γ(t) = Σ_j p_j e^(−iω_j t),        p_j = |β_{1,j}|²,
//! ```
//!
//! via ρ₁₁(t) = |β|²|Γ(t)|² and ρ₁₀(t) = α*β·Γ(t). The module provides Γ and
//! the observables built on it — equilibrium and transition probabilities,
//! windowed time averages, spectral moments (two independent routes), the
//! Markovian exponential reference, and the Von Neumann entropy.

use crate::eigen::SpectralDecomposition;
use crate::{C64, Error, Result};

/// Moment-recurrence hard cap; the raw values grow like ω_maxⁿ and become
/// numerically meaningless long before overflow.
pub const MOMENT_CAP: u32 = 30;

/// Default absolute |Γ|² threshold declaring the exact and Markovian curves
/// separated.
pub const DEPARTURE_THRESHOLD: f64 = 0.02;

const DEGENERACY_FLOOR_REL: f64 = 1e-9;

/// System initial state α|0⟩ + β|1⟩ (bath in its ground state).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialCondition {
    alpha: C64,
    beta: C64,
}

impl InitialCondition {
    pub fn new(alpha: C64, beta: C64) -> Result<Self> {
        let norm2 = alpha.norm_sqr() + beta.norm_sqr();
        if (norm2 - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(norm2));
        }
        Ok(Self { alpha, beta })
    }

    /// Fully excited system: α=0, β=1.
    pub fn excited() -> Self {
        Self { alpha: C64::new(0.0, 0.0), beta: C64::new(1.0, 0.0) }
    }

    /// Equal superposition (|0⟩+|1⟩)/√2.
    pub fn balanced() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Self { alpha: C64::new(r, 0.0), beta: C64::new(r, 0.0) }
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    pub fn beta(&self) -> C64 {
        self.beta
    }
}

/// Reduced density matrix of the qubit: [[1−p, q*], [q, p]].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    /// Excited population ρ₁₁.
    pub p: f64,
    /// Coherence ρ₁₀.
    pub q: C64,
}

impl QubitState {
    /// Positivity residual p(1−p) − |q|²; physical states are ≥ 0 up to
    /// rounding.
    pub fn positivity(&self) -> f64 {
        self.p * (1.0 - self.p) - self.q.norm_sqr()
    }
}

/// The weights and eigenfrequencies defining Γ(t).
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSeries {
    probabilities: Vec<f64>,
    frequencies: Vec<f64>,
}

impl GammaSeries {
    pub fn new(probabilities: Vec<f64>, frequencies: Vec<f64>) -> Result<Self> {
        if probabilities.len() != frequencies.len() || probabilities.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{} probabilities vs {} frequencies",
                probabilities.len(),
                frequencies.len()
            )));
        }
        if probabilities.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter("negative or non-finite weight".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(total));
        }
        Ok(Self { probabilities, frequencies })
    }

    /// Weights p_j = |β_{1,j}|² from a Σ=1 decomposition.
    pub fn from_decomposition(d: &SpectralDecomposition) -> Result<Self> {
        Self::new(d.excitation_probabilities(), d.eigenvalues.clone())
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// Γ(t) = Σ_j p_j e^(−iω_j t).
    pub fn gamma(&self, t: f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (&p, &w) in self.probabilities.iter().zip(&self.frequencies) {
            acc += C64::from_polar(p, -w * t);
        }
        acc
    }

    pub fn abs_gamma_sq(&self, t: f64) -> f64 {
        self.gamma(t).norm_sqr()
    }

    /// Long-time average of |Γ|²: p = Σ_j p_j², valid only for a
    /// non-degenerate spectrum (cross terms must average out).
    pub fn equilibrium_probability(&self) -> Result<f64> {
        let mut sorted = self.frequencies.clone();
        sorted.sort_by(f64::total_cmp);
        // span sets the scale, but guard against a fully collapsed spectrum
        let maxabs = sorted.iter().fold(0.0f64, |a, &w| a.max(w.abs()));
        let span = (sorted[sorted.len() - 1] - sorted[0]).max(maxabs).max(1e-300);
        let floor = DEGENERACY_FLOOR_REL * span;
        for pair in sorted.windows(2) {
            let gap = pair[1] - pair[0];
            if gap < floor {
                return Err(Error::DegenerateSpectrum { gap, floor });
            }
        }
        Ok(self.probabilities.iter().map(|p| p * p).sum())
    }

    /// Windowed numerical mean of |Γ|² (validation and plotting; the
    /// analytic equilibrium value is authoritative).
    pub fn time_average_abs_gamma_sq(&self, t_start: f64, window: f64, samples: usize) -> Result<f64> {
        if samples < 2 || !(window > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need samples ≥ 2 and positive window, got {samples}, {window}"
            )));
        }
        let dt = window / (samples - 1) as f64;
        let sum: f64 = (0..samples).map(|k| self.abs_gamma_sq(t_start + k as f64 * dt)).sum();
        Ok(sum / samples as f64)
    }
}

/// ρ(t) from Γ(t): p = |β|²|Γ|², q = α*β·Γ.
pub fn density_matrix(ic: &InitialCondition, series: &GammaSeries, t: f64) -> QubitState {
    let g = series.gamma(t);
    QubitState {
        p: ic.beta.norm_sqr() * g.norm_sqr(),
        q: ic.alpha.conj() * ic.beta * g,
    }
}

/// Markovian (Lindblad-limit) reference: population decays at J₀, coherence
/// at J₀/2 while rotating at ω₀′.
pub fn markov_state(ic: &InitialCondition, j0: f64, omega0_prime: f64, t: f64) -> QubitState {
    let p0 = ic.beta.norm_sqr();
    let q0 = ic.alpha.conj() * ic.beta;
    QubitState {
        p: p0 * (-j0 * t).exp(),
        q: q0 * (-0.5 * j0 * t).exp() * C64::from_polar(1.0, -omega0_prime * t),
    }
}

/// p₀[1→k] for k = 0..N: the long-time probability that the single
/// excitation sits on site k (0 = system). Sums to 1.
pub fn transition_probabilities(d: &SpectralDecomposition) -> Vec<f64> {
    let p = d.excitation_probabilities();
    (0..d.dim())
        .map(|k| {
            d.row_probabilities(k)
                .iter()
                .zip(&p)
                .map(|(bk, pj)| pj * bk)
                .sum()
        })
        .collect()
}

/// ⟨ωⁿ⟩ = Σ_j p_j ω_jⁿ for n = 1..n_max.
pub fn spectral_moments_from_eig(series: &GammaSeries, n_max: u32) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max as usize);
    let mut powers: Vec<f64> = vec![1.0; series.frequencies.len()];
    for _ in 1..=n_max {
        for (pw, &w) in powers.iter_mut().zip(&series.frequencies) {
            *pw *= w;
        }
        out.push(powers.iter().zip(&series.probabilities).map(|(pw, p)| pw * p).sum());
    }
    out
}

/// ⟨ωⁿ⟩ = (H¹)ⁿ₁₁ by the first-column recurrence — no eigensolve and no full
/// matrix powers. Independent cross-check of the spectral route.
pub fn spectral_moments_from_recurrence(
    omega0: f64,
    freqs: &[f64],
    couplings: &[C64],
    n_max: u32,
) -> Result<Vec<f64>> {
    if n_max > MOMENT_CAP {
        return Err(Error::MomentOrderTooLarge(n_max, MOMENT_CAP));
    }
    if freqs.len() != couplings.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} couplings for {} frequencies",
            couplings.len(),
            freqs.len()
        )));
    }
    // first column of H^n: h0 = entry (1,1), hs[i] = entry (i+2, 1)
    let mut h0 = C64::new(1.0, 0.0);
    let mut hs = vec![C64::new(0.0, 0.0); freqs.len()];
    let mut out = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let mut next0 = h0 * omega0;
        for (&g, h) in couplings.iter().zip(&hs) {
            next0 += g.conj() * h;
        }
        for ((h, &w), &g) in hs.iter_mut().zip(freqs).zip(couplings) {
            *h = *h * w + g * h0;
        }
        h0 = next0;
        if !h0.re.is_finite() || h0.re.abs() > 1e300 {
            return Err(Error::MomentOverflow(n));
        }
        out.push(h0.re);
    }
    Ok(out)
}

/// Von Neumann entropy in nats from the 2×2 spectrum: Δ = (1−2p)² + 4|q|²,
/// eigenvalues (1∓√Δ)/2.
pub fn von_neumann_entropy(state: &QubitState) -> Result<f64> {
    if state.positivity() < -1e-12 || state.p < -1e-12 || state.p > 1.0 + 1e-12 {
        return Err(Error::NotAState { p: state.p, q2: state.q.norm_sqr() });
    }
    let delta = (1.0 - 2.0 * state.p).powi(2) + 4.0 * state.q.norm_sqr();
    let root = delta.sqrt().min(1.0);
    let p1 = 0.5 * (1.0 - root);
    let p2 = 0.5 * (1.0 + root);
    Ok(-xlnx(p1) - xlnx(p2))
}

fn xlnx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Entropy along a trajectory.
pub fn entropy_series(ic: &InitialCondition, series: &GammaSeries, times: &[f64]) -> Result<Vec<f64>> {
    times
        .iter()
        .map(|&t| von_neumann_entropy(&density_matrix(ic, series, t)))
        .collect()
}

/// Where the exact |Γ|² curve abandons the Markovian exponential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepartureReport {
    /// First time |exact − markov| exceeds the threshold for three
    /// consecutive samples; `None` when the curves never separate in range.
    pub departure: Option<f64>,
    /// First sampled time with |Γ|² ≤ ½.
    pub tau_half: Option<f64>,
}

/// Scan two sampled curves for persistent separation. The grid must be
/// monotone increasing.
pub fn departure_time(
    exact: &[f64],
    markov: &[f64],
    times: &[f64],
    threshold: f64,
) -> Result<DepartureReport> {
    if exact.len() != markov.len() || exact.len() != times.len() {
        return Err(Error::DimensionMismatch(format!(
            "series lengths {} / {} / {}",
            exact.len(),
            markov.len(),
            times.len()
        )));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("time grid must be strictly increasing".into()));
    }
    let tau_half = times
        .iter()
        .zip(exact)
        .find(|(_, &g2)| g2 <= 0.5)
        .map(|(&t, _)| t);
    let mut run = 0usize;
    let mut departure = None;
    for ((&t, &e), &m) in times.iter().zip(exact).zip(markov) {
        if (e - m).abs() > threshold {
            run += 1;
            if run == 3 {
                // report the first sample of the persistent run
                let first = times.iter().position(|&x| x == t).unwrap_or(0);
                departure = Some(times[first.saturating_sub(2)]);
                break;
            }
        } else {
            run = 0;
        }
    }
    Ok(DepartureReport { departure, tau_half })
}

/// Plotting support: the first revival of |Γ|² after τ_{1/2}. A local
/// maximum only counts when it reaches half the post-τ_{1/2} maximum, which
/// skips the small equilibrium fluctuations between revivals.
pub fn first_survival_time(times: &[f64], abs_gamma_sq: &[f64], tau_half: f64) -> Option<f64> {
    let start = times.iter().position(|&t| t > tau_half)?;
    let peak = abs_gamma_sq[start..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let gate = 0.5 * peak;
    for i in (start.max(1))..(times.len() - 1) {
        let y = abs_gamma_sq[i];
        if y > abs_gamma_sq[i - 1] && y >= abs_gamma_sq[i + 1] && y >= gate {
            return Some(times[i]);
        }
    }
    None
}
