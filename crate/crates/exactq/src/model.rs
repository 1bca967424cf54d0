//! Physical model: ohmic-family spectral density, discretization of the
//! reservoir onto a finite frequency grid, and assembly of the Hermitian
//! coupling matrix G that defines the total Hamiltonian.
//!
//! The reservoir is a set of N two-level oscillators with frequencies
//! ω_1 < … < ω_N inside [ω_min, ω_max]. Each oscillator represents a cell of
//! width ε_j of the continuum and couples to the system with
//!
//! ```text
//! g_j = sqrt(J(ω_j) ε_j / 2π) · exp(iθ_j)
//! ```
//!
//! so that Σ|g_j|² is a Riemann sum of (1/2π)∫J(ω)dω.

use crate::{C64, Error, Result};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Minimum allowed gap between neighbouring grid frequencies, as a fraction
/// of the total span. Closer frequencies make the secular-equation brackets
/// collapse and are rejected up front.
pub const GAP_FLOOR_REL: f64 = 1e-9;

/// Spectral density parameters: J(ω) = 2πη ω_c (ω/ω_c)^s e^(−ω/ω_c).
///
/// s < 1 is sub-ohmic, s = 1 ohmic, s > 1 super-ohmic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParams {
    pub eta: f64,
    pub s: f64,
    pub omega_c: f64,
}

impl SpectralParams {
    pub fn new(eta: f64, s: f64, omega_c: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")));
        }
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidParameter(format!("s must be positive, got {s}")));
        }
        if !(omega_c > 0.0) || !omega_c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "omega_c must be positive, got {omega_c}"
            )));
        }
        Ok(Self { eta, s, omega_c })
    }

    /// J(ω) for ω ≥ 0.
    pub fn density(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        let x = omega / self.omega_c;
        2.0 * std::f64::consts::PI * self.eta * self.omega_c * x.powf(self.s) * (-x).exp()
    }

    /// Markovian decay rate of the excited state: J evaluated at the system
    /// frequency. For ω_c = ω₀ this is 2πηω₀/e.
    pub fn markov_rate(&self, omega0: f64) -> f64 {
        self.density(omega0)
    }
}

/// How the N grid frequencies are laid down inside [ω_min, ω_max].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridMode {
    /// Equally spaced, endpoints inclusive: ω_i = ω_min + (i−1)h with
    /// h = (ω_max−ω_min)/(N−1).
    Uniform,
    /// Random-increment recurrence ω_{i+1} = ω_i + r′h with r′ uniform in
    /// [ε_floor, 1], affinely rescaled so the first and last frequencies land
    /// exactly on ω_min and ω_max.
    Jittered { epsilon_floor: f64, seed: u64 },
}

/// A strictly increasing frequency grid together with the cell widths ε_j it
/// induces on [ω_min, ω_max].
#[derive(Debug, Clone, PartialEq)]
pub struct BathGrid {
    freqs: Vec<f64>,
    widths: Vec<f64>,
    omega_min: f64,
    omega_max: f64,
}

impl BathGrid {
    pub fn sample(n: usize, omega_min: f64, omega_max: f64, mode: GridMode) -> Result<Self> {
        check_range(n, omega_min, omega_max)?;
        let freqs = match mode {
            GridMode::Uniform => {
                if n == 1 {
                    vec![0.5 * (omega_min + omega_max)]
                } else {
                    let h = (omega_max - omega_min) / (n - 1) as f64;
                    (0..n).map(|i| omega_min + i as f64 * h).collect()
                }
            }
            GridMode::Jittered { epsilon_floor, seed } => {
                if !(0.0..1.0).contains(&epsilon_floor) {
                    return Err(Error::InvalidParameter(format!(
                        "epsilon_floor must be in [0, 1), got {epsilon_floor}"
                    )));
                }
                if n == 1 {
                    vec![0.5 * (omega_min + omega_max)]
                } else {
                    jittered_freqs(n, omega_min, omega_max, epsilon_floor, seed)
                }
            }
        };
        Self::from_frequencies(freqs, omega_min, omega_max)
    }

    /// Wrap an explicit frequency list. The list must be strictly increasing,
    /// stay inside [ω_min, ω_max], and keep gaps above the relative floor.
    pub fn from_frequencies(freqs: Vec<f64>, omega_min: f64, omega_max: f64) -> Result<Self> {
        check_range(freqs.len(), omega_min, omega_max)?;
        let span = omega_max - omega_min;
        let floor = GAP_FLOOR_REL * span;
        if freqs.iter().any(|w| !w.is_finite() || *w < omega_min || *w > omega_max) {
            return Err(Error::FrequencyOutOfRange { min: omega_min, max: omega_max });
        }
        for (i, pair) in freqs.windows(2).enumerate() {
            let gap = pair[1] - pair[0];
            if gap <= floor {
                return Err(Error::DegenerateFrequencies { index: i, gap, floor });
            }
        }
        let widths = cell_widths(&freqs, omega_min, omega_max);
        Ok(Self { freqs, widths, omega_min, omega_max })
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.freqs
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn omega_min(&self) -> f64 {
        self.omega_min
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    /// System–bath couplings g_j = sqrt(J(ω_j)ε_j/2π)·e^(iθ_j). Phases θ_j
    /// default to zero when `phases` is `None`.
    pub fn couplings(&self, params: &SpectralParams, phases: Option<&[f64]>) -> Result<Vec<C64>> {
        if let Some(ph) = phases {
            if ph.len() != self.freqs.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} phases for {} oscillators",
                    ph.len(),
                    self.freqs.len()
                )));
            }
        }
        Ok(self
            .freqs
            .iter()
            .zip(&self.widths)
            .enumerate()
            .map(|(j, (&w, &eps))| {
                let mag = (params.density(w) * eps / (2.0 * std::f64::consts::PI)).sqrt();
                let theta = phases.map_or(0.0, |p| p[j]);
                C64::from_polar(mag, theta)
            })
            .collect())
    }
}

fn check_range(n: usize, omega_min: f64, omega_max: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("oscillator count must be positive".into()));
    }
    if !(omega_min > 0.0) || !(omega_max > omega_min) || !omega_max.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "need 0 < omega_min < omega_max, got [{omega_min}, {omega_max}]"
        )));
    }
    Ok(())
}

fn jittered_freqs(n: usize, omega_min: f64, omega_max: f64, eps_floor: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    // expected increment is h(1+ε)/2; pick h so the expected span matches
    let h = (omega_max - omega_min) / ((n - 1) as f64 * 0.5 * (1.0 + eps_floor));
    let mut raw = Vec::with_capacity(n);
    let mut w = 0.0;
    raw.push(w);
    for _ in 1..n {
        let r: f64 = rng.gen();
        let rp = eps_floor + (1.0 - eps_floor) * r;
        w += rp * h;
        raw.push(w);
    }
    // pin the endpoints exactly
    let span = raw[n - 1];
    let scale = (omega_max - omega_min) / span;
    raw.into_iter().map(|x| omega_min + x * scale).collect()
}

/// Cell widths for Eq-style Riemann sums: interior cells take half the
/// distance to each neighbour; the boundary cells additionally absorb the
/// margin down to ω_min / up to ω_max so that Σε_j = ω_max − ω_min.
fn cell_widths(freqs: &[f64], omega_min: f64, omega_max: f64) -> Vec<f64> {
    let n = freqs.len();
    if n == 1 {
        return vec![omega_max - omega_min];
    }
    (0..n)
        .map(|j| {
            let left = if j == 0 { freqs[0] - omega_min } else { (freqs[j] - freqs[j - 1]) / 2.0 };
            let right = if j == n - 1 {
                omega_max - freqs[n - 1]
            } else {
                (freqs[j + 1] - freqs[j]) / 2.0
            };
            left + right
        })
        .collect()
}

/// Optional oscillator–oscillator interactions inside the reservoir.
#[derive(Debug, Clone, PartialEq)]
pub enum BathBathMode {
    /// Independent oscillators; the single-excitation Hamiltonian is a pure
    /// arrowhead matrix.
    None,
    /// One constant coupling g_e between every pair of distinct oscillators.
    Constant(C64),
    /// Distance-symmetric spectral couplings
    /// g_ij = sqrt(L_i(ω_j)ε_j + L_j(ω_i)ε_i)·e^(iα_ij) with
    /// L_i(ω) = ½ η_i ω_i (ω/ω_i)^s e^(−ω/ω_i). Phases α_ij default to zero.
    Spectral { etas: Vec<f64>, s: f64 },
}

/// The Hermitian (N+1)×(N+1) matrix G of Hamiltonian coefficients:
/// g_00 = ω₀, g_jj = ω_j, g_0j = system–bath couplings, g_ij (i,j ≥ 1)
/// oscillator–oscillator couplings. Index 0 is the system.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    m: DMatrix<C64>,
}

impl CouplingMatrix {
    pub fn build(
        omega0: f64,
        grid: &BathGrid,
        couplings: &[C64],
        bath_bath: &BathBathMode,
    ) -> Result<Self> {
        if !(omega0 > 0.0) || !omega0.is_finite() {
            return Err(Error::InvalidParameter(format!("omega0 must be positive, got {omega0}")));
        }
        let n = grid.len();
        if couplings.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} couplings for {} oscillators",
                couplings.len(),
                n
            )));
        }
        let dim = n + 1;
        let mut m = DMatrix::zeros(dim, dim);
        m[(0, 0)] = C64::new(omega0, 0.0);
        for (j, &w) in grid.frequencies().iter().enumerate() {
            m[(j + 1, j + 1)] = C64::new(w, 0.0);
            m[(0, j + 1)] = couplings[j];
            m[(j + 1, 0)] = couplings[j].conj();
        }
        match bath_bath {
            BathBathMode::None => {}
            BathBathMode::Constant(ge) => {
                for i in 1..dim {
                    for j in (i + 1)..dim {
                        m[(i, j)] = *ge;
                        m[(j, i)] = ge.conj();
                    }
                }
            }
            BathBathMode::Spectral { etas, s } => {
                if etas.len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "{} bath eta values for {} oscillators",
                        etas.len(),
                        n
                    )));
                }
                let ws = grid.frequencies();
                let eps = grid.widths();
                let line = |i: usize, w: f64| -> f64 {
                    0.5 * etas[i] * ws[i] * (w / ws[i]).powf(*s) * (-w / ws[i]).exp()
                };
                for i in 0..n {
                    for j in (i + 1)..n {
                        let g2 = line(i, ws[j]) * eps[j] + line(j, ws[i]) * eps[i];
                        let g = C64::new(g2.sqrt(), 0.0);
                        m[(i + 1, j + 1)] = g;
                        m[(j + 1, i + 1)] = g.conj();
                    }
                }
            }
        }
        Ok(Self { m })
    }

    /// Total number of sites (system + oscillators).
    pub fn sites(&self) -> usize {
        self.m.nrows()
    }

    /// Bath oscillator count N.
    pub fn bath_len(&self) -> usize {
        self.m.nrows() - 1
    }

    pub fn omega0(&self) -> f64 {
        self.m[(0, 0)].re
    }

    /// g_ij with 0-based site indices (0 = system).
    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    /// Bath frequencies (diagonal entries 1..N).
    pub fn bath_frequencies(&self) -> Vec<f64> {
        (1..self.sites()).map(|i| self.m[(i, i)].re).collect()
    }

    /// System–bath couplings g_j = g_0j.
    pub fn system_couplings(&self) -> Vec<C64> {
        (1..self.sites()).map(|j| self.m[(0, j)]).collect()
    }

    /// True when all oscillator–oscillator couplings vanish, i.e. the Σ=1
    /// Hamiltonian is a pure arrowhead matrix.
    pub fn is_arrowhead(&self) -> bool {
        let dim = self.sites();
        for i in 1..dim {
            for j in (i + 1)..dim {
                if self.m[(i, j)] != C64::new(0.0, 0.0) {
                    return false;
                }
            }
        }
        true
    }

    /// Build directly from an explicit Hermitian matrix (used by the CLI
    /// `subspace` command). Validates Hermiticity and positive diagonal.
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() < 2 {
            return Err(Error::DimensionMismatch(format!(
                "coupling matrix must be square with at least 2 rows, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = m.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1.0);
        let mut worst = 0.0f64;
        for i in 0..m.nrows() {
            for j in i..m.ncols() {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if worst > 1e-12 * scale {
            return Err(Error::NotHermitian(worst));
        }
        Ok(Self { m })
    }
}
