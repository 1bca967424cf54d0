//! Eigensolvers for the single-excitation Hamiltonian.
//!
//! When the reservoir oscillators do not interact the Σ=1 matrix is an
//! arrowhead matrix
//!
//! ```text
//!     | ω₀   g₁*  g₂*  …  |
//!     | g₁   ω₁            |
//!     | g₂        ω₂       |
//!     | …              ⋱   |
//! ```
//!
//! whose eigenvalues are the roots of the secular function
//!
//! ```text
//! f(x) = ω₀ − x + Σ_i |g_i|²/(x − ω_i),     f′(x) < −1 everywhere,
//! ```
//!
//! one root strictly between each pair of neighbouring poles plus one below
//! ω₁ and one above ω_N. Each root is found by a bracketed Newton iteration
//! that falls back to bisection whenever the Newton step would leave the
//! bracket, so the iterates can never escape ("catapult") past a pole.
//! The first eigenvector component follows directly from the derivative,
//! |β₁|² = −1/f′(x), and the remaining components from
//! β_{i+1} = g_i β₁ / (x − ω_i).
//!
//! A dense Hermitian path (for matrices with oscillator–oscillator coupling,
//! and for cross-checking) is delegated to nalgebra's self-adjoint
//! eigendecomposition.

use crate::{C64, Error, Result};
use nalgebra::DMatrix;

const NEWTON_MAX_ITER: usize = 100;
const NEWTON_TOL: f64 = 1e-13;
const SWEEP_TOL: f64 = 1e-10;

/// Eigenvalues (ascending) and the matching eigenvector columns of one
/// excitation subspace.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Column j is the normalized eigenvector of `eigenvalues[j]` expressed
    /// in the subspace basis (row 0 = system-excited basis vector for Σ=1).
    pub vectors: DMatrix<C64>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// p_j = |⟨basis row 0|eigenvector j⟩|², the weight of each eigenmode on
    /// the system-excited state. Sums to 1.
    pub fn excitation_probabilities(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| self.vectors[(0, j)].norm_sqr()).collect()
    }

    /// |β_{k,j}|² for a fixed basis row k across all eigenvectors.
    pub fn row_probabilities(&self, k: usize) -> Vec<f64> {
        (0..self.dim()).map(|j| self.vectors[(k, j)].norm_sqr()).collect()
    }
}

/// Secular function and its derivative at x; `g2` are the squared coupling
/// magnitudes of the poles in `freqs`.
pub fn secular(x: f64, omega0: f64, freqs: &[f64], g2: &[f64]) -> (f64, f64) {
    let mut f = omega0 - x;
    let mut fp = -1.0;
    for (&w, &q) in freqs.iter().zip(g2) {
        let d = x - w;
        f += q / d;
        fp -= q / (d * d);
    }
    (f, fp)
}

/// Eigenvalues of the arrowhead matrix, ascending.
pub fn arrowhead_eigenvalues(omega0: f64, freqs: &[f64], couplings: &[C64]) -> Result<Vec<f64>> {
    Ok(arrowhead_decomposition_impl(omega0, freqs, couplings, false)?.eigenvalues)
}

/// Full spectral decomposition of the arrowhead matrix. Eigenvectors are
/// assembled analytically from the secular derivative and verified by one
/// sweep of the fixed-point eigenvector iteration.
pub fn arrowhead_decomposition(
    omega0: f64,
    freqs: &[f64],
    couplings: &[C64],
) -> Result<SpectralDecomposition> {
    arrowhead_decomposition_impl(omega0, freqs, couplings, true)
}

fn arrowhead_decomposition_impl(
    omega0: f64,
    freqs: &[f64],
    couplings: &[C64],
    with_vectors: bool,
) -> Result<SpectralDecomposition> {
    let n = freqs.len();
    if couplings.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} couplings for {} bath frequencies",
            couplings.len(),
            n
        )));
    }
    if !omega0.is_finite() || freqs.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidParameter("non-finite frequency".into()));
    }
    let span = if n >= 2 { freqs[n - 1] - freqs[0] } else { 0.0 };
    let scale = span.max(omega0.abs()).max(1.0);
    let gap_floor = 1e-9 * scale;
    for (i, pair) in freqs.windows(2).enumerate() {
        let gap = pair[1] - pair[0];
        if gap <= gap_floor {
            return Err(Error::DegenerateFrequencies { index: i, gap, floor: gap_floor });
        }
    }

    // Oscillators with exactly zero coupling decouple: their frequency is an
    // eigenvalue with a coordinate eigenvector, and they drop out of the
    // secular equation.
    let active: Vec<usize> = (0..n).filter(|&i| couplings[i].norm_sqr() > 0.0).collect();
    let aw: Vec<f64> = active.iter().map(|&i| freqs[i]).collect();
    let ag2: Vec<f64> = active.iter().map(|&i| couplings[i].norm_sqr()).collect();

    let mut roots = solve_secular(omega0, &aw, &ag2)?;

    // merge analytic roots with the decoupled frequencies, ascending
    let mut all: Vec<(f64, Option<usize>)> = roots.drain(..).map(|x| (x, None)).collect();
    for &i in (0..n).filter(|i| !active.contains(i)).collect::<Vec<_>>().iter() {
        all.push((freqs[i], Some(i)));
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0));

    let eigenvalues: Vec<f64> = all.iter().map(|e| e.0).collect();
    if !with_vectors {
        return Ok(SpectralDecomposition {
            eigenvalues,
            vectors: DMatrix::zeros(0, 0),
        });
    }

    let dim = n + 1;
    let mut vectors = DMatrix::zeros(dim, dim);
    for (j, &(x, decoupled)) in all.iter().enumerate() {
        match decoupled {
            Some(i) => vectors[(i + 1, j)] = C64::new(1.0, 0.0),
            None => {
                let (_, fp) = secular(x, omega0, &aw, &ag2);
                let p = -1.0 / fp;
                let b1 = p.sqrt();
                vectors[(0, j)] = C64::new(b1, 0.0);
                for (k, &i) in active.iter().enumerate() {
                    vectors[(i + 1, j)] = couplings[i] * b1 / C64::new(x - aw[k], 0.0);
                }
                verify_sweep(&vectors, j, x, omega0, couplings, freqs, scale)?;
            }
        }
    }
    Ok(SpectralDecomposition { eigenvalues, vectors })
}

/// One fixed-point sweep of the eigenvector equations: recompute the first
/// component from the others and check the direction is unchanged. Detects a
/// badly converged root. Skipped when x ≈ ω₀, where the update is 0/0.
fn verify_sweep(
    vectors: &DMatrix<C64>,
    j: usize,
    x: f64,
    omega0: f64,
    couplings: &[C64],
    freqs: &[f64],
    scale: f64,
) -> Result<()> {
    let d0 = x - omega0;
    if d0.abs() < 1e-8 * scale {
        return Ok(());
    }
    let n = freqs.len();
    let mut b1 = C64::new(0.0, 0.0);
    for i in 0..n {
        b1 += couplings[i].conj() * vectors[(i + 1, j)];
    }
    b1 /= C64::new(d0, 0.0);
    // overlap of the updated vector with the analytic one
    let mut dot = b1.conj() * vectors[(0, j)];
    let mut norm2 = b1.norm_sqr();
    for i in 1..=n {
        let v = vectors[(i, j)];
        dot += v.conj() * v;
        norm2 += v.norm_sqr();
    }
    let dev = (dot.norm() / norm2.sqrt() - 1.0).abs();
    if dev > SWEEP_TOL {
        return Err(Error::BadEigenvector(dev));
    }
    Ok(())
}

/// Roots of the secular equation for strictly positive squared couplings.
/// Returns M+1 ascending roots for M poles.
fn solve_secular(omega0: f64, poles: &[f64], g2: &[f64]) -> Result<Vec<f64>> {
    let m = poles.len();
    if m == 0 {
        return Ok(vec![omega0]);
    }
    let sum_g: f64 = g2.iter().map(|q| q.sqrt()).sum();
    // Gershgorin-style outer bounds; every eigenvalue lies inside
    let lo_bound = omega0.min(poles[0]) - sum_g - 1e-3 * (1.0 + sum_g);
    let hi_bound = omega0.max(poles[m - 1]) + sum_g + 1e-3 * (1.0 + sum_g);
    // index of the inter-pole interval containing ω₀
    let i0 = poles.iter().filter(|&&w| w < omega0).count();

    let mut roots = Vec::with_capacity(m + 1);
    for k in 0..=m {
        let lo = if k == 0 { lo_bound } else { poles[k - 1] };
        let hi = if k == m { hi_bound } else { poles[k] };
        let width = hi - lo;
        let seed = if k == i0 {
            // the root displaced from ω₀ itself: step off ω₀ towards the
            // side the secular function points to
            let x0 = omega0.clamp(lo + 1e-3 * width, hi - 1e-3 * width);
            let (f, _) = secular(x0, omega0, poles, g2);
            if f.is_finite() {
                let step = 1e-3 * width;
                if f > 0.0 { (x0 + step).min(hi - 0.5 * step) } else { (x0 - step).max(lo + 0.5 * step) }
            } else {
                0.5 * (lo + hi)
            }
        } else if k < i0 {
            // root hugs the pole at the upper end of the bracket
            near_pole_seed(omega0, poles, g2, k, lo, hi, false)
        } else {
            // root hugs the pole at the lower end of the bracket
            near_pole_seed(omega0, poles, g2, k - 1, lo, hi, true)
        };
        let root = newton_bracketed(seed, lo, hi, omega0, poles, g2)?;
        roots.push(root);
    }
    Ok(roots)
}

/// Initial guess next to pole `pi`. Far from resonance (|ω_i − ω₀| > 10|g_i|)
/// the first-order displaced-pole estimate is accurate; otherwise start a
/// small relative offset inside the bracket.
fn near_pole_seed(
    omega0: f64,
    poles: &[f64],
    g2: &[f64],
    pi: usize,
    lo: f64,
    hi: f64,
    above: bool,
) -> f64 {
    let w = poles[pi];
    let d = w - omega0;
    let width = hi - lo;
    let eps = 1e-3 * width;
    if d.abs() > 10.0 * g2[pi].sqrt() {
        let shift = g2[pi] / (d * (1.0 + g2[pi] / (d * d)));
        let x0 = w + shift;
        if x0 > lo + 0.25 * eps && x0 < hi - 0.25 * eps {
            return x0;
        }
    }
    if above { w + eps } else { w - eps }
}

/// Safeguarded Newton iteration on f inside the open bracket (lo, hi), where
/// f(lo⁺) > 0 > f(hi⁻). A step that would leave the current bracket is
/// replaced by bisection; the bracket shrinks monotonically, so every
/// accepted iterate stays inside the initial one.
fn newton_bracketed(
    seed: f64,
    lo0: f64,
    hi0: f64,
    omega0: f64,
    poles: &[f64],
    g2: &[f64],
) -> Result<f64> {
    let (mut lo, mut hi) = (lo0, hi0);
    let mut x = seed.clamp(lo, hi);
    for _ in 0..NEWTON_MAX_ITER {
        let (f, fp) = secular(x, omega0, poles, g2);
        if !f.is_finite() || !fp.is_finite() {
            // landed on (or underflowed onto) a pole; retreat to the middle
            x = 0.5 * (lo + hi);
            continue;
        }
        // f is strictly decreasing, so the sign locates the root
        if f > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x - f / fp;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        assert!(next >= lo0 && next <= hi0, "iterate escaped its bracket");
        if (next - x).abs() <= NEWTON_TOL * x.abs().max(1.0) {
            // one polishing step: the iteration is quadratic, so this lands
            // at machine precision and makes −1/f′ stable for the weights
            let (f, fp) = secular(next, omega0, poles, g2);
            if f.is_finite() && fp.is_finite() {
                let polished = next - f / fp;
                if polished > lo0 && polished < hi0 {
                    return Ok(polished);
                }
            }
            return Ok(next);
        }
        x = next;
    }
    // Newton stalled (pathological cancellation); bisection always finishes
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= NEWTON_TOL * mid.abs().max(1.0) {
            return Ok(mid);
        }
        let (f, _) = secular(mid, omega0, poles, g2);
        if f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence(NEWTON_MAX_ITER + 200))
}

/// Dense self-adjoint eigendecomposition, ascending eigenvalues. Validates
/// Hermiticity, then symmetrizes exactly before factorizing.
pub fn dense_hermitian_eig(h: &DMatrix<C64>) -> Result<SpectralDecomposition> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch(format!("{}x{} matrix", h.nrows(), h.ncols())));
    }
    let scale = h.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1.0);
    let mut worst = 0.0f64;
    for i in 0..h.nrows() {
        for j in i..h.ncols() {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    if worst > 1e-12 * scale {
        return Err(Error::NotHermitian(worst));
    }
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let dim = h.nrows();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let mut vectors = DMatrix::zeros(dim, dim);
    for (col, &j) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(j));
    }
    Ok(SpectralDecomposition { eigenvalues, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn resonant_two_level_splitting() {
        // single oscillator exactly on resonance: eigenvalues ω₀ ± |g|
        let d = arrowhead_decomposition(1.0, &[1.0], &[re(0.1)]).unwrap();
        assert!((d.eigenvalues[0] - 0.9).abs() < 1e-13);
        assert!((d.eigenvalues[1] - 1.1).abs() < 1e-13);
        let p = d.excitation_probabilities();
        assert!((p[0] - 0.5).abs() < 1e-12);
        assert!((p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn three_level_frozen_values() {
        let d = arrowhead_decomposition(1.0, &[0.5, 1.5], &[re(0.1), re(0.2)]).unwrap();
        let want = [0.47923496378170705, 0.9495725556088751, 1.571192480609418];
        let want_p = [0.0412708150185994, 0.8463797294203422, 0.11234945556105871];
        let p = d.excitation_probabilities();
        for j in 0..3 {
            assert!((d.eigenvalues[j] - want[j]).abs() < 1e-12, "eigenvalue {j}");
            assert!((p[j] - want_p[j]).abs() < 1e-12, "probability {j}");
        }
    }

    #[test]
    fn coupling_phases_do_not_move_eigenvalues() {
        let gs = [C64::from_polar(0.1, 0.3), C64::from_polar(0.2, -1.1)];
        let d = arrowhead_decomposition(1.0, &[0.5, 1.5], &gs).unwrap();
        let want = [0.47923496378170705, 0.9495725556088751, 1.571192480609418];
        for (got, want) in d.eigenvalues.iter().zip(want) {
            assert!((got - want).abs() < 1e-12);
        }
        // eigenvector components carry the coupling phase
        let v = d.vectors[(1, 1)];
        assert!((v.arg() - 0.3).abs() < 1e-10 || (v.arg() + std::f64::consts::PI - 0.3).abs() < 1e-10);
    }

    #[test]
    fn zero_couplings_pass_through() {
        let z = re(0.0);
        let d = arrowhead_decomposition(1.0, &[0.5, 1.5], &[z, z]).unwrap();
        assert_eq!(d.eigenvalues, vec![0.5, 1.0, 1.5]);
        assert_eq!(d.vectors[(1, 0)], re(1.0));
        assert_eq!(d.vectors[(0, 1)], re(1.0));
        assert_eq!(d.vectors[(2, 2)], re(1.0));
    }

    #[test]
    fn mixed_zero_and_active_couplings() {
        let d = arrowhead_decomposition(1.0, &[0.5, 0.8, 1.5], &[re(0.0), re(0.1), re(0.0)]).unwrap();
        assert!(d.eigenvalues.contains(&0.5));
        assert!(d.eigenvalues.contains(&1.5));
        // the two active eigenvalues solve the 2x2 problem (ω₀=1, ω=0.8, g=0.1)
        let disc = ((0.2f64 / 2.0).powi(2) + 0.01).sqrt();
        let lo = 0.9 - disc;
        let hi = 0.9 + disc;
        assert!(d.eigenvalues.iter().any(|&x| (x - lo).abs() < 1e-12));
        assert!(d.eigenvalues.iter().any(|&x| (x - hi).abs() < 1e-12));
    }

    #[test]
    fn interlacing_with_poles() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.gen_range(2..30);
            let mut freqs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..5.0)).collect();
            freqs.sort_by(f64::total_cmp);
            freqs.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
            let gs: Vec<C64> =
                freqs.iter().map(|_| C64::from_polar(rng.gen_range(0.001..0.3), rng.gen_range(0.0..6.0))).collect();
            let omega0 = rng.gen_range(0.5..2.0);
            let ev = arrowhead_eigenvalues(omega0, &freqs, &gs).unwrap();
            assert_eq!(ev.len(), freqs.len() + 1);
            for (k, &w) in freqs.iter().enumerate() {
                assert!(ev[k] < w && w < ev[k + 1], "interlacing broken at pole {k}");
            }
        }
    }

    #[test]
    fn matches_dense_path() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let n = 12;
        let mut freqs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..4.0)).collect();
        freqs.sort_by(f64::total_cmp);
        let gs: Vec<C64> =
            (0..n).map(|_| C64::from_polar(rng.gen_range(0.0..0.2), rng.gen_range(0.0..6.0))).collect();
        let d = arrowhead_decomposition(1.0, &freqs, &gs).unwrap();

        let dim = n + 1;
        let mut h = DMatrix::zeros(dim, dim);
        h[(0, 0)] = re(1.0);
        for i in 0..n {
            h[(i + 1, i + 1)] = re(freqs[i]);
            h[(i + 1, 0)] = gs[i];
            h[(0, i + 1)] = gs[i].conj();
        }
        let dd = dense_hermitian_eig(&h).unwrap();
        let p = d.excitation_probabilities();
        let pd = dd.excitation_probabilities();
        for j in 0..dim {
            assert!((d.eigenvalues[j] - dd.eigenvalues[j]).abs() < 1e-10);
            assert!((p[j] - pd[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn probabilities_sum_to_one_and_vectors_unit() {
        let gs: Vec<C64> = vec![re(0.05), re(0.1), re(0.02), re(0.08)];
        let d = arrowhead_decomposition(1.2, &[0.4, 0.9, 1.3, 2.0], &gs).unwrap();
        let psum: f64 = d.excitation_probabilities().iter().sum();
        assert!((psum - 1.0).abs() < 1e-12);
        for j in 0..d.dim() {
            let n2: f64 = (0..d.dim()).map(|i| d.vectors[(i, j)].norm_sqr()).sum();
            assert!((n2 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn weak_coupling_far_pole_roots_stay_put() {
        // poles far from ω₀ barely move; the displaced-pole seed regime
        let freqs = [0.1, 0.2, 5.0, 6.0];
        let gs: Vec<C64> = vec![re(1e-4); 4];
        let ev = arrowhead_eigenvalues(1.0, &freqs, &gs).unwrap();
        for &w in &freqs {
            assert!(ev.iter().any(|&x| (x - w).abs() < 1e-6));
        }
        assert!(ev.iter().any(|&x| (x - 1.0).abs() < 1e-6));
    }

    #[test]
    fn rejects_degenerate_poles() {
        let gs = [re(0.1), re(0.1)];
        let err = arrowhead_eigenvalues(1.0, &[1.0, 1.0 + 1e-12], &gs).unwrap_err();
        assert!(matches!(err, Error::DegenerateFrequencies { .. }));
    }

    #[test]
    fn dense_rejects_non_hermitian() {
        let mut h = DMatrix::from_element(2, 2, re(0.0));
        h[(0, 1)] = re(0.1);
        h[(1, 0)] = re(0.3);
        assert!(matches!(dense_hermitian_eig(&h).unwrap_err(), Error::NotHermitian(_)));
    }

    #[test]
    fn dense_reconstructs_matrix() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let n = 6;
        let mut h = DMatrix::zeros(n, n);
        for i in 0..n {
            h[(i, i)] = re(rng.gen_range(-1.0..1.0));
            for j in (i + 1)..n {
                let z = C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
            }
        }
        let d = dense_hermitian_eig(&h).unwrap();
        let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            n,
            d.eigenvalues.iter().map(|&x| re(x)),
        ));
        let rebuilt = &d.vectors * lam * d.vectors.adjoint();
        assert!((&rebuilt - &h).iter().map(|z| z.norm()).fold(0.0f64, f64::max) < 1e-12);
    }
}
