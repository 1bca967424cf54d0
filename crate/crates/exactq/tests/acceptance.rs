//! End-to-end acceptance suite.
//!
//! Each criterion is a self-contained check with pinned tolerances; the
//! harness prints one PASS/FAIL line per criterion and fails the test only
//! after every criterion has run.
#![allow(clippy::type_complexity)]

use exactq::cli::config::RunConfig;
use exactq::cli::pipeline::{cmd_simulate, solve_sigma1};
use exactq::dynamics::{
    density_matrix, departure_time, first_survival_time, markov_state, spectral_moments_from_eig,
    spectral_moments_from_recurrence, von_neumann_entropy, GammaSeries, InitialCondition,
    QubitState,
};
use exactq::eigen::{arrowhead_decomposition, arrowhead_eigenvalues, dense_hermitian_eig};
use exactq::model::{BathBathMode, BathGrid, CouplingMatrix, GridMode, SpectralParams};
use exactq::subspace::{
    binomial, enumerate_basis, oracle_evolve_and_trace, paired_index_sets, rank_in_basis,
    trace_index_sets,
};
use exactq::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::time::Instant;

type Check = std::result::Result<(), String>;

#[test]
fn acceptance() {
    let criteria: &[(&str, fn() -> Check)] = &[
        ("01 four_oscillator_reference_equilibrium", c01_reference_equilibrium),
        ("02 ohmic_family_equilibrium_references", c02_ohmic_equilibrium),
        ("03 reservoir_size_scaling", c03_reservoir_size_scaling),
        ("04 moment_identities_exact", c04_moment_identities),
        ("05 closed_form_matches_brute_force", c05_oracle_equivalence),
        ("06 arrowhead_matches_dense_eigensolver", c06_arrowhead_vs_dense),
        ("07 moment_routes_and_continuum_variance", c07_moment_routes),
        ("08 markovian_reference_behaviour", c08_markov_reference),
        ("09 entropy_properties", c09_entropy),
        ("10 occupation_combinatorics", c10_combinatorics),
        ("11 deterministic_outputs", c11_determinism),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        match check() {
            Ok(()) => println!("PASS {name}"),
            Err(detail) => {
                println!("FAIL {name}: {detail}");
                failed.push(*name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

fn fail(msg: String) -> Check {
    Err(msg)
}

/// N frequencies ω_j = ω_min + j·h with h = (ω_max − ω_min)/N; the step
/// lattice leaves a margin of one half-cell plus the left offset so the cell
/// widths tile [ω_min, ω_max] exactly.
fn step_lattice(n: usize, lo: f64, hi: f64) -> BathGrid {
    let h = (hi - lo) / n as f64;
    let freqs = (1..=n).map(|j| lo + h * j as f64).collect();
    BathGrid::from_frequencies(freqs, lo, hi).expect("step lattice")
}

/// Endpoint-inclusive lattice on [lo, hi] with widths accounted against the
/// enclosing interval [wmin, wmax].
fn inclusive_lattice(n: usize, lo: f64, hi: f64, wmin: f64, wmax: f64) -> BathGrid {
    let freqs = (0..n)
        .map(|j| if j == n - 1 { hi } else { lo + (hi - lo) * j as f64 / (n - 1) as f64 })
        .collect();
    BathGrid::from_frequencies(freqs, wmin, wmax).expect("inclusive lattice")
}

fn equilibrium_of(omega0: f64, grid: &BathGrid, params: &SpectralParams) -> Result<f64, String> {
    let gs = grid.couplings(params, None).map_err(|e| e.to_string())?;
    let dec = arrowhead_decomposition(omega0, grid.frequencies(), &gs).map_err(|e| e.to_string())?;
    let series = GammaSeries::from_decomposition(&dec).map_err(|e| e.to_string())?;
    series.equilibrium_probability().map_err(|e| e.to_string())
}

/// Four oscillators at {0.5, 0.75, 1.25, 1.5} with equal couplings 0.1 to a
/// resonant system; equilibrium survival with and without a constant
/// oscillator–oscillator coupling of 0.1.
fn c01_reference_equilibrium() -> Check {
    let t0 = Instant::now();
    let grid = BathGrid::from_frequencies(vec![0.5, 0.75, 1.25, 1.5], 0.25, 1.75)
        .map_err(|e| e.to_string())?;
    let gs = vec![C64::new(0.1, 0.0); 4];
    for (ge, reference) in [(0.0, 0.5335306712f64), (0.1, 0.6185066640f64)] {
        let mode = if ge == 0.0 {
            BathBathMode::None
        } else {
            BathBathMode::Constant(C64::new(ge, 0.0))
        };
        let g = CouplingMatrix::build(1.0, &grid, &gs, &mode).map_err(|e| e.to_string())?;
        let dec = solve_sigma1(&g).map_err(|e| e.to_string())?;
        let series = GammaSeries::from_decomposition(&dec).map_err(|e| e.to_string())?;
        let p_eq = series.equilibrium_probability().map_err(|e| e.to_string())?;
        if (p_eq - reference).abs() > 5e-4 {
            return fail(format!("g_e={ge}: p_eq={p_eq:.10} vs {reference:.10}"));
        }
    }
    if t0.elapsed().as_secs_f64() > 1.0 {
        return fail(format!("took {:.2}s (limit 1s)", t0.elapsed().as_secs_f64()));
    }
    Ok(())
}

/// Thousand-oscillator equilibrium survival across coupling strengths and
/// spectral exponents, within 5% of the reference values and under 30s per
/// point.
fn c02_ohmic_equilibrium() -> Check {
    // (s, eta, omega_max, reference p_eq)
    let cases = [
        (1.0, 0.001, 5.0, 0.3363172),
        (1.0, 0.01, 5.0, 0.0631602),
        (1.0, 0.1, 5.0, 0.0075569),
        (1.0, 0.3, 5.0, 0.0031478),
        (0.5, 0.001, 5.0, 0.3250733),
        (2.0, 0.001, 7.0, 0.4646133),
    ];
    for (s, eta, wmax, reference) in cases {
        let t0 = Instant::now();
        let params = SpectralParams::new(eta, s, 1.0).map_err(|e| e.to_string())?;
        let grid = step_lattice(1000, 0.05, wmax);
        let p_eq = equilibrium_of(1.0, &grid, &params)?;
        let rel = (p_eq - reference).abs() / reference;
        if rel > 0.05 {
            return fail(format!("s={s} eta={eta}: p_eq={p_eq:.7} vs {reference} ({:.1}% off)", rel * 100.0));
        }
        if t0.elapsed().as_secs_f64() > 30.0 {
            return fail(format!("s={s} eta={eta}: took {:.1}s (limit 30s)", t0.elapsed().as_secs_f64()));
        }
    }
    Ok(())
}

/// Growing the reservoir at fixed spectral density: the equilibrium survival
/// decreases monotonically toward the reference values, and the first
/// revival of |Γ|² moves out monotonically with N.
fn c03_reservoir_size_scaling() -> Check {
    let sizes = [4usize, 9, 19, 99, 199, 499];
    let references = [0.5533, 0.2776, 0.1535, 0.0300, 0.0152, 0.0061];
    let params = SpectralParams::new(0.1, 1.0, 1.0).map_err(|e| e.to_string())?;
    let mut equilibria = Vec::new();
    let mut survivals = Vec::new();
    for &n in &sizes {
        let grid = inclusive_lattice(n, 1e-6, 2.0, 1e-9, 2.0);
        let gs = grid.couplings(&params, None).map_err(|e| e.to_string())?;
        let dec =
            arrowhead_decomposition(1.0, grid.frequencies(), &gs).map_err(|e| e.to_string())?;
        let series = GammaSeries::from_decomposition(&dec).map_err(|e| e.to_string())?;
        equilibria.push(series.equilibrium_probability().map_err(|e| e.to_string())?);

        let t_max = 4.0 * n as f64 + 50.0;
        let samples = 8000;
        let times: Vec<f64> =
            (0..samples).map(|i| t_max * i as f64 / (samples - 1) as f64).collect();
        let g2: Vec<f64> = times.iter().map(|&t| series.abs_gamma_sq(t)).collect();
        let tau_half = times
            .iter()
            .zip(&g2)
            .find(|(_, &y)| y <= 0.5)
            .map(|(&t, _)| t)
            .ok_or_else(|| format!("N={n}: |Γ|² never reaches 1/2"))?;
        let fs = first_survival_time(&times, &g2, tau_half)
            .ok_or_else(|| format!("N={n}: no revival found in [0, {t_max}]"))?;
        survivals.push(fs);
    }
    for ((&n, &p_eq), &reference) in sizes.iter().zip(&equilibria).zip(&references) {
        let rel = (p_eq - reference).abs() / reference;
        if rel > 0.10 {
            return fail(format!("N={n}: p_eq={p_eq:.4} vs {reference} ({:.1}% off)", rel * 100.0));
        }
    }
    if equilibria.windows(2).any(|w| w[1] >= w[0]) {
        return fail(format!("equilibria not strictly decreasing: {equilibria:?}"));
    }
    if survivals.windows(2).any(|w| w[1] <= w[0]) {
        return fail(format!("revival times not strictly increasing: {survivals:?}"));
    }
    Ok(())
}

fn random_arrowhead(rng: &mut ChaCha12Rng, n: usize) -> (f64, Vec<f64>, Vec<C64>) {
    let omega0 = rng.gen_range(0.5..1.5);
    let mut freqs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..2.5)).collect();
    freqs.sort_by(f64::total_cmp);
    freqs.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    let couplings = freqs
        .iter()
        .map(|_| C64::from_polar(rng.gen_range(0.01..0.2), rng.gen_range(0.0..std::f64::consts::TAU)))
        .collect();
    (omega0, freqs, couplings)
}

/// ⟨ω⟩ = ω₀ and ⟨ω²⟩ − ⟨ω⟩² = Σ|g_j|² hold to near machine precision for
/// every generated model, uniform or jittered, across spectral exponents.
fn c04_moment_identities() -> Check {
    let mut models: Vec<(f64, Vec<f64>, Vec<C64>)> = Vec::new();
    for (k, s) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        let params = SpectralParams::new(0.05, s, 1.0).map_err(|e| e.to_string())?;
        for mode in [
            GridMode::Uniform,
            GridMode::Jittered { epsilon_floor: 0.5, seed: 11 + k as u64 },
        ] {
            let grid = BathGrid::sample(200, 0.05, 5.0, mode).map_err(|e| e.to_string())?;
            let gs = grid.couplings(&params, None).map_err(|e| e.to_string())?;
            models.push((1.0, grid.frequencies().to_vec(), gs));
        }
    }
    let mut rng = ChaCha12Rng::seed_from_u64(404);
    for _ in 0..10 {
        let n = rng.gen_range(3..40);
        models.push(random_arrowhead(&mut rng, n));
    }
    for (omega0, freqs, gs) in &models {
        let m = spectral_moments_from_recurrence(*omega0, freqs, gs, 2)
            .map_err(|e| e.to_string())?;
        let g2_sum: f64 = gs.iter().map(|g| g.norm_sqr()).sum();
        if (m[0] - omega0).abs() > 1e-10 * omega0 {
            return fail(format!("⟨ω⟩={} vs ω₀={omega0}", m[0]));
        }
        let var = m[1] - m[0] * m[0];
        if (var - g2_sum).abs() > 1e-10 * g2_sum.max(1.0) {
            return fail(format!("variance {var} vs Σ|g|² {g2_sum}"));
        }
    }
    Ok(())
}

/// The closed-form reduced density matrix agrees with a brute-force route —
/// dense diagonalization of the occupied excitation blocks of the full
/// 2^(N+1)-dimensional Hamiltonian followed by a partial trace — to 1e-10,
/// for random models with complex coupling phases and (for half of them) a
/// constant oscillator–oscillator coupling.
fn c05_oracle_equivalence() -> Check {
    let mut rng = ChaCha12Rng::seed_from_u64(505);
    for model in 0..20 {
        let n = rng.gen_range(2..=8usize);
        let (omega0, freqs, gs) = random_arrowhead(&mut rng, n);
        let n = freqs.len();
        let lo = freqs[0] * 0.5;
        let hi = freqs[n - 1] * 1.2;
        let grid =
            BathGrid::from_frequencies(freqs.clone(), lo, hi).map_err(|e| e.to_string())?;
        let mode = if model % 2 == 0 {
            BathBathMode::None
        } else {
            BathBathMode::Constant(C64::from_polar(0.02, rng.gen_range(0.0..6.0)))
        };
        let g = CouplingMatrix::build(omega0, &grid, &gs, &mode).map_err(|e| e.to_string())?;

        let (a, b) = loop {
            let a = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let b = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
            if norm > 0.1 {
                break (a / norm, b / norm);
            }
        };
        let ic = InitialCondition::new(a, b).map_err(|e| e.to_string())?;
        let dec = solve_sigma1(&g).map_err(|e| e.to_string())?;
        let series = GammaSeries::from_decomposition(&dec).map_err(|e| e.to_string())?;

        // full amplitude vector: vacuum carries α, the system excitation β
        let mut initial = vec![C64::new(0.0, 0.0); 1 << (n + 1)];
        initial[0] = a;
        initial[1] = b;

        for _ in 0..50 {
            let t = rng.gen_range(0.0..40.0);
            let exact = density_matrix(&ic, &series, t);
            let brute = oracle_evolve_and_trace(&g, &initial, t).map_err(|e| e.to_string())?;
            let dp = (exact.p - brute.p).abs();
            let dq = (exact.q - brute.q).norm();
            if dp > 1e-10 || dq > 1e-10 {
                return fail(format!(
                    "model {model} t={t:.3}: Δp={dp:.2e} Δq={dq:.2e}"
                ));
            }
        }
    }
    Ok(())
}

/// The secular-equation eigensolver reproduces a dense Hermitian eigensolver
/// to 1e-8 on random arrowhead models up to N = 50, and every spectrum
/// strictly interlaces the bath frequencies.
fn c06_arrowhead_vs_dense() -> Check {
    let mut rng = ChaCha12Rng::seed_from_u64(606);
    for model in 0..50 {
        let n = rng.gen_range(2..=50usize);
        let (omega0, freqs, gs) = random_arrowhead(&mut rng, n);
        let ev = arrowhead_eigenvalues(omega0, &freqs, &gs).map_err(|e| e.to_string())?;

        let dim = freqs.len() + 1;
        let mut h = nalgebra::DMatrix::zeros(dim, dim);
        h[(0, 0)] = C64::new(omega0, 0.0);
        for (j, (&w, &g)) in freqs.iter().zip(&gs).enumerate() {
            h[(j + 1, j + 1)] = C64::new(w, 0.0);
            h[(0, j + 1)] = g;
            h[(j + 1, 0)] = g.conj();
        }
        let dense = dense_hermitian_eig(&h).map_err(|e| e.to_string())?;
        let worst = ev
            .iter()
            .zip(&dense.eigenvalues)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if worst > 1e-8 {
            return fail(format!("model {model} (N={}): max |Δλ| = {worst:.2e}", freqs.len()));
        }
        // strict interlacing: x_0 < ω_1 < x_1 < … < ω_N < x_N
        for (k, &w) in freqs.iter().enumerate() {
            if !(ev[k] < w && w < ev[k + 1]) {
                return fail(format!("model {model}: pole {w} not bracketed by ({}, {})", ev[k], ev[k + 1]));
            }
        }
    }
    Ok(())
}

/// Moments from the eigendecomposition and from the first-column recurrence
/// agree to 1e-8 up to order 10, and the discretized variance reproduces the
/// continuum value η·Γ(s+1)·ω_c² to 2% for s ∈ {1/2, 1, 2}.
fn c07_moment_routes() -> Check {
    let mut rng = ChaCha12Rng::seed_from_u64(707);
    for _ in 0..15 {
        let n = rng.gen_range(3..40);
        let (omega0, freqs, gs) = random_arrowhead(&mut rng, n);
        let dec = arrowhead_decomposition(omega0, &freqs, &gs).map_err(|e| e.to_string())?;
        let series = GammaSeries::from_decomposition(&dec).map_err(|e| e.to_string())?;
        let by_eig = spectral_moments_from_eig(&series, 10);
        let by_rec =
            spectral_moments_from_recurrence(omega0, &freqs, &gs, 10).map_err(|e| e.to_string())?;
        for (k, (a, b)) in by_eig.iter().zip(&by_rec).enumerate() {
            if (a - b).abs() > 1e-8 * a.abs().max(1.0) {
                return fail(format!("order {}: {a} vs {b}", k + 1));
            }
        }
    }
    // gamma function values Γ(s+1) for the half-integer, linear, quadratic cases
    let cases = [(0.5, 0.886226925452758, 5.0), (1.0, 1.0, 5.0), (2.0, 2.0, 7.0)];
    let eta = 0.1;
    for (s, gamma_s1, wmax) in cases {
        let params = SpectralParams::new(eta, s, 1.0).map_err(|e| e.to_string())?;
        let grid = step_lattice(1000, 0.05, wmax);
        let gs = grid.couplings(&params, None).map_err(|e| e.to_string())?;
        let m = spectral_moments_from_recurrence(1.0, grid.frequencies(), &gs, 2)
            .map_err(|e| e.to_string())?;
        let expected = 1.0 + eta * gamma_s1;
        let rel = (m[1] - expected).abs() / expected;
        if rel > 0.02 {
            return fail(format!("s={s}: ⟨ω²⟩={} vs continuum {expected} ({:.2}% off)", m[1], rel * 100.0));
        }
    }
    Ok(())
}

/// Against the exponential reference: the exact survival starts with zero
/// slope, tracks e^{−J(ω₀)t} within 0.05 for three half-lives at η = 0.01,
/// and departs from it persistently before the first revival.
fn c08_markov_reference() -> Check {
    let eta = 0.01;
    let params = SpectralParams::new(eta, 1.0, 1.0).map_err(|e| e.to_string())?;
    let j0 = params.markov_rate(1.0);
    let grid = step_lattice(1000, 0.05, 5.0);
    let gs = grid.couplings(&params, None).map_err(|e| e.to_string())?;
    let dec = arrowhead_decomposition(1.0, grid.frequencies(), &gs).map_err(|e| e.to_string())?;
    let series = GammaSeries::from_decomposition(&dec).map_err(|e| e.to_string())?;

    // quadratic short-time behaviour vs the reference's linear decay rate
    let dt = 1e-4;
    let slope = (1.0 - series.abs_gamma_sq(dt)) / dt;
    if slope.abs() > 1e-4 {
        return fail(format!("initial slope {slope:.2e} (limit 1e-4, reference rate {j0:.4})"));
    }

    let ic = InitialCondition::excited();
    let tau_half_ref = std::f64::consts::LN_2 / j0;
    let times: Vec<f64> =
        (0..600).map(|i| 3.0 * tau_half_ref * i as f64 / 599.0).collect();
    let worst = times
        .iter()
        .map(|&t| (series.abs_gamma_sq(t) - markov_state(&ic, j0, 1.0, t).p).abs())
        .fold(0.0f64, f64::max);
    if worst > 0.05 {
        return fail(format!("max |exact − reference| = {worst:.4} on [0, 3τ½] (limit 0.05)"));
    }

    let samples = 9000;
    let times: Vec<f64> = (0..samples).map(|i| 1600.0 * i as f64 / (samples - 1) as f64).collect();
    let exact: Vec<f64> = times.iter().map(|&t| series.abs_gamma_sq(t)).collect();
    let markov: Vec<f64> = times.iter().map(|&t| markov_state(&ic, j0, 1.0, t).p).collect();
    let report = departure_time(&exact, &markov, &times, 0.02).map_err(|e| e.to_string())?;
    let tau_half = report.tau_half.ok_or("no τ½ in range")?;
    let departure = report.departure.ok_or("curves never separate")?;
    let fs = first_survival_time(&times, &exact, tau_half).ok_or("no revival in range")?;
    if departure >= fs {
        return fail(format!("departure {departure:.1} not before first revival {fs:.1}"));
    }
    Ok(())
}

/// Entropy of the reduced state: zero for the pure initial state, bounded by
/// ln 2, exactly reproducible at the balanced-superposition half-survival
/// point, and vanishing again as |Γ| → 0.
fn c09_entropy() -> Check {
    let grid = BathGrid::from_frequencies(vec![0.5, 0.75, 1.25, 1.5], 0.25, 1.75)
        .map_err(|e| e.to_string())?;
    let gs = vec![C64::new(0.1, 0.0); 4];
    let dec = arrowhead_decomposition(1.0, grid.frequencies(), &gs).map_err(|e| e.to_string())?;
    let series = GammaSeries::from_decomposition(&dec).map_err(|e| e.to_string())?;
    let ic = InitialCondition::excited();
    let s0 = von_neumann_entropy(&density_matrix(&ic, &series, 0.0)).map_err(|e| e.to_string())?;
    if s0.abs() > 1e-12 {
        return fail(format!("S(0) = {s0:.2e}"));
    }
    let ln2 = std::f64::consts::LN_2;
    for i in 0..400 {
        let t = 80.0 * i as f64 / 399.0;
        let s = von_neumann_entropy(&density_matrix(&ic, &series, t)).map_err(|e| e.to_string())?;
        if !(-1e-12..=ln2 + 1e-12).contains(&s) {
            return fail(format!("S({t:.2}) = {s} outside [0, ln 2]"));
        }
    }
    // balanced superposition at |Γ|² = 1/2: p = 1/4, |q|² = 1/8
    let state = QubitState { p: 0.25, q: C64::new(0.125f64.sqrt(), 0.0) };
    let s = von_neumann_entropy(&state).map_err(|e| e.to_string())?;
    let reference = 0.24577536666847116;
    if (s - reference).abs() > 1e-3 {
        return fail(format!("balanced half-survival entropy {s} vs {reference}"));
    }
    // fully excited initial state: S → 0 as the survival amplitude dies out
    let mut last = f64::INFINITY;
    for g2 in [1e-2, 1e-4, 1e-6] {
        let s = von_neumann_entropy(&QubitState { p: g2, q: C64::new(0.0, 0.0) })
            .map_err(|e| e.to_string())?;
        if s >= last {
            return fail(format!("entropy not decreasing with |Γ|²: {s} after {last}"));
        }
        last = s;
    }
    if last > 2e-5 {
        return fail(format!("S at |Γ|² = 1e-6 is {last:.2e}, expected ≈ 0"));
    }
    Ok(())
}

/// Occupation-number bookkeeping: pinned small bases, the system-bit
/// partition, binomial dimensions up to N = 12, and the common-configuration
/// pairing including its emptiness rule, exhaustively for N ≤ 10.
fn c10_combinatorics() -> Check {
    // three oscillators: the Σ = 1 and Σ = 2 bases in ascending code order
    let b1 = enumerate_basis(3, 1).map_err(|e| e.to_string())?;
    if b1 != vec![1, 2, 4, 8] {
        return fail(format!("Σ=1 basis {b1:?}"));
    }
    let b2 = enumerate_basis(3, 2).map_err(|e| e.to_string())?;
    if b2 != vec![3, 5, 6, 9, 10, 12] {
        return fail(format!("Σ=2 basis {b2:?}"));
    }
    let (i0, i1) = trace_index_sets(&b2);
    if i0 != vec![3, 5, 6] || i1 != vec![1, 2, 4] {
        return fail(format!("trace partition I0={i0:?} I1={i1:?}"));
    }
    for (k, &code) in b2.iter().enumerate() {
        if rank_in_basis(code, 4) != k + 1 {
            return fail(format!("rank of code {code} ≠ {}", k + 1));
        }
    }
    for n_bath in 0..=12usize {
        for sigma in 0..=(n_bath as u32 + 1) {
            let dim = enumerate_basis(n_bath, sigma).map_err(|e| e.to_string())?.len() as u64;
            let expected = binomial(n_bath as u64 + 1, sigma as u64);
            if dim != expected {
                return fail(format!("N={n_bath} Σ={sigma}: dim {dim} vs C = {expected}"));
            }
        }
    }
    // pinned pairings for N = 3
    let cases: [(u8, u8, u32, u32, Vec<(usize, usize)>); 4] = [
        (0, 1, 0, 1, vec![(1, 1)]),
        (0, 1, 1, 1, vec![]),
        (0, 0, 1, 1, vec![(2, 2), (3, 3), (4, 4)]),
        (1, 0, 2, 1, vec![(1, 2), (2, 3), (4, 4)]),
    ];
    for (sigma, sigma_p, cap, cap_p, expected) in cases {
        let got = paired_index_sets(sigma, sigma_p, cap, cap_p, 3).map_err(|e| e.to_string())?;
        if got != expected {
            return fail(format!("pairs({sigma},{sigma_p},{cap},{cap_p}) = {got:?}"));
        }
    }
    // emptiness rule and cardinality, exhaustively
    for n_bath in 1..=10usize {
        for sigma in 0..=1u8 {
            for sigma_p in 0..=1u8 {
                for cap in 0..=(n_bath as u32 + 1) {
                    for cap_p in 0..=(n_bath as u32 + 1) {
                        let got = paired_index_sets(sigma, sigma_p, cap, cap_p, n_bath)
                            .map_err(|e| e.to_string())?;
                        let compatible = cap >= sigma as u32
                            && cap_p >= sigma_p as u32
                            && cap - sigma as u32 == cap_p - sigma_p as u32
                            && (cap - sigma as u32) as usize <= n_bath;
                        let expected = if compatible {
                            binomial(n_bath as u64, (cap - sigma as u32) as u64) as usize
                        } else {
                            0
                        };
                        if got.len() != expected {
                            return fail(format!(
                                "N={n_bath} ({sigma},{sigma_p},{cap},{cap_p}): {} pairs vs {expected}",
                                got.len()
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Two runs of the same seeded configuration produce byte-identical output
/// files, including with the jittered grid.
fn c11_determinism() -> Check {
    let text = "eta = 0.01\nn_osc = 80\nomega_min = 0.05\nomega_max = 5\n\
                grid = jittered\nepsilon_floor = 0.5\nseed = 42\nsamples = 400\n";
    let cfg = RunConfig::from_str(text).map_err(|e| e.to_string())?;
    let mut snapshots: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let files = cmd_simulate(&cfg, dir.path()).map_err(|e| e.to_string())?;
        let mut snap = Vec::new();
        for f in files {
            let name = f.file_name().unwrap().to_string_lossy().into_owned();
            let bytes = std::fs::read(&f).map_err(|e| e.to_string())?;
            snap.push((name, bytes));
        }
        snap.sort();
        snapshots.push(snap);
    }
    if snapshots[0].len() != 3 {
        return fail(format!("expected 3 output files, got {}", snapshots[0].len()));
    }
    for ((name_a, bytes_a), (name_b, bytes_b)) in snapshots[0].iter().zip(&snapshots[1]) {
        if name_a != name_b || bytes_a != bytes_b {
            return fail(format!("{name_a} differs between identical runs"));
        }
    }
    Ok(())
}
