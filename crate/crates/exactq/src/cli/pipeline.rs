//! Orchestration behind the subcommands: model → subspace → eigen → dynamics,
//! plus the deterministic CSV/JSON writers.
//!
//! Output formatting contract: CSV files are comma-separated with a header
//! row, LF line endings, numeric fields printed in Rust's default float
//! notation (the shortest representation that round-trips, at most 17
//! significant digits). JSON keys are emitted in sorted order. Files are
//! written to a sibling `*.tmp` and renamed into place, so readers never see
//! a partial file and identical runs are byte-identical.

use super::config::{BathKind, OutputKind, RunConfig};
use crate::dynamics::{
    self, DepartureReport, GammaSeries, InitialCondition, QubitState,
};
use crate::eigen::{arrowhead_decomposition, dense_hermitian_eig, SpectralDecomposition};
use crate::model::{BathBathMode, BathGrid, CouplingMatrix};
use crate::subspace::{
    build_reduced_hamiltonian, enumerate_basis, list_interaction_edges, oracle_evolve_and_trace,
};
use crate::{C64, Error, Result};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Maximum basis rows the subspace exporter will write.
pub const EXPORT_CAP: u64 = 100_000;

const SUMMARY_MOMENTS: u32 = 6;

/// Everything the pipeline derives from one configuration.
pub struct Solution {
    pub coupling_matrix: CouplingMatrix,
    pub decomposition: SpectralDecomposition,
    pub series: GammaSeries,
}

/// Build the model and solve the Σ=1 eigenproblem. Independent reservoirs
/// take the arrowhead fast path; bath–bath couplings fall back to the dense
/// Hermitian solver.
pub fn solve(cfg: &RunConfig) -> Result<Solution> {
    let params = cfg.spectral_params();
    let grid = BathGrid::sample(cfg.n_osc, cfg.omega_min, cfg.omega_max, cfg.grid_mode())?;
    let couplings = grid.couplings(&params, None)?;
    let coupling_matrix = CouplingMatrix::build(cfg.omega0, &grid, &couplings, &cfg.bath_bath_mode())?;
    let decomposition = solve_sigma1(&coupling_matrix)?;
    let series = GammaSeries::from_decomposition(&decomposition)?;
    Ok(Solution { coupling_matrix, decomposition, series })
}

/// Σ=1 spectral decomposition of an already-built coupling matrix.
pub fn solve_sigma1(g: &CouplingMatrix) -> Result<SpectralDecomposition> {
    if g.is_arrowhead() {
        arrowhead_decomposition(g.omega0(), &g.bath_frequencies(), &g.system_couplings())
    } else {
        let basis = enumerate_basis(g.bath_len(), 1)?;
        let h1 = build_reduced_hamiltonian(g, &basis)?;
        dense_hermitian_eig(&h1)
    }
}

/// ⟨ωⁿ⟩ by the first-column power recurrence. Reduces to the arrowhead
/// recurrence when the reservoir is independent; with bath–bath couplings it
/// runs the same scheme on the full first column.
pub fn moments_recurrence(g: &CouplingMatrix, n_max: u32) -> Result<Vec<f64>> {
    if g.is_arrowhead() {
        return dynamics::spectral_moments_from_recurrence(
            g.omega0(),
            &g.bath_frequencies(),
            &g.system_couplings(),
            n_max,
        );
    }
    let basis = enumerate_basis(g.bath_len(), 1)?;
    let h1 = build_reduced_hamiltonian(g, &basis)?;
    let dim = h1.nrows();
    let mut col = nalgebra::DVector::from_element(dim, C64::new(0.0, 0.0));
    col[0] = C64::new(1.0, 0.0);
    let mut out = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        col = &h1 * col;
        let m = col[0].re;
        if !m.is_finite() || m.abs() > 1e300 {
            return Err(Error::MomentOverflow(n));
        }
        out.push(m);
    }
    Ok(out)
}

/// One scalar row of the summary / sweep outputs.
pub struct RunStats {
    pub p_eq: f64,
    pub report: DepartureReport,
}

pub fn run_stats(cfg: &RunConfig, sol: &Solution) -> Result<RunStats> {
    let p_eq = sol.series.equilibrium_probability()?;
    let (t0, t1) = cfg.time_window();
    let times = linspace(t0, t1, cfg.samples);
    let j0 = cfg.spectral_params().markov_rate(cfg.omega0);
    let exact: Vec<f64> = times.iter().map(|&t| sol.series.abs_gamma_sq(t)).collect();
    let markov: Vec<f64> = times.iter().map(|&t| (-j0 * t).exp()).collect();
    let report = dynamics::departure_time(&exact, &markov, &times, cfg.departure_threshold)?;
    Ok(RunStats { p_eq, report })
}

pub fn linspace(t0: f64, t1: f64, samples: usize) -> Vec<f64> {
    let dt = (t1 - t0) / (samples - 1) as f64;
    (0..samples).map(|k| t0 + k as f64 * dt).collect()
}

fn fmt_f64(x: f64) -> String {
    // normalize -0.0 so identical values can't print two ways
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x}")
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io_err = |e: std::io::Error| Error::Io { path: path.display().to_string(), source: e };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)
        .map_err(|e| Error::Io { path: tmp.display().to_string(), source: e })?;
    std::fs::rename(&tmp, path).map_err(io_err)
}

/// `simulate`: solve one configuration and emit the requested artifacts.
/// Returns the list of files written.
pub fn cmd_simulate(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::Io { path: out_dir.display().to_string(), source: e })?;
    let sol = solve(cfg)?;
    let ic = cfg.initial_condition();
    let mut written = Vec::new();

    for kind in &cfg.outputs {
        let path = match kind {
            OutputKind::Distribution => {
                let p = out_dir.join("distribution.csv");
                write_distribution(&p, &sol)?;
                p
            }
            OutputKind::Series => {
                let p = out_dir.join("series.csv");
                write_series(&p, cfg, &sol, &ic)?;
                p
            }
            OutputKind::Summary => {
                let p = out_dir.join("summary.json");
                write_summary(&p, cfg, &sol)?;
                p
            }
            OutputKind::Hamiltonian => {
                let p = out_dir.join("hamiltonian.csv");
                let basis = enumerate_basis(sol.coupling_matrix.bath_len(), 1)?;
                let h = build_reduced_hamiltonian(&sol.coupling_matrix, &basis)?;
                write_matrix_csv(&p, &h)?;
                p
            }
            OutputKind::Edges => {
                let p = out_dir.join("edges.csv");
                let basis = enumerate_basis(sol.coupling_matrix.bath_len(), 1)?;
                write_edges_csv(&p, &sol.coupling_matrix, &basis)?;
                p
            }
        };
        written.push(path);
    }
    Ok(written)
}

fn write_distribution(path: &Path, sol: &Solution) -> Result<()> {
    let mut out = String::from("j,omega_j,p_j\n");
    let p = sol.series.probabilities();
    let w = sol.series.frequencies();
    for j in 0..p.len() {
        let _ = writeln!(out, "{},{},{}", j + 1, fmt_f64(w[j]), fmt_f64(p[j]));
    }
    write_atomic(path, out.as_bytes())
}

fn write_series(path: &Path, cfg: &RunConfig, sol: &Solution, ic: &InitialCondition) -> Result<()> {
    let (t0, t1) = cfg.time_window();
    let times = linspace(t0, t1, cfg.samples);
    let j0 = cfg.spectral_params().markov_rate(cfg.omega0);
    let mut out =
        String::from("t,abs_gamma_sq,re_gamma,im_gamma,p_exact,re_q,im_q,p_markov,entropy_nats\n");
    for &t in &times {
        let g = sol.series.gamma(t);
        let rho = dynamics::density_matrix(ic, &sol.series, t);
        let markov = dynamics::markov_state(ic, j0, cfg.omega0, t);
        let s = dynamics::von_neumann_entropy(&rho)?;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            fmt_f64(t),
            fmt_f64(g.norm_sqr()),
            fmt_f64(g.re),
            fmt_f64(g.im),
            fmt_f64(rho.p),
            fmt_f64(rho.q.re),
            fmt_f64(rho.q.im),
            fmt_f64(markov.p),
            fmt_f64(s)
        );
    }
    write_atomic(path, out.as_bytes())
}

fn write_summary(path: &Path, cfg: &RunConfig, sol: &Solution) -> Result<()> {
    let stats = run_stats(cfg, sol)?;
    let m_eig = dynamics::spectral_moments_from_eig(&sol.series, SUMMARY_MOMENTS);
    let m_rec = moments_recurrence(&sol.coupling_matrix, SUMMARY_MOMENTS)?;
    let value = serde_json::json!({
        "tool": "exactq",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "p_eq": stats.p_eq,
        "half_life": stats.report.tau_half,
        "departure_time": stats.report.departure,
        "moments_eig": m_eig,
        "moments_recurrence": m_rec,
        "config": cfg.echo(),
    });
    let mut bytes = serde_json::to_vec_pretty(&value).expect("json serialization");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn write_matrix_csv(path: &Path, h: &DMatrix<C64>) -> Result<()> {
    let mut out = String::from("row,col,re,im\n");
    for i in 0..h.nrows() {
        for j in 0..h.ncols() {
            let z = h[(i, j)];
            if z != C64::new(0.0, 0.0) {
                let _ = writeln!(out, "{},{},{},{}", i + 1, j + 1, fmt_f64(z.re), fmt_f64(z.im));
            }
        }
    }
    write_atomic(path, out.as_bytes())
}

fn write_edges_csv(path: &Path, g: &CouplingMatrix, basis: &[u64]) -> Result<()> {
    let edges = list_interaction_edges(g, basis)?;
    let mut out = String::from("from,to,re,im\n");
    for e in edges {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            e.from,
            e.to,
            fmt_f64(e.coupling.re),
            fmt_f64(e.coupling.im)
        );
    }
    write_atomic(path, out.as_bytes())
}

/// Sweep axes: which scalar of the template each value replaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Eta,
    S,
    N,
    Ge,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "eta" => Ok(Self::Eta),
            "s" => Ok(Self::S),
            "n" | "N" => Ok(Self::N),
            "g_e" => Ok(Self::Ge),
            other => Err(Error::Config(format!("unknown sweep axis '{other}' (eta|s|n|g_e)"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Eta => "eta",
            Self::S => "s",
            Self::N => "n",
            Self::Ge => "g_e",
        }
    }

    pub fn apply(&self, cfg: &RunConfig, value: f64) -> Result<RunConfig> {
        let mut c = cfg.clone();
        match self {
            Self::Eta => c.eta = value,
            Self::S => c.s = value,
            Self::N => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(Error::Config(format!("axis n needs positive integers, got {value}")));
                }
                c.n_osc = value as usize;
            }
            Self::Ge => {
                c.bath_bath = BathKind::Constant;
                c.g_e = C64::new(value, 0.0);
            }
        }
        Ok(c)
    }
}

/// `sweep`: one solve per axis value, rows in input order regardless of the
/// worker count.
pub fn cmd_sweep(
    cfg: &RunConfig,
    axis: SweepAxis,
    values: &[f64],
    jobs: usize,
    out_dir: &Path,
) -> Result<PathBuf> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::Io { path: out_dir.display().to_string(), source: e })?;
    let configs: Vec<RunConfig> =
        values.iter().map(|&v| axis.apply(cfg, v)).collect::<Result<_>>()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let rows: Vec<Result<RunStats>> = pool.install(|| {
        use rayon::prelude::*;
        configs.par_iter().map(|c| run_stats(c, &solve(c)?)).collect()
    });

    let mut out = String::from("axis,value,p_eq,half_life,departure_time\n");
    for (v, row) in values.iter().zip(rows) {
        let row = row?;
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            axis.name(),
            fmt_f64(*v),
            fmt_f64(row.p_eq),
            row.report.tau_half.map(fmt_f64).unwrap_or_default(),
            row.report.departure.map(fmt_f64).unwrap_or_default()
        );
    }
    let path = out_dir.join("sweep.csv");
    write_atomic(&path, out.as_bytes())?;
    Ok(path)
}

/// `subspace`: export basis, Hamiltonian block, and interaction edges for an
/// explicit coupling matrix read from a `row,col,re,im` CSV (1-based,
/// Hermitian; missing mirror entries are filled by conjugation).
pub fn cmd_subspace(
    n_bath: usize,
    sigma: u32,
    matrix_path: &Path,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let dim = crate::subspace::binomial(n_bath as u64 + 1, sigma as u64);
    if dim > EXPORT_CAP {
        return Err(Error::TooLarge { dim, cap: EXPORT_CAP });
    }
    let g = CouplingMatrix::from_matrix(read_matrix_csv(matrix_path, n_bath + 1)?)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::Io { path: out_dir.display().to_string(), source: e })?;
    let basis = enumerate_basis(n_bath, sigma)?;

    let basis_path = out_dir.join("basis.csv");
    let mut out = String::from("index,code,bitstring\n");
    for (k, &code) in basis.iter().enumerate() {
        let bits: String = crate::subspace::decode(code, n_bath + 1)?
            .iter()
            .map(|b| if *b == 1 { '1' } else { '0' })
            .collect();
        let _ = writeln!(out, "{},{},{}", k + 1, code, bits);
    }
    write_atomic(&basis_path, out.as_bytes())?;

    let h = build_reduced_hamiltonian(&g, &basis)?;
    let h_path = out_dir.join("hamiltonian.csv");
    write_matrix_csv(&h_path, &h)?;

    let e_path = out_dir.join("edges.csv");
    write_edges_csv(&e_path, &g, &basis)?;

    Ok(vec![basis_path, h_path, e_path])
}

fn read_matrix_csv(path: &Path, dim: usize) -> Result<DMatrix<C64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
    let mut m = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    let mut seen = vec![false; dim * dim];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with("row")) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::Config(format!(
                "{}:{}: expected row,col,re,im",
                path.display(),
                lineno + 1
            )));
        }
        let bad = |what: &str| {
            Error::Config(format!("{}:{}: bad {what} field", path.display(), lineno + 1))
        };
        let i: usize = fields[0].parse().map_err(|_| bad("row"))?;
        let j: usize = fields[1].parse().map_err(|_| bad("col"))?;
        let re: f64 = fields[2].parse().map_err(|_| bad("re"))?;
        let im: f64 = fields[3].parse().map_err(|_| bad("im"))?;
        if i == 0 || j == 0 || i > dim || j > dim {
            return Err(Error::Config(format!(
                "{}:{}: index ({i},{j}) outside 1..{dim}",
                path.display(),
                lineno + 1
            )));
        }
        m[(i - 1, j - 1)] = C64::new(re, im);
        seen[(i - 1) * dim + (j - 1)] = true;
    }
    // fill unspecified mirror entries by Hermitian symmetry
    for i in 0..dim {
        for j in 0..dim {
            if seen[i * dim + j] && !seen[j * dim + i] {
                m[(j, i)] = m[(i, j)].conj();
            }
        }
    }
    Ok(m)
}

/// One self-test check: name plus outcome detail.
pub struct Check {
    pub name: &'static str,
    pub result: std::result::Result<(), String>,
}

/// `selftest`: the invariant suites, machine-readable one line per check.
pub fn selftest_checks() -> Vec<Check> {
    vec![
        Check { name: "secular_interlacing", result: check_interlacing() },
        Check { name: "moment_identities", result: check_moment_identities() },
        Check { name: "oracle_equivalence", result: check_oracle_equivalence() },
        Check { name: "reference_equilibrium", result: check_reference_equilibrium() },
    ]
}

fn reference_matrix(ge: f64) -> Result<CouplingMatrix> {
    // four oscillators at {0.5, 0.75, 1.25, 1.5}, equal couplings 0.1
    let grid = BathGrid::from_frequencies(vec![0.5, 0.75, 1.25, 1.5], 0.25, 1.75)?;
    let gs = vec![C64::new(0.1, 0.0); 4];
    let mode =
        if ge == 0.0 { BathBathMode::None } else { BathBathMode::Constant(C64::new(ge, 0.0)) };
    CouplingMatrix::build(1.0, &grid, &gs, &mode)
}

fn check_interlacing() -> std::result::Result<(), String> {
    let mut rng = ChaCha12Rng::seed_from_u64(0xe1);
    let n = 40;
    let mut freqs = Vec::with_capacity(n);
    let mut w = 0.2;
    for _ in 0..n {
        w += rng.gen_range(0.01..0.1);
        freqs.push(w);
    }
    let gs: Vec<C64> =
        (0..n).map(|_| C64::from_polar(rng.gen_range(0.001..0.1), rng.gen_range(0.0..6.0))).collect();
    let ev = arrowhead_decomposition(1.0, &freqs, &gs)
        .map_err(|e| e.to_string())?
        .eigenvalues;
    for (k, &wk) in freqs.iter().enumerate() {
        if !(ev[k] < wk && wk < ev[k + 1]) {
            return Err(format!("eigenvalue {k} does not interlace pole {wk}"));
        }
    }
    Ok(())
}

fn check_moment_identities() -> std::result::Result<(), String> {
    let g = reference_matrix(0.0).map_err(|e| e.to_string())?;
    let d = solve_sigma1(&g).map_err(|e| e.to_string())?;
    let series = GammaSeries::from_decomposition(&d).map_err(|e| e.to_string())?;
    let m = dynamics::spectral_moments_from_eig(&series, 2);
    let omega0 = g.omega0();
    if (m[0] - omega0).abs() > 1e-10 * omega0 {
        return Err(format!("first moment {} != omega0 {}", m[0], omega0));
    }
    let g2: f64 = g.system_couplings().iter().map(|c| c.norm_sqr()).sum();
    let var = m[1] - m[0] * m[0];
    if (var - g2).abs() > 1e-10 * g2.max(1e-300) {
        return Err(format!("variance {var} != coupling sum {g2}"));
    }
    Ok(())
}

fn check_oracle_equivalence() -> std::result::Result<(), String> {
    let mut rng = ChaCha12Rng::seed_from_u64(0xac);
    let n = 6;
    let mut freqs = Vec::with_capacity(n);
    let mut w = 0.4;
    for _ in 0..n {
        w += rng.gen_range(0.05..0.3);
        freqs.push(w);
    }
    let lo = freqs[0] - 0.1;
    let hi = freqs[n - 1] + 0.1;
    let grid = BathGrid::from_frequencies(freqs.clone(), lo, hi).map_err(|e| e.to_string())?;
    let gs: Vec<C64> =
        (0..n).map(|_| C64::from_polar(rng.gen_range(0.01..0.1), rng.gen_range(0.0..6.0))).collect();
    let g = CouplingMatrix::build(1.0, &grid, &gs, &BathBathMode::None).map_err(|e| e.to_string())?;
    let d = solve_sigma1(&g).map_err(|e| e.to_string())?;
    let series = GammaSeries::from_decomposition(&d).map_err(|e| e.to_string())?;
    let ic = InitialCondition::balanced();

    let full = 1usize << (n + 1);
    let mut psi = vec![C64::new(0.0, 0.0); full];
    psi[0] = ic.alpha();
    psi[1] = ic.beta();
    for k in 0..10 {
        let t = k as f64 * 1.7;
        let closed = dynamics::density_matrix(&ic, &series, t);
        let brute = oracle_evolve_and_trace(&g, &psi, t).map_err(|e| e.to_string())?;
        if !states_close(&closed, &brute, 1e-10) {
            return Err(format!("closed form and brute force disagree at t = {t}"));
        }
    }
    Ok(())
}

fn states_close(a: &QubitState, b: &QubitState, tol: f64) -> bool {
    (a.p - b.p).abs() <= tol && (a.q - b.q).norm() <= tol
}

fn check_reference_equilibrium() -> std::result::Result<(), String> {
    for (ge, want) in [(0.0, 0.5335), (0.1, 0.6185)] {
        let g = reference_matrix(ge).map_err(|e| e.to_string())?;
        let d = solve_sigma1(&g).map_err(|e| e.to_string())?;
        let series = GammaSeries::from_decomposition(&d).map_err(|e| e.to_string())?;
        let p = series.equilibrium_probability().map_err(|e| e.to_string())?;
        if (p - want).abs() > 5e-4 {
            return Err(format!("equilibrium probability {p} for g_e = {ge}, expected {want}"));
        }
    }
    Ok(())
}
