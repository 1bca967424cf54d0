//! Flat `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment, keys are lowercase with
//! underscores. Unknown keys are rejected so typos cannot silently fall back
//! to defaults. The full resolved configuration (defaults included) is echoed
//! into summary.json.

use crate::model::{BathBathMode, GridMode, SpectralParams};
use crate::dynamics::{InitialCondition, DEPARTURE_THRESHOLD};
use crate::{C64, Error, Result};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub eta: f64,
    pub s: f64,
    pub omega_c: f64,
    pub omega0: f64,
    pub n_osc: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    pub grid: GridKind,
    pub epsilon_floor: f64,
    pub seed: u64,
    pub alpha: C64,
    pub beta: C64,
    pub bath_bath: BathKind,
    pub g_e: C64,
    pub bath_eta: f64,
    pub t_start: f64,
    pub t_end: Option<f64>,
    pub samples: usize,
    pub departure_threshold: f64,
    pub outputs: Vec<OutputKind>,
    pub out_dir: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Uniform,
    Jittered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BathKind {
    None,
    Constant,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    Series,
    Distribution,
    Summary,
    Hamiltonian,
    Edges,
}

impl OutputKind {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "series" => Ok(Self::Series),
            "distribution" => Ok(Self::Distribution),
            "summary" => Ok(Self::Summary),
            "hamiltonian" => Ok(Self::Hamiltonian),
            "edges" => Ok(Self::Edges),
            other => Err(Error::Config(format!("unknown output kind '{other}'"))),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Self::Series => "series",
            Self::Distribution => "distribution",
            Self::Summary => "summary",
            Self::Hamiltonian => "hamiltonian",
            Self::Edges => "edges",
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "eta",
    "s",
    "omega_c",
    "omega0",
    "n_osc",
    "omega_min",
    "omega_max",
    "grid",
    "epsilon_floor",
    "seed",
    "alpha_re",
    "alpha_im",
    "beta_re",
    "beta_im",
    "bath_bath",
    "g_e_re",
    "g_e_im",
    "bath_eta",
    "t_start",
    "t_end",
    "samples",
    "departure_threshold",
    "outputs",
    "out",
];

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
        Self::from_str(&text)
    }

    #[allow(clippy::should_implement_trait)] // fallible with our own error type
    pub fn from_str(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value', got '{line}'", lineno + 1))
            })?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::Config(format!("line {}: unknown key '{key}'", lineno + 1)));
            }
            if kv.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
        }
        Self::from_map(&kv)
    }

    fn from_map(kv: &BTreeMap<String, String>) -> Result<Self> {
        let get_f64 = |key: &str| -> Result<Option<f64>> {
            kv.get(key)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| Error::Config(format!("{key}: not a number: '{v}'")))
                })
                .transpose()
        };
        let req_f64 = |key: &str| -> Result<f64> {
            get_f64(key)?.ok_or_else(|| Error::Config(format!("missing required key '{key}'")))
        };
        let get_u64 = |key: &str| -> Result<Option<u64>> {
            kv.get(key)
                .map(|v| {
                    v.parse::<u64>()
                        .map_err(|_| Error::Config(format!("{key}: not a non-negative integer: '{v}'")))
                })
                .transpose()
        };

        let eta = req_f64("eta")?;
        let s = get_f64("s")?.unwrap_or(1.0);
        let omega0 = get_f64("omega0")?.unwrap_or(1.0);
        let omega_c = get_f64("omega_c")?.unwrap_or(omega0);
        let n_osc = get_u64("n_osc")?
            .ok_or_else(|| Error::Config("missing required key 'n_osc'".into()))?
            as usize;
        let omega_min = req_f64("omega_min")?;
        let omega_max = req_f64("omega_max")?;
        let grid = match kv.get("grid").map(String::as_str).unwrap_or("uniform") {
            "uniform" => GridKind::Uniform,
            "jittered" => GridKind::Jittered,
            other => return Err(Error::Config(format!("grid: expected uniform|jittered, got '{other}'"))),
        };
        let epsilon_floor = get_f64("epsilon_floor")?.unwrap_or(0.5);
        let seed = get_u64("seed")?.unwrap_or(0);
        let alpha = C64::new(get_f64("alpha_re")?.unwrap_or(0.0), get_f64("alpha_im")?.unwrap_or(0.0));
        let beta = C64::new(get_f64("beta_re")?.unwrap_or(1.0), get_f64("beta_im")?.unwrap_or(0.0));
        let bath_bath = match kv.get("bath_bath").map(String::as_str).unwrap_or("none") {
            "none" => BathKind::None,
            "constant" => BathKind::Constant,
            "spectral" => BathKind::Spectral,
            other => {
                return Err(Error::Config(format!(
                    "bath_bath: expected none|constant|spectral, got '{other}'"
                )))
            }
        };
        let g_e = C64::new(get_f64("g_e_re")?.unwrap_or(0.0), get_f64("g_e_im")?.unwrap_or(0.0));
        let bath_eta = get_f64("bath_eta")?.unwrap_or(0.0);
        let t_start = get_f64("t_start")?.unwrap_or(0.0);
        let t_end = get_f64("t_end")?;
        let samples = get_u64("samples")?.unwrap_or(2000) as usize;
        let departure_threshold = get_f64("departure_threshold")?.unwrap_or(DEPARTURE_THRESHOLD);
        let outputs = match kv.get("outputs") {
            None => vec![OutputKind::Series, OutputKind::Distribution, OutputKind::Summary],
            Some(list) => list
                .split(',')
                .map(|x| OutputKind::parse(x.trim()))
                .collect::<Result<Vec<_>>>()?,
        };
        let out_dir = kv.get("out").cloned();

        let cfg = Self {
            eta,
            s,
            omega_c,
            omega0,
            n_osc,
            omega_min,
            omega_max,
            grid,
            epsilon_floor,
            seed,
            alpha,
            beta,
            bath_bath,
            g_e,
            bath_eta,
            t_start,
            t_end,
            samples,
            departure_threshold,
            outputs,
            out_dir,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        SpectralParams::new(self.eta, self.s, self.omega_c)
            .map_err(|e| Error::Config(e.to_string()))?;
        if !(self.omega0 > 0.0) {
            return Err(Error::Config(format!("omega0 must be positive, got {}", self.omega0)));
        }
        if self.n_osc == 0 {
            return Err(Error::Config("n_osc must be at least 1".into()));
        }
        if !(self.omega_min > 0.0) || !(self.omega_max > self.omega_min) {
            return Err(Error::Config(format!(
                "need 0 < omega_min < omega_max, got [{}, {}]",
                self.omega_min, self.omega_max
            )));
        }
        if self.grid == GridKind::Jittered && !(0.0..1.0).contains(&self.epsilon_floor) {
            return Err(Error::Config(format!(
                "epsilon_floor must be in [0, 1), got {}",
                self.epsilon_floor
            )));
        }
        InitialCondition::new(self.alpha, self.beta).map_err(|_| {
            Error::Config(format!(
                "initial amplitudes not normalized: |alpha|²+|beta|² = {}",
                self.alpha.norm_sqr() + self.beta.norm_sqr()
            ))
        })?;
        if self.samples < 2 {
            return Err(Error::Config(format!("samples must be ≥ 2, got {}", self.samples)));
        }
        if let Some(te) = self.t_end {
            if !(te > self.t_start) {
                return Err(Error::Config(format!(
                    "t_end ({te}) must exceed t_start ({})",
                    self.t_start
                )));
            }
        }
        if !(self.departure_threshold > 0.0) {
            return Err(Error::Config("departure_threshold must be positive".into()));
        }
        if self.bath_bath == BathKind::Spectral && !(self.bath_eta > 0.0) {
            return Err(Error::Config("bath_eta must be positive for bath_bath = spectral".into()));
        }
        Ok(())
    }

    pub fn spectral_params(&self) -> SpectralParams {
        SpectralParams::new(self.eta, self.s, self.omega_c).expect("validated at parse time")
    }

    pub fn grid_mode(&self) -> GridMode {
        match self.grid {
            GridKind::Uniform => GridMode::Uniform,
            GridKind::Jittered => {
                GridMode::Jittered { epsilon_floor: self.epsilon_floor, seed: self.seed }
            }
        }
    }

    pub fn bath_bath_mode(&self) -> BathBathMode {
        match self.bath_bath {
            BathKind::None => BathBathMode::None,
            BathKind::Constant => BathBathMode::Constant(self.g_e),
            BathKind::Spectral => {
                BathBathMode::Spectral { etas: vec![self.bath_eta; self.n_osc], s: self.s }
            }
        }
    }

    pub fn initial_condition(&self) -> InitialCondition {
        InitialCondition::new(self.alpha, self.beta).expect("validated at parse time")
    }

    /// Resolved time window: defaults to 20 population lifetimes.
    pub fn time_window(&self) -> (f64, f64) {
        let t_end = self
            .t_end
            .unwrap_or_else(|| self.t_start + 20.0 / self.spectral_params().markov_rate(self.omega0));
        (self.t_start, t_end)
    }

    /// The full resolved configuration for the summary echo, in key order.
    pub fn echo(&self) -> BTreeMap<String, serde_json::Value> {
        let num = |x: f64| serde_json::Value::from(x);
        let mut m = BTreeMap::new();
        m.insert("eta".into(), num(self.eta));
        m.insert("s".into(), num(self.s));
        m.insert("omega_c".into(), num(self.omega_c));
        m.insert("omega0".into(), num(self.omega0));
        m.insert("n_osc".into(), serde_json::Value::from(self.n_osc));
        m.insert("omega_min".into(), num(self.omega_min));
        m.insert("omega_max".into(), num(self.omega_max));
        m.insert(
            "grid".into(),
            match self.grid {
                GridKind::Uniform => "uniform",
                GridKind::Jittered => "jittered",
            }
            .into(),
        );
        m.insert("epsilon_floor".into(), num(self.epsilon_floor));
        m.insert("seed".into(), serde_json::Value::from(self.seed));
        m.insert("alpha_re".into(), num(self.alpha.re));
        m.insert("alpha_im".into(), num(self.alpha.im));
        m.insert("beta_re".into(), num(self.beta.re));
        m.insert("beta_im".into(), num(self.beta.im));
        m.insert(
            "bath_bath".into(),
            match self.bath_bath {
                BathKind::None => "none",
                BathKind::Constant => "constant",
                BathKind::Spectral => "spectral",
            }
            .into(),
        );
        m.insert("g_e_re".into(), num(self.g_e.re));
        m.insert("g_e_im".into(), num(self.g_e.im));
        m.insert("bath_eta".into(), num(self.bath_eta));
        m.insert("t_start".into(), num(self.time_window().0));
        m.insert("t_end".into(), num(self.time_window().1));
        m.insert("samples".into(), serde_json::Value::from(self.samples));
        m.insert("departure_threshold".into(), num(self.departure_threshold));
        m.insert(
            "outputs".into(),
            serde_json::Value::from(
                self.outputs.iter().map(|o| o.name()).collect::<Vec<_>>(),
            ),
        );
        m
    }
}
