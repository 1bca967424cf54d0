use thiserror::Error;

/// Everything that can go wrong while building or evolving a model.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("frequency grid must be strictly increasing with gaps above {floor:e} (offending gap {gap:e} at index {index})")]
    DegenerateFrequencies { index: usize, gap: f64, floor: f64 },

    #[error("frequencies must lie inside [{min}, {max}]")]
    FrequencyOutOfRange { min: f64, max: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("excitation number {sigma} out of range for {sites} sites")]
    SigmaOutOfRange { sigma: u32, sites: usize },

    #[error("state vector is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("brute-force route only supports N ≤ {cap} bath oscillators (got {n})")]
    OracleTooLarge { n: usize, cap: usize },

    #[error("spectrum is numerically degenerate (gap {gap:e} below {floor:e})")]
    DegenerateSpectrum { gap: f64, floor: f64 },

    #[error("root search failed to converge in {0} iterations")]
    NoConvergence(usize),

    #[error("eigenvector residual {0:e} exceeds tolerance")]
    BadEigenvector(f64),

    #[error("reduced density matrix is not positive (p = {p}, |q|² = {q2})")]
    NotAState { p: f64, q2: f64 },

    #[error("moment order {0} exceeds the supported maximum {1}")]
    MomentOrderTooLarge(u32, u32),

    #[error("moment recurrence overflowed at order {0}")]
    MomentOverflow(u32),

    #[error("subspace dimension {dim} exceeds the export cap {cap}")]
    TooLarge { dim: u64, cap: u64 },

    #[error("config: {0}")]
    Config(String),

    #[error("io: {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code for the CLI: 2 config/usage, 3 numeric, 4 io.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) | Error::TooLarge { .. } => 2,
            Error::Io { .. } => 4,
            _ => 3,
        }
    }
}
