use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("alpha = {alpha} is outside the domain of psi (zero or an atom of H)")]
    Domain { alpha: f64 },

    #[error("unsupported derivative order {0} (expected 1 or 3)")]
    UnsupportedOrder(u8),

    #[error("argument {0} must lie in the closed upper half-plane and be nonzero")]
    NotUpperHalfPlane(String),

    #[error("Stieltjes solver did not converge: residual {residual:e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },

    #[error("lambda = {lambda} lies inside the support")]
    InsideSupport { lambda: f64 },

    #[error("probability level {0} is outside [0, 1]")]
    InvalidProbability(f64),

    #[error("spike {alpha} is close; the operation requires a distant spike")]
    CloseSpike { alpha: f64 },

    #[error("spike {alpha} coincides with a realized base eigenvalue")]
    RankCollision { alpha: f64 },

    #[error("spike index {index} out of range ({count} spikes)")]
    SpikeIndex { index: usize, count: usize },

    #[error("p' = {p_prime} is smaller than the number of atoms ({atoms})")]
    TooFewSlots { p_prime: usize, atoms: usize },

    #[error("matrix of size {p} x {n} exceeds the 5e8 entry guard")]
    TooLarge { p: usize, n: usize },

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error("lambda = {lambda} is within {gap:e} of an eigenvalue of the base block")]
    ResolventBlowUp { lambda: f64, gap: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
