use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("zero lattice vector used as an active mode")]
    ZeroMode,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("singular fiber: mode n = {n} lies on the circle |k| = |p|")]
    SingularFiber { n: i64 },
    #[error("continued fraction did not converge by depth {depth} (last residual {residual:e})")]
    NoConvergence { depth: usize, residual: f64 },
    #[error("evaluation point is {distance:e} from the continuous band (minimum 1e-3)")]
    NearBand { distance: f64 },
    #[error("no sign change on bracket [{lo}, {hi}]")]
    Bracketing { lo: f64, hi: f64 },
    #[error("argument jump of {jump:.3} rad between boundary samples after maximal refinement")]
    Resolution { jump: f64 },
    #[error("Newton iteration from seed {seed_re}{seed_im:+}i did not converge in {iterations} steps")]
    SeedDivergence { seed_re: f64, seed_im: f64, iterations: usize },
    #[error("linear algebra failure: {0}")]
    Linalg(String),
    #[error("eigenvalue with real part {re:e} is too close to the splitting threshold {eps:e}")]
    Classification { re: f64, eps: f64 },
    #[error("degenerate splitting: {0}")]
    DegenerateSplitting(String),
    #[error("contraction factor {factor:.3} exceeds the limit; shrink delta")]
    DeltaTooLarge { factor: f64 },
    #[error("i/o: {0}")]
    Io(String),
    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
