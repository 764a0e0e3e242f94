use thiserror::Error;

/// Every failure the library can report.
///
/// Variants are grouped by how the CLI maps them onto exit codes: see
/// [`Error::is_numerical`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("time must be finite, got {0}")]
    NonFiniteTime(f64),
    #[error("tabulated schedule has no knots")]
    EmptyTable,
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("eigenvalue {re} + {im}i is not real within tolerance")]
    ComplexEigenvalue { re: f64, im: f64 },
    #[error("matrix is not positive semi-definite: {0}")]
    NotPsd(String),
    #[error("simulation blew up at t = {t}")]
    BlowUp { t: f64 },
    #[error("class offsets do not sum to zero (max |sum| = {0})")]
    CentroidViolation(f64),
    #[error("singular parameters: {0}")]
    SingularParameters(String),
    #[error("basis is rank deficient (numerical rank {rank} < {needed})")]
    RankDeficient { rank: usize, needed: usize },
    #[error("training diverged at iteration {iteration} (loss {loss})")]
    Divergence { iteration: usize, loss: f64 },
    #[error("trial grids do not match: {0}")]
    GridMismatch(String),
    #[error("degenerate initial value: {0}")]
    DegenerateInit(String),
    #[error("normalizer vanishes at t = 0: {0}")]
    ZeroNormalizer(String),
    #[error("bad Savitzky-Golay window: {0}")]
    BadWindow(String),
    #[error("no grid points inside [{t1}, {t2}]")]
    EmptyWindow { t1: f64, t2: f64 },
    #[error("separation direction has zero norm")]
    ZeroDirection,
    #[error("simplex pivot budget of {0} exceeded")]
    BudgetExceeded(usize),
    #[error("all pairwise mean differences vanish")]
    DegenerateMeans,
    #[error("class mean {0} is zero")]
    ZeroMean(usize),
    #[error("operation requires K = 3, got K = {0}")]
    RequiresK3(usize),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("schema error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Schema { line: Option<usize>, msg: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// BlowUp, NoConvergence and friends: the input was fine, the numerics were not.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::BlowUp { .. }
                | Error::NoConvergence { .. }
                | Error::ComplexEigenvalue { .. }
                | Error::Divergence { .. }
                | Error::BudgetExceeded(_)
                | Error::RankDeficient { .. }
        )
    }

    pub(crate) fn schema(msg: impl Into<String>) -> Self {
        Error::Schema { line: None, msg: msg.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
