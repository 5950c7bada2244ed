use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time step must be nonnegative, got {0}")]
    NegativeTime(f64),

    #[error("grids differ: {0}")]
    GridMismatch(String),

    #[error("coefficient `{name}` has no certified positive lower bound (bounds [{lo}, {hi}])")]
    UnboundedCoefficient {
        name: &'static str,
        lo: f64,
        hi: f64,
    },

    #[error("drift displacement {displacement} exceeds a quarter of the half-width {half_width}")]
    DisplacementOutOfGrid { displacement: f64, half_width: f64 },

    #[error("symbol has no constant-coefficient sampling law: {0}")]
    NoSamplingLaw(String),

    #[error(
        "numerical blow-up at iteration {iteration}: sup-norm {norm:.6e} exceeds guard {bound:.6e}"
    )]
    BlowUp {
        iteration: usize,
        norm: f64,
        bound: f64,
    },

    #[error("malformed grid-function csv: {0}")]
    Csv(String),

    #[error("stable table cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
