use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter lies outside the domain of the family or kernel.
    #[error("domain error: {0}")]
    Domain(String),

    /// A source density violates one of its structural invariants.
    #[error("invalid source: {0}")]
    InvalidSource(String),

    /// Point mass and improper uniform sources have no pointwise density.
    #[error("{0} source cannot be evaluated pointwise")]
    SentinelEvaluation(&'static str),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// Adaptive quadrature ran out of subdivisions before meeting tolerance.
    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (best estimate {best:e}, error {err:e}, worst interval [{worst_lo:e}, {worst_hi:e}])"
    )]
    NonConvergence {
        best: f64,
        err: f64,
        worst_lo: f64,
        worst_hi: f64,
        subdivisions: usize,
    },

    /// A quadrature failure tagged with the component being integrated.
    #[error("{component}: {source}")]
    Component {
        component: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn in_component(self, component: impl Into<String>) -> Self {
        Error::Component {
            component: component.into(),
            source: Box::new(self),
        }
    }

    /// True for failures of the numerical machinery rather than bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonConvergence { .. } => true,
            Error::Component { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
