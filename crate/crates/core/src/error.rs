use thiserror::Error;

/// Errors raised by mesh construction, projections, solvers and studies.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point x = {x} lies outside the domain [{a}, {b}]")]
    OutsideDomain { x: f64, a: f64, b: f64 },

    #[error(
        "flux parameters are not real with alpha2 = -alpha1; projections need the real conservative family"
    )]
    NotRealMode,

    #[error("interface blocks are singular (alpha1^2 + beta1*beta2 = 1/4); use the local projection")]
    LocalDegenerate,

    #[error("projection does not exist: {0}")]
    NonExistent(String),

    #[error("ill-conditioned system: {0}")]
    IllConditioned(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("time integration diverged: {0}")]
    Diverged(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics (non-existence, singular or
    /// ill-conditioned solves), as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::LocalDegenerate
                | Error::NonExistent(_)
                | Error::IllConditioned(_)
                | Error::Singular(_)
                | Error::Diverged(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
