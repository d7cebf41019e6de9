use alloc::string::String;

/// Errors raised by geometry, objective and solver operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("tangent vectors are based at different points")]
    MismatchedBase,
    #[error("points live on different manifolds")]
    MismatchedKind,
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("lambda {lambda} does not exceed the largest Lipschitz constant {max_lipschitz}")]
    LambdaTooSmall { lambda: f64, max_lipschitz: f64 },
    #[error("lambda {lambda} exceeds the upper bound {lambda_bar}")]
    LambdaTooLarge { lambda: f64, lambda_bar: f64 },
    #[error("starting value {start} is above the level-set reference value {reference}")]
    StartOutsideLevelSet { start: f64, reference: f64 },
    #[error("iterate {k} left the level set: f = {value} > {reference}")]
    LevelSetViolated { k: usize, value: f64, reference: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
