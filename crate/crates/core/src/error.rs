use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{key}`: {msg}")]
    InvalidParams { key: &'static str, msg: String },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("singular interior point: use PV path")]
    SingularInteriorPoint,

    #[error("log case unsupported (kernel exponent p = 1)")]
    LogCaseUnsupported,

    #[error("point {0} is not an endpoint of the set")]
    NotEndpoint(f64),

    #[error("point is not on the boundary of the set")]
    NotOnBoundary,

    #[error("divergent parameter regime: {0}")]
    DivergentRegime(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (estimate {estimate:e}, error bound {error_bound:e})"
    )]
    Quadrature { estimate: f64, error_bound: f64, subdivisions: usize },

    #[error("no root located: ε = {eps:e} may exceed ε̄")]
    NoRoot { eps: f64 },

    #[error("optimizer stalled at iteration {iteration} (step {step:e}, residual {residual:e})")]
    Stalled { iteration: usize, step: f64, residual: f64, state: Box<crate::shapeopt2d::OptimizerState> },
}
