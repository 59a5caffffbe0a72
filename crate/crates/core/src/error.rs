use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller violated a dimension or shape contract.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Evaluation outside the domain of a datum or of the local example.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("integration blew up at t = {time}")]
    IntegrationBlowup { time: f64 },

    /// Shooting failed to connect the endpoints; the step is too long for the twist condition.
    #[error("no twist on [{t0}, {t1}]: shooting did not converge after {iterations} iterations (residual {residual:.3e}); increase the step count")]
    NoTwist {
        t0: f64,
        t1: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("twist condition fails on every partition up to N = {n_max}")]
    Construction { n_max: usize },

    /// The optimizer landed on the edge of its search window.
    #[error("optimizer window too small at x = {location:?}: {detail}")]
    WindowTooSmall { location: Vec<f64>, detail: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("CFL condition violated: dt * theta / dx = {ratio:.4} > {limit}")]
    Cfl { ratio: f64, limit: f64 },

    #[error("scheme blew up at t = {time}")]
    SchemeBlowup { time: f64 },

    /// Aggregated per-point failures from a field sweep.
    #[error("{count} grid points failed, first at {first_location:?}: {first}")]
    Sweep {
        count: usize,
        first_location: Vec<f64>,
        first: Box<Error>,
    },

    #[error("at t = {time}: {source}")]
    AtInstant {
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn at(self, time: f64) -> Self {
        Error::AtInstant {
            time,
            source: Box::new(self),
        }
    }
}
