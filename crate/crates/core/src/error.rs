use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Invalid input data: dangling references, out-of-range parameters.
    #[error("configuration error: {0}")]
    Config(String),
    /// Power flow or device initialization could not produce a consistent
    /// operating point.
    #[error("initialization error: {0}")]
    Init(String),
    /// A linear system was singular. `index` is the first pivot that vanished.
    #[error("singular matrix at row {index}{}", context.as_deref().map(|c| alloc::format!(" ({c})")).unwrap_or_default())]
    Singular { index: usize, context: Option<String> },
    /// Newton iteration failed inside the time integration.
    #[error("newton failed at t = {time:.6} s after {iterations} iterations (worst residual {residual:.3e} in {equation})")]
    Newton {
        time: f64,
        iterations: usize,
        residual: f64,
        equation: String,
    },
    #[error("event error: {0}")]
    Event(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn init(msg: impl Into<String>) -> Self {
        Error::Init(msg.into())
    }
}
