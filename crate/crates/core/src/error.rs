use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Argument outside the domain of a mathematical function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid call arguments (sizes, indices, empty inputs).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Design parameters violating a structural requirement.
    #[error("configuration error: {0}")]
    Config(String),

    /// The plant state left the representable range.
    #[error("integration overflow at t = {time}: {detail}")]
    Overflow { time: f64, detail: String },

    /// A numerical invariant that must hold by construction was broken.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
