use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid presentation: {0}")]
    Presentation(String),
    #[error("invalid instance: {0}")]
    Instance(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
