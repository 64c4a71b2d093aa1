use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("edge list is empty")]
    EmptyGraph,

    #[error("validation error: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("budget not met: K_user + K_item = {k_user} + {k_item} > {budget}")]
    BudgetNotMet {
        k_user: usize,
        k_item: usize,
        budget: usize,
    },

    #[error("instance has {nodes} nodes, exhaustive search is capped at {max}")]
    SizeCap { nodes: usize, max: usize },

    #[error("assignment file line {line}: {message}")]
    Format { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
