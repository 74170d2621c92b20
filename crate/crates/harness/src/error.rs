use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] pseudoloc_core::Error),
    #[error("configuration: {0}")]
    Config(String),
    #[error("unknown profile {0:?}")]
    UnknownProfile(String),
    #[error("{0}")]
    InvalidArgument(String),
    #[error("oracle resolution {0} exceeds the cap of 26")]
    ResolutionCap(u32),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
