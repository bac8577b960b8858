use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not a supported prime modulus (must be prime and at most 65535)")]
    InvalidModulus(u32),
    #[error("subspace dimension {sub} exceeds ambient dimension {ambient}")]
    DimensionOutOfRange { sub: usize, ambient: usize },
    #[error("interpolation failed: {0}")]
    Interpolation(String),
    #[error("invalid group spec: {0}")]
    InvalidGroup(String),
    #[error("group construction failed for {family}: {reason}")]
    GroupConstruction { family: String, reason: String },
    #[error("character table computation failed: {0}")]
    CharacterTable(String),
    #[error("McKay data check failed: {0}")]
    McKay(String),
    #[error("Kleinian stage failed: {0}")]
    Kleinian(String),
    #[error("enumeration budget exceeded: {0}")]
    Budget(String),
    #[error("quiver representation error: {0}")]
    Quiver(String),
    #[error("Hall algebra error: {0}")]
    Hall(String),
    #[error("Kac-Moody stage failed: {0}")]
    KacMoody(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
