use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice spec: {0}")]
    InvalidSpec(String),

    #[error("resource cap exceeded: {what} requires {needed}, cap is {cap}")]
    ResourceCap {
        what: &'static str,
        needed: u64,
        cap: u64,
    },

    #[error("invalid noise model: {0}")]
    InvalidNoise(String),

    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),

    #[error("invalid detector config: {0}")]
    InvalidDetector(String),

    #[error("window too small: {points} points with {skips} interior skips need more than the {sites} available sites")]
    WindowTooSmall {
        points: usize,
        skips: usize,
        sites: usize,
    },

    #[error("k = {k} exceeds k_max = {k_max}")]
    KExceedsMax { k: usize, k_max: usize },

    #[error("oracle instance too large: {sites} sites (max {max})")]
    OracleTooLarge { sites: usize, max: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
