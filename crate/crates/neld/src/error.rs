use thiserror::Error;

#[derive(Debug, Error)]
pub enum NeldError {
    #[error("strain rate must be nonzero")]
    ZeroRate,
    #[error("lattice remap requested at phase {theta} but the period is {period}")]
    NotAtBoundary { theta: f64, period: f64 },
    #[error("simulation cell is singular")]
    SingularCell,
    #[error("pair cutoff {cutoff} exceeds half the minimum image distance {min_image}")]
    CutoffViolation { cutoff: f64, min_image: f64 },
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },
    #[error("state is in frame {found} but {expected} was required")]
    WrongFrame { expected: String, found: String },
    #[error("not enough data for {context}")]
    InsufficientData { context: String },
    #[error("ensemble difference never exceeds the noise floor; no decay window")]
    NoDecayWindow,
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NeldError>;
