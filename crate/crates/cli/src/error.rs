use feedback_phase::gphase::PhaseError;
use feedback_phase::integrator::IntegrationError;
use feedback_phase::model::ModelError;
use feedback_phase::sweep::SweepError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

impl CliError {
    /// 2 for configuration errors, 3 for numeric failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) | CliError::Image(_) => 1,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<PhaseError> for CliError {
    fn from(e: PhaseError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<IntegrationError> for CliError {
    fn from(e: IntegrationError) -> Self {
        CliError::Numeric(e.to_string())
    }
}
