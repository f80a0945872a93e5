use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("model file {path}:{line}:{column}: {message}")]
    ModelFile {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown control parameter `{0}`")]
    UnknownParameter(String),

    #[error("channel {channel}: energy {energy} lies on a band edge, the principal-value term diverges")]
    SingularSelfEnergy { channel: usize, energy: f64 },

    #[error("eigensolver failed ({context}); ‖H‖_F = {frobenius_norm:.6e}, max |H_ij| = {max_entry:.6e}")]
    NumericalFailure {
        context: String,
        frobenius_norm: f64,
        max_entry: f64,
    },

    #[error("branch ambiguity at {location}: overlaps {best:.9e} and {second:.9e} are indistinguishable")]
    BranchAmbiguity {
        location: String,
        best: f64,
        second: f64,
    },

    #[error("spectrum at E = {energy} is defective (exceptional point); perturb the energy or the parameters")]
    EpProximal { energy: f64 },

    #[error("channel {channel} is closed at E = {energy}")]
    ClosedChannel { channel: usize, energy: f64 },

    #[error("internal consistency check `{check}` failed: residual {residual:.3e}")]
    InternalConsistency { check: &'static str, residual: f64 },

    #[error("phase rigidity undefined for a zero wave function")]
    UndefinedRigidity,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable, module-qualified identifier used in run manifests and CLI diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "model/invalid-input",
            Error::ModelFile { .. } => "model/file-syntax",
            Error::UnknownParameter(_) => "model/unknown-parameter",
            Error::SingularSelfEnergy { .. } => "model/singular-self-energy",
            Error::NumericalFailure { .. } => "spectral/numerical-failure",
            Error::BranchAmbiguity { .. } => "spectral/branch-ambiguity",
            Error::EpProximal { .. } => "scattering/ep-proximal",
            Error::ClosedChannel { .. } => "scattering/closed-channel",
            Error::InternalConsistency { .. } => "internal/consistency",
            Error::UndefinedRigidity => "scattering/undefined-rigidity",
            Error::Io(_) => "io/error",
        }
    }

    /// True for errors caused by user input (exit status 1 in the CLI).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::ModelFile { .. }
                | Error::UnknownParameter(_)
                | Error::SingularSelfEnergy { .. }
                | Error::ClosedChannel { .. }
                | Error::Io(_)
        )
    }
}
