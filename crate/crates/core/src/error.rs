use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("articulation angle {theta} rad is at or beyond +-pi/2; coupling force is singular")]
    SingularArticulation { theta: f64 },

    #[error("mass matrix ill-conditioned (reciprocal condition estimate {rcond:e})")]
    IllConditioned { rcond: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("integration aborted at t = {time} s: {source}")]
    IntegrationAborted {
        time: f64,
        state: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("input requested at t = {t} s outside the trajectory span [{start}, {end}] s")]
    InputOutOfRange { t: f64, start: f64, end: f64 },

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("invalid maneuver: {0}")]
    InvalidManeuver(String),

    #[error("dataset is missing required channel `{0}`")]
    MissingChannel(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("channel `{channel}`: {message}")]
    Channel { channel: String, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    /// Short machine-readable tag used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::Domain(_) => "domain",
            Error::SingularArticulation { .. } => "singular_articulation",
            Error::IllConditioned { .. } => "ill_conditioned",
            Error::NonFinite(_) => "non_finite",
            Error::IntegrationAborted { .. } => "integration_aborted",
            Error::InputOutOfRange { .. } => "input_out_of_range",
            Error::InvalidTrajectory(_) => "invalid_trajectory",
            Error::InvalidManeuver(_) => "invalid_maneuver",
            Error::MissingChannel(_) => "missing_channel",
            Error::Parse { .. } => "parse",
            Error::Channel { .. } => "channel",
            Error::Config(_) => "config",
            Error::Optimization(_) => "optimization",
            Error::Io { .. } => "io",
            Error::Json { .. } => "json",
        }
    }
}
