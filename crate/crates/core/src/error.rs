use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the set on which the operation is defined.
    #[error("{what}: {value} is outside the domain ({expected})")]
    Domain {
        what: &'static str,
        value: f64,
        expected: String,
    },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("inadmissible state: {0}")]
    Inadmissible(String),

    /// A follower headway dropped to the collision guard during integration.
    #[error("collision: vehicle {vehicle} headway {headway:e} m at t = {t} s")]
    Collision { vehicle: usize, t: f64, headway: f64 },

    #[error("numerical blow-up at t = {t} s (vehicle {vehicle})")]
    Blowup { vehicle: usize, t: f64 },

    #[error("negative velocity {velocity:e} m/s for vehicle {vehicle} at t = {t} s")]
    NegativeVelocity { vehicle: usize, t: f64, velocity: f64 },

    #[error("leader velocity {velocity} m/s at t = {t} s leaves the band [{v_min}, {v_max}]")]
    LeaderOutOfBand {
        t: f64,
        velocity: f64,
        v_min: f64,
        v_max: f64,
    },

    #[error("mismatch: {0}")]
    Mismatch(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64, expected: impl Into<String>) -> Self {
        Error::Domain {
            what,
            value,
            expected: expected.into(),
        }
    }

    /// True for failures raised by the integrator rather than by input validation.
    pub fn is_integration_failure(&self) -> bool {
        matches!(
            self,
            Error::Collision { .. } | Error::Blowup { .. } | Error::NegativeVelocity { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
