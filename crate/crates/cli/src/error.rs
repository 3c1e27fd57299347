use impact_subtype::clustering::ClusterError;
use impact_subtype::dataset::DatasetError;
use impact_subtype::evaluation::EvalError;
use impact_subtype::regression::RegressionError;
use impact_subtype::signal::SignalError;
use impact_subtype::synth::SynthError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable, malformed or unusable input data.
    #[error("data error: {0}")]
    Data(String),
    #[error("config error: {0}")]
    Config(String),
    /// A numerical routine failed on otherwise valid input.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Data(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<SignalError> for CliError {
    fn from(e: SignalError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Data(e.to_string())
    }
}

fn cluster_is_numeric(e: &ClusterError) -> bool {
    matches!(e, ClusterError::NoConvergence { .. } | ClusterError::NonFinite)
}

impl From<RegressionError> for CliError {
    fn from(e: RegressionError) -> Self {
        let numeric = match &e {
            RegressionError::SingularSystem | RegressionError::NonFinite => true,
            RegressionError::Cluster(c) => cluster_is_numeric(c),
            _ => false,
        };
        if numeric {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

impl From<ClusterError> for CliError {
    fn from(e: ClusterError) -> Self {
        RegressionError::Cluster(e).into()
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::InvalidConfig(_) | EvalError::InvalidHoldout(_) | EvalError::UnknownSource(_) => CliError::Config(e.to_string()),
            EvalError::Training { method, source } => match CliError::from(source) {
                CliError::Numeric(m) => CliError::Numeric(format!("training {method}: {m}")),
                other => CliError::Data(format!("training {method}: {other}")),
            },
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidConfig(m) => CliError::Config(m),
            other => CliError::Data(other.to_string()),
        }
    }
}
