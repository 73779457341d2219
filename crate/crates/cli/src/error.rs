use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: line {line}: {msg}")]
    Csv { path: String, line: u64, msg: String },
    #[error("{path}: {msg}")]
    Input { path: String, msg: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: vortex_core::Error,
    },
    #[error("fit did not converge within {iterations} iterations (rms misfit {rms_misfit})")]
    NotConverged { iterations: usize, rms_misfit: f64 },
}

impl CliError {
    pub fn stage(stage: &'static str) -> impl FnOnce(vortex_core::Error) -> CliError {
        move |source| CliError::Stage { stage, source }
    }

    /// 1 for usage, configuration and input problems, 2 for numerical
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NotConverged { .. } => 2,
            CliError::Stage { source: vortex_core::Error::Ensemble(_), .. } => 2,
            _ => 1,
        }
    }
}
