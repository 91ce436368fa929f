use pkde_core::CoreError;
use pkde_evalreport::EvalError;
use pkde_labeler::LabelError;
use pkde_nn::NnError;
use pkde_synth::SynthError;
use pkde_tuner::TunerError;
use pkde_xct::XctError;
use thiserror::Error;

/// Failure of a command, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config file or option values.
    #[error("{0}")]
    Usage(String),
    /// Missing, malformed or inconsistent input data.
    #[error("{0}")]
    Data(String),
    /// Divergence or non-finite values during computation.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    /// Same class, message prefixed with `context`.
    pub fn context(self, context: impl std::fmt::Display) -> Self {
        match self {
            CliError::Usage(m) => CliError::Usage(format!("{context}: {m}")),
            CliError::Data(m) => CliError::Data(format!("{context}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{context}: {m}")),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        match e {
            NnError::Diverged { .. } | NnError::Numerical { .. } => CliError::Numerical(e.to_string()),
            NnError::Config(_) => CliError::Usage(e.to_string()),
            NnError::Core(c) => c.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<TunerError> for CliError {
    fn from(e: TunerError) -> Self {
        match e {
            TunerError::AllDiverged(_) => CliError::Numerical(e.to_string()),
            TunerError::Space(_) => CliError::Usage(e.to_string()),
            TunerError::Nn(n) => n.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Config(_) => CliError::Usage(e.to_string()),
            SynthError::Core(c) => c.into(),
            SynthError::Xct(x) => x.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<LabelError> for CliError {
    fn from(e: LabelError) -> Self {
        match e {
            LabelError::Bandwidth(_) | LabelError::Truncation { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<XctError> for CliError {
    fn from(e: XctError) -> Self {
        match e {
            XctError::Core(c) => c.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Core(c) => c.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

/// I/O failure on `path` as a data error.
pub(crate) fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_kind() {
        let diverged = NnError::Diverged { epoch: 1, batch: 0, loss: f64::NAN };
        assert_eq!(CliError::from(diverged).exit_code(), 3);
        assert_eq!(CliError::from(TunerError::AllDiverged(3)).exit_code(), 3);
        assert_eq!(CliError::from(TunerError::Space("lr".into())).exit_code(), 1);
        assert_eq!(CliError::from(NnError::Config("depth".into())).exit_code(), 1);
        assert_eq!(CliError::from(NnError::Data("shape".into())).exit_code(), 2);
        let nested = TunerError::Nn(NnError::Numerical { layer: "head".into(), message: "NaN".into() });
        assert_eq!(CliError::from(nested).exit_code(), 3);
    }
}
