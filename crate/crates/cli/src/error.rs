//! Exit code policy: 1 for anything wrong with the invocation or its
//! inputs, 2 for failures talking to a remote service. Scripts can
//! retry on 2 but not on 1.

use dialign_client::ClientError;
use dialign_core::alignment::AlignmentError;
use dialign_core::audit::AuditError;
use dialign_core::geneval::RunError;
use dialign_core::lexicon::LexiconError;
use dialign_core::ngram::NgramError;
use dialign_core::subword::SubwordError;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Transport(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Transport(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Transport(m) => m,
        }
    }
}

impl From<NgramError> for CliError {
    fn from(e: NgramError) -> Self {
        match e {
            NgramError::Transport { .. } => CliError::Transport(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<AlignmentError> for CliError {
    fn from(e: AlignmentError) -> Self {
        match e {
            AlignmentError::Ngram(inner) => inner.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<AuditError> for CliError {
    fn from(e: AuditError) -> Self {
        match e {
            AuditError::Alignment(inner) => inner.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<LexiconError> for CliError {
    fn from(e: LexiconError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SubwordError> for CliError {
    fn from(e: SubwordError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ClientError> for CliError {
    fn from(e: ClientError) -> Self {
        match e {
            ClientError::Http(inner) => CliError::Transport(inner.to_string()),
            ClientError::Api { status, message } if status >= 500 => {
                CliError::Transport(format!("service error {status}: {message}"))
            }
            ClientError::Api { status, message } => {
                CliError::Input(format!("service rejected request ({status}): {message}"))
            }
        }
    }
}
