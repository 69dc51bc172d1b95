use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("expert and random baselines are equal ({0}); performance is undefined")]
    DegenerateBaseline(f64),

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("policy asked to act on a terminal state")]
    PolicyOnTerminalState,

    #[error("environment stepped after episode end; call reset first")]
    StepAfterDone,

    #[error("invalid action space: {0}")]
    InvalidActionSpace(String),

    #[error("episode with seed {seed} failed at step {step}: {reason}")]
    EpisodeFailed { seed: u64, step: usize, reason: String },

    #[error("episode {index} did not reach the acceptance threshold after all retries")]
    AcceptanceExhausted { index: usize },

    #[error("unknown registry key `{0}`")]
    UnknownRegistryKey(String),

    #[error("duplicate registry key `{0}`")]
    DuplicateRegistryKey(String),

    #[error("invalid registry: {0}")]
    InvalidRegistry(String),

    #[error("unknown environment or expert `{0}`")]
    UnknownEnvironment(String),

    #[error("episode indices are not contiguous from 0: {0}")]
    NonContiguousEpisodes(String),

    #[error("{path}: not an ILDS file")]
    NotAnIldsFile { path: PathBuf },

    #[error("corrupt file: {0}")]
    CorruptFile(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("checksum mismatch for {path}: expected {expected}, got {actual}")]
    ChecksumMismatch {
        path: PathBuf,
        expected: String,
        actual: String,
    },

    #[error("fetch of {url} failed: {reason}")]
    FetchError { url: String, reason: String },

    #[error("split is empty")]
    EmptySplit,

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("no evaluation seeds survived the leakage check ({checked} candidates checked)")]
    NoEvalSeeds { checked: usize },

    #[error("seed collision: {0}")]
    SeedCollision(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
