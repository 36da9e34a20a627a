use std::path::PathBuf;

use crate::pmap::Channel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("rectangle ({x0},{y0})-({x1},{y1}) exceeds {width}x{height} map")]
    OutOfBounds {
        x0: i64,
        y0: i64,
        x1: i64,
        y1: i64,
        width: usize,
        height: usize,
    },

    #[error("map dimensions differ: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("channel {0} appears more than once")]
    DuplicateChannel(Channel),

    #[error("config channel {config} does not match integral channel {integral}")]
    ChannelMismatch { config: Channel, integral: Channel },

    #[error("no integral image for channel {0}")]
    MissingChannel(Channel),

    #[error("bad magic {0:?}, expected PMAP or PMAPTXT")]
    BadMagic(String),

    #[error("bad map header: {0}")]
    BadHeader(String),

    #[error("payload truncated: expected {expected} values, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("payload has {0} trailing bytes")]
    TrailingData(usize),

    #[error("negative value {value} at index {index}")]
    NegativeValue { index: usize, value: f32 },

    #[error("non-finite value at index {index}")]
    NonFiniteValue { index: usize },

    #[error("cannot combine an empty set of part scores")]
    EmptyScoreSet,

    #[error("window {id}: {source}")]
    Window {
        id: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("labels are degenerate: {positives} positive, {negatives} negative")]
    DegenerateLabels { positives: usize, negatives: usize },

    #[error("empty search grid")]
    EmptyGrid,

    #[error("channel {channel}: {source}")]
    Channel {
        channel: Channel,
        #[source]
        source: Box<Error>,
    },

    #[error("score list does not align with windows: {0}")]
    IdMismatch(String),

    #[error("ground truth set is empty")]
    EmptyGroundTruth,

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("InvalidSpec: {0}")]
    InvalidSpec(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn for_window(self, id: usize) -> Self {
        Error::Window {
            id,
            source: Box::new(self),
        }
    }

    pub(crate) fn for_channel(self, channel: Channel) -> Self {
        Error::Channel {
            channel,
            source: Box::new(self),
        }
    }

    /// Innermost error, looking through window and channel context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Window { source, .. } | Error::Channel { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures of the environment (files, pipes) rather than of the data.
    pub fn is_io(&self) -> bool {
        match self.root() {
            Error::Io { .. } => true,
            Error::Csv(e) => matches!(e.kind(), csv::ErrorKind::Io(_)),
            Error::Json(e) => e.is_io(),
            _ => false,
        }
    }

    /// Short machine-readable name of the innermost error.
    pub fn kind(&self) -> &'static str {
        match self.root() {
            Error::InvalidWindow(_) => "InvalidWindow",
            Error::OutOfBounds { .. } => "OutOfBounds",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::DuplicateChannel(_) => "DuplicateChannel",
            Error::ChannelMismatch { .. } => "ChannelMismatch",
            Error::MissingChannel(_) => "MissingChannel",
            Error::BadMagic(_) => "BadMagic",
            Error::BadHeader(_) => "BadHeader",
            Error::TruncatedPayload { .. } => "TruncatedPayload",
            Error::TrailingData(_) => "TrailingData",
            Error::NegativeValue { .. } => "NegativeValue",
            Error::NonFiniteValue { .. } => "NonFiniteValue",
            Error::EmptyScoreSet => "EmptyScoreSet",
            Error::DegenerateLabels { .. } => "DegenerateLabels",
            Error::EmptyGrid => "EmptyGrid",
            Error::IdMismatch(_) => "IdMismatch",
            Error::EmptyGroundTruth => "EmptyGroundTruth",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::Parse { .. } => "ParseError",
            Error::Io { .. } => "IoError",
            Error::Json(_) => "JsonError",
            Error::Csv(_) => "CsvError",
            Error::Window { .. } | Error::Channel { .. } => unreachable!("root() unwraps context"),
        }
    }
}
