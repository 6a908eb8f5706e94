use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degenerate point cloud: {0}")]
    DegenerateCloud(String),

    #[error("no graspable surface: {0}")]
    NoGraspSurface(String),

    #[error("invalid contacts: {0}")]
    InvalidContacts(String),

    #[error("degenerate contacts: {0}")]
    DegenerateContacts(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("invalid cluster count k={k} for {n} samples")]
    InvalidK { k: usize, n: usize },

    #[error("trajectory too short: {0} frames, need at least 2")]
    TooShort(usize),

    #[error("schema error on line {line}: {message}")]
    Schema { line: usize, message: String },

    #[error("missing cloud `{}`", .0.display())]
    MissingCloud(PathBuf),

    #[error("parse error in `{}`: {message}", .path.display())]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
