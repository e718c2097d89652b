use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("geometry: {0}")]
    Geometry(String),

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("multimesh: {0}")]
    MultiMesh(String),

    #[error("assembly: {0}")]
    Assembly(String),

    #[error("boundary condition: {0}")]
    Boundary(String),

    #[error("singular system at pivot {pivot}: {detail}")]
    Singular { pivot: usize, detail: String },

    #[error("relative residual {residual:.3e} exceeds tolerance {tolerance:.1e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("houses {first} and {second} overlap")]
    Overlap { first: String, second: String },

    #[error("invalid scenario: {0}")]
    Validation(String),

    #[error("view: {0}")]
    View(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
