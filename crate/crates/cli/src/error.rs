use std::io;
use std::path::PathBuf;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const IO: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const INPUT: u8 = 3;
    pub const RESOURCE: u8 = 4;
    pub const VERIFICATION: u8 = 5;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: bellctx::Error },
    #[error(transparent)]
    Core(#[from] bellctx::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::File { path: path.into(), source: source.into() }
    }

    pub fn exit_code(&self) -> u8 {
        use bellctx::Error as E;
        let core = match self {
            CliError::Config(_) => return exit::CONFIG,
            CliError::File { source, .. } => source,
            CliError::Core(e) => e,
        };
        match core {
            E::Io(_) => exit::IO,
            E::ResourceLimit(_) => exit::RESOURCE,
            E::NumericalStall(_) | E::Verification(_) => exit::VERIFICATION,
            _ => exit::INPUT,
        }
    }
}

/// Attaches a file path to core errors.
pub(crate) trait WithPath<T> {
    fn at(self, path: &std::path::Path) -> Result<T>;
}

impl<T> WithPath<T> for bellctx::Result<T> {
    fn at(self, path: &std::path::Path) -> Result<T> {
        self.map_err(|source| CliError::File { path: path.to_path_buf(), source })
    }
}

impl<T> WithPath<T> for io::Result<T> {
    fn at(self, path: &std::path::Path) -> Result<T> {
        self.map_err(|e| CliError::io(path, e))
    }
}
