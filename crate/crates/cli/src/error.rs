use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config field `{field}`: {message}")]
    Field { field: String, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] resolvent_decay::Error),

    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl ConfigError {
    pub fn field(field: &str, message: impl Into<String>) -> Self {
        ConfigError::Field {
            field: field.to_string(),
            message: message.into(),
        }
    }

    /// Parameter errors from the library keep their field name, spelled as
    /// the matching flag.
    pub fn from_core(err: resolvent_decay::Error) -> Self {
        match err {
            resolvent_decay::Error::InvalidParameter { name, reason } => {
                let field = match name {
                    "N" => "n",
                    other => other,
                };
                ConfigError::field(field, reason)
            }
            other => ConfigError::Core(other),
        }
    }
}
