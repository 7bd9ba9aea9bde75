use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    /// AEAD rejected a ciphertext: wrong key, or a modified nonce,
    /// ciphertext or authentication tag.
    #[error("authenticated decryption failed")]
    Authentication,

    /// The reconstructed file does not verify against its MAC tag.
    #[error("integrity check failed: reconstructed file does not match its tag")]
    IntegrityFailure,

    /// A deviation could not be decrypted during reconstruction.
    #[error("deviation decryption failed for chunk {chunk}")]
    DecryptionFailure { chunk: usize },

    #[error("object not found: {0}")]
    NotFound(String),

    #[error("conflicting object already stored under tag {0}")]
    Conflict(String),

    #[error("store corruption: {0}")]
    Corruption(String),

    #[error("malformed message: {0}")]
    Malformed(String),

    #[error("remote error {code}: {message}")]
    Remote { code: u16, message: String },

    #[error("compression ratio undefined for an empty database")]
    EmptyDatabase,

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn params(msg: impl Into<String>) -> Self {
        Error::InvalidParams(msg.into())
    }

    pub(crate) fn corrupt(msg: impl Into<String>) -> Self {
        Error::Corruption(msg.into())
    }

    pub(crate) fn malformed(msg: impl Into<String>) -> Self {
        Error::Malformed(msg.into())
    }
}
