// SPDX-License-Identifier: Apache-2.0

//! Status codes returned by every operation.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Failure half of [`Status`]. Every fallible call in the crate returns one of these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, thiserror::Error)]
pub enum Error {
    #[error("operation not permitted by key policy")]
    NotPermitted,
    #[error("operation or algorithm not supported by the configured backends")]
    NotSupported,
    #[error("invalid argument")]
    InvalidArgument,
    #[error("invalid key handle")]
    InvalidHandle,
    #[error("output buffer too small")]
    BufferTooSmall,
    #[error("insufficient key slot storage")]
    InsufficientStorage,
    #[error("key identifier already exists")]
    AlreadyExists,
    #[error("key or location does not exist")]
    DoesNotExist,
    #[error("bad state")]
    BadState,
    #[error("hardware failure")]
    HardwareFailure,
    #[error("corruption detected")]
    CorruptionDetected,
    #[error("invalid signature")]
    InvalidSignature,
}

pub type Result<T> = std::result::Result<T, Error>;

/// The full result vocabulary, including success.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Success,
    NotPermitted,
    NotSupported,
    InvalidArgument,
    InvalidHandle,
    BufferTooSmall,
    InsufficientStorage,
    AlreadyExists,
    DoesNotExist,
    BadState,
    HardwareFailure,
    CorruptionDetected,
    InvalidSignature,
}

impl Status {
    pub fn is_success(self) -> bool {
        self == Status::Success
    }

    pub fn name(self) -> &'static str {
        match self {
            Status::Success => "SUCCESS",
            Status::NotPermitted => "NOT_PERMITTED",
            Status::NotSupported => "NOT_SUPPORTED",
            Status::InvalidArgument => "INVALID_ARGUMENT",
            Status::InvalidHandle => "INVALID_HANDLE",
            Status::BufferTooSmall => "BUFFER_TOO_SMALL",
            Status::InsufficientStorage => "INSUFFICIENT_STORAGE",
            Status::AlreadyExists => "ALREADY_EXISTS",
            Status::DoesNotExist => "DOES_NOT_EXIST",
            Status::BadState => "BAD_STATE",
            Status::HardwareFailure => "HARDWARE_FAILURE",
            Status::CorruptionDetected => "CORRUPTION_DETECTED",
            Status::InvalidSignature => "INVALID_SIGNATURE",
        }
    }
}

impl From<Error> for Status {
    fn from(e: Error) -> Self {
        match e {
            Error::NotPermitted => Status::NotPermitted,
            Error::NotSupported => Status::NotSupported,
            Error::InvalidArgument => Status::InvalidArgument,
            Error::InvalidHandle => Status::InvalidHandle,
            Error::BufferTooSmall => Status::BufferTooSmall,
            Error::InsufficientStorage => Status::InsufficientStorage,
            Error::AlreadyExists => Status::AlreadyExists,
            Error::DoesNotExist => Status::DoesNotExist,
            Error::BadState => Status::BadState,
            Error::HardwareFailure => Status::HardwareFailure,
            Error::CorruptionDetected => Status::CorruptionDetected,
            Error::InvalidSignature => Status::InvalidSignature,
        }
    }
}

impl<T> From<&Result<T>> for Status {
    fn from(r: &Result<T>) -> Self {
        match r {
            Ok(_) => Status::Success,
            Err(e) => (*e).into(),
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Error {
    pub fn status(self) -> Status {
        self.into()
    }
}
