//! Error classification for process exit codes.
//!
//! Commands exit 0 on success, 1 when the inputs are at fault (bad flags,
//! malformed files, broken annotations), and 2 on internal failures. Input
//! problems are tagged by wrapping them in [`Invalid`]; anything untagged is
//! treated as internal.

use std::fmt;

/// Marker for user-input errors; anyhow chains are inspected for it.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

/// Builds a validation error (exit code 1).
pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Invalid(msg.into()))
}

/// Tags an arbitrary error chain as a validation failure.
pub fn as_invalid(err: anyhow::Error) -> anyhow::Error {
    if err.downcast_ref::<Invalid>().is_some() {
        err
    } else {
        err.context(Invalid("invalid input".into()))
    }
}

/// Exit code for an error: 1 when [`Invalid`] appears anywhere in the chain
/// (as the root or as an attached context), 2 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<Invalid>().is_some() {
        1
    } else {
        2
    }
}
