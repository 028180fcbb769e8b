//! Command-line surface and session server.

pub mod commands;
pub mod reasoner;
pub mod server;
pub mod settings;

/// A bad invocation rather than a failure of the work itself (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}
