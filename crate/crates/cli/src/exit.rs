use std::fmt;

use gcn::GcnError;
use graphstore::GraphError;
use meanfield::MeanFieldError;

pub const OK: u8 = 0;
/// Bad flags, bad config file, invalid hyperparameters.
pub const USAGE: u8 = 1;
/// Unreadable or invalid bundle, checkpoint/spec mismatch, no Dr layers.
pub const INPUT: u8 = 2;
pub const DIVERGENCE: u8 = 3;
pub const VERIFICATION: u8 = 4;

/// A verification suite ran to completion and at least one check failed.
#[derive(Debug)]
pub struct VerificationFailed {
    pub failures: Vec<String>,
}

impl fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} check(s) failed:", self.failures.len())?;
        for msg in &self.failures {
            write!(f, "\n  - {msg}")?;
        }
        Ok(())
    }
}

impl std::error::Error for VerificationFailed {}

pub fn code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<GcnError>() {
            return match e {
                GcnError::Divergence { .. } => DIVERGENCE,
                GcnError::InvalidConfig(_) | GcnError::InvalidSpec(_) => USAGE,
                _ => INPUT,
            };
        }
        if cause.is::<GraphError>() {
            return INPUT;
        }
        if cause.is::<VerificationFailed>() {
            return VERIFICATION;
        }
        if let Some(MeanFieldError::InvalidConfig(_)) = cause.downcast_ref::<MeanFieldError>() {
            return USAGE;
        }
    }
    USAGE
}
