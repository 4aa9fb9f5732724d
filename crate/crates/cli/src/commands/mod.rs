//! Subcommand implementations. Each one resolves the merged configuration,
//! runs the experiment, writes its CSV files, and reports JSON results plus
//! whether a tested bound was violated (exit code 3).

pub mod contraction;
pub mod gradscaling;
pub mod lowerbound;
pub mod odecheck;
pub mod sample;
pub mod w2;

use serde_json::Value;

pub struct CommandOutcome {
    pub results: Value,
    pub violated: bool,
}
