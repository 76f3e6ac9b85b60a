//! Text formats and report schema for the repairkit CLI.

pub mod report;
pub mod textio;
