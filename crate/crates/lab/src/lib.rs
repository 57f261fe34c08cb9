//! Scenario configs, Monte Carlo campaigns, statistical checks and reports
//! on top of `blowup-core`.

pub mod campaign;
pub mod checks;
pub mod cli;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod reduction;
pub mod report;
pub mod run;
pub mod stats;
