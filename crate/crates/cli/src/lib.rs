//! Command-line driver for shrinklab: fixtures, checks, reports and plot data.

pub mod checks;
pub mod fixtures;
pub mod plot;
pub mod report;
pub mod run;
