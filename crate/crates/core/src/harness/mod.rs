//! Scenario grids, Monte Carlo execution and CSV output.

pub mod config;
pub mod grid;
pub mod report;
pub mod sim;
pub mod stats;

pub use config::{default_a_grid, GridConfig, Interval, Scenario, ScenarioConfig, TraceMode};
pub use grid::{run_grid, Dataset, RunOptions, RunSummary, ScenarioKey};
pub use report::{load_dataset, performance_by_a, swaps_by_round, write_report, PerformanceRow};
pub use sim::{run_seed, run_simulation, RunTrace};
