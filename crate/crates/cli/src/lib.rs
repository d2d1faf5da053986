//! Configuration, batch execution and report files behind the `comc`
//! command.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::{
    boundary, cmd_boundary, cmd_plan, cmd_simulate, plan_scenario, run_dir, solve_scenario,
    BoundaryRow, DEFAULT_BOUNDARY_Q_MAIN,
};
pub use config::{ConfigFile, Params, ResolvedScenario, ScenarioConfig, REFERENCE_SCENARIOS};
pub use error::CliError;
pub use report::{ClassRecord, ComparisonReport, ModeSummary, PlanRecord, PlanReport, RunRecord};
