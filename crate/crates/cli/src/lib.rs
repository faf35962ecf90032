//! Library side of the `lambda-field` command: scenario configuration and the
//! subcommands, usable without spawning the binary.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{
    cmd_compare, cmd_eval_path, cmd_map, cmd_plan, cmd_simulate_scans, output_dir, CompareArgs, CompareRow, Engine,
    EvalPathArgs, EvalSummary, MapSummary, PlanSummary,
};
pub use config::ScenarioConfig;
pub use error::{CliError, Result};
