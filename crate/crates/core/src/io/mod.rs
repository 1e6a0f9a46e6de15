//! File ingestion, report rendering and the command runner behind the CLI.

pub mod input;
pub mod report;
pub mod run;

pub use input::{
    parse_binary_csv, parse_binary_reader, parse_survival_csv, parse_survival_reader, read_external_cis, read_scenarios,
    BinaryData, SurvivalData,
};
pub use report::{parse_analysis_json, render_analysis, render_sim, Format};
pub use run::{run, Command, RunConfig, RunOutput, EXIT_INCOMPUTABLE, EXIT_INPUT, EXIT_OK};
