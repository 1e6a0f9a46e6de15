use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stratmover::binary::ZeroCellPolicy;
use stratmover::io::{run, Command, Format, RunConfig, EXIT_INPUT};
use stratmover::sim::StudyKind;
use stratmover::survival::Endpoint;
use stratmover::{MethodId, Scale, WeightScheme};

#[derive(Parser)]
#[command(name = "stratmover", version, about = "Stratified MOVER intervals for differences and ratios")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct Common {
    /// Weighting: mh, inv, mr, or comma-separated fixed weights.
    #[arg(long, default_value = "mh")]
    scheme: String,
    /// Comma-separated methods (AV, AC, AC2, AVL, ACL, WALD, ASY, DC, YS) or `all`.
    #[arg(long, default_value = "all")]
    methods: String,
    /// difference, ratio, or both.
    #[arg(long, default_value = "both")]
    scale: String,
    /// Confidence level in (0, 1].
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// table, csv or json.
    #[arg(long, default_value = "table")]
    format: String,
}

#[derive(Subcommand)]
enum Sub {
    /// Analyze stratified binary counts (`stratum,group,events,total`).
    AnalyzeBinary {
        #[arg(long)]
        input: PathBuf,
        /// none or half-event.
        #[arg(long, default_value = "none")]
        zero_cell: String,
        #[command(flatten)]
        common: Common,
    },
    /// Analyze a milestone survival probability or an RMST.
    AnalyzeSurvival {
        /// Individual records (`time,event,group,stratum`).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Milestone time for the survival probability.
        #[arg(long, conflicts_with = "horizon", required_unless_present = "horizon")]
        milestone: Option<f64>,
        /// RMST truncation time.
        #[arg(long)]
        horizon: Option<f64>,
        /// JSON file of per-stratum, per-group estimates and intervals.
        #[arg(long)]
        external_ci: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo coverage or rejection rates for binary designs.
    Simulate {
        /// Built-in design grid: 3, 4, 5 or 6.
        #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
        example: Option<u32>,
        /// JSON file with one scenario or a list.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        replicates: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// coverage or rejection.
        #[arg(long, default_value = "coverage")]
        study: String,
        /// Worker threads.
        #[arg(long, env = "STRATMOVER_THREADS")]
        threads: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_list<T: std::str::FromStr>(raw: &str, all: &str) -> Result<Vec<T>, T::Err> {
    if raw.trim().eq_ignore_ascii_case(all) {
        return Ok(Vec::new());
    }
    raw.split(',').map(|t| t.trim().parse()).collect()
}

fn config(cli: Cli) -> stratmover::Result<RunConfig> {
    let (command, common, threads) = match cli.command {
        Sub::AnalyzeBinary { input, zero_cell, common } => {
            (Command::AnalyzeBinary { input, zero_cell: zero_cell.parse::<ZeroCellPolicy>()? }, common, None)
        }
        Sub::AnalyzeSurvival { input, milestone, horizon, external_ci, common } => {
            let endpoint = match (milestone, horizon) {
                (Some(t), None) => Endpoint::Milestone(t),
                (None, Some(l)) => Endpoint::Rmst(l),
                _ => unreachable!("clap enforces exactly one of --milestone/--horizon"),
            };
            (Command::AnalyzeSurvival { input, endpoint, external_ci }, common, None)
        }
        Sub::Simulate { example, scenario, replicates, seed, study, threads, common } => {
            let study = match study.to_ascii_lowercase().as_str() {
                "coverage" => StudyKind::Coverage,
                "rejection" | "test" => StudyKind::Rejection,
                other => return Err(stratmover::Error::InvariantViolation {
                    field: "study".into(),
                    detail: format!("unknown study '{other}' (coverage, rejection)"),
                }),
            };
            (Command::Simulate { example, scenario, replicates, seed, study }, common, threads)
        }
    };
    Ok(RunConfig {
        command,
        scheme: common.scheme.parse::<WeightScheme>()?,
        methods: parse_list::<MethodId>(&common.methods, "all")?,
        scales: parse_list::<Scale>(&common.scale, "both")?,
        level: common.level,
        format: common.format.parse::<Format>()?,
        threads,
    })
}

fn main() -> ExitCode {
    let cfg = match config(Cli::parse()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT as u8);
        }
    };
    let out = run(&cfg);
    print!("{}", out.report);
    for d in &out.diagnostics {
        eprintln!("{d}");
    }
    ExitCode::from(out.exit_code as u8)
}
