use std::path::PathBuf;

use super::input::{parse_binary_csv, parse_survival_csv, read_external_cis, read_scenarios};
use super::report::{render_analysis, render_sim, Format};
use crate::binary::{analyze_binary, BinaryOptions, ZeroCellPolicy};
use crate::error::{Error, Result};
use crate::sim::{coverage_study, scenario_grid, test_study, Scenario, SimReport, StudyKind};
use crate::survival::{analyze_survival, make_summaries, summaries_from_external, CiSource, Endpoint, SurvivalOptions};
use crate::types::{Analysis, MethodId, Scale, WeightScheme};

/// Success.
pub const EXIT_OK: i32 = 0;
/// Unreadable or invalid input or configuration.
pub const EXIT_INPUT: i32 = 2;
/// At least one requested method was incomputable; the others were reported.
pub const EXIT_INCOMPUTABLE: i32 = 3;

/// Default Monte Carlo replicates per scenario.
pub const DEFAULT_REPLICATES: u64 = 100_000;
/// Default simulation seed.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    AnalyzeBinary {
        input: PathBuf,
        zero_cell: ZeroCellPolicy,
    },
    /// Needs `input` records, `external_ci`, or both.
    AnalyzeSurvival {
        input: Option<PathBuf>,
        endpoint: Endpoint,
        external_ci: Option<PathBuf>,
    },
    /// Runs a built-in example grid or scenarios from a JSON file.
    Simulate {
        example: Option<u32>,
        scenario: Option<PathBuf>,
        replicates: u64,
        seed: u64,
        study: StudyKind,
    },
}

/// A fully resolved invocation.
///
/// `methods` empty means every method applicable to the command; `scales`
/// empty means both scales. When simulating, non-empty `methods` replace each
/// scenario's methods and `level` applies to built-in example grids; the
/// grids fix their own weighting schemes.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub scheme: WeightScheme,
    pub methods: Vec<MethodId>,
    pub scales: Vec<Scale>,
    pub level: f64,
    pub format: Format,
    /// Worker threads for simulation; `None` uses the rayon default.
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            scheme: WeightScheme::Mh,
            methods: Vec::new(),
            scales: Vec::new(),
            level: 0.95,
            format: Format::Table,
            threads: None,
        }
    }
}

/// Exit code, rendered report and human-readable diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub exit_code: i32,
    pub report: String,
    pub diagnostics: Vec<String>,
}

impl RunOutput {
    fn input_error(e: Error) -> Self {
        RunOutput { exit_code: EXIT_INPUT, report: String::new(), diagnostics: vec![format!("error: {e}")] }
    }
}

fn methods_or_all(cfg: &RunConfig) -> Vec<MethodId> {
    if cfg.methods.is_empty() { MethodId::ALL.to_vec() } else { cfg.methods.clone() }
}

fn scales_or_both(cfg: &RunConfig) -> Vec<Scale> {
    if cfg.scales.is_empty() { vec![Scale::Difference, Scale::Ratio] } else { cfg.scales.clone() }
}

fn finish_analysis(a: Analysis, cfg: &RunConfig) -> RunOutput {
    let diagnostics: Vec<String> =
        a.failures.iter().map(|f| format!("warning: {} on the {} scale is incomputable: {}", f.method, f.scale, f.error)).collect();
    let code = if a.failures.is_empty() { EXIT_OK } else { EXIT_INCOMPUTABLE };
    match render_analysis(&a, cfg.format) {
        Ok(report) => RunOutput { exit_code: code, report, diagnostics },
        Err(e) => RunOutput::input_error(e),
    }
}

fn binary(cfg: &RunConfig, input: &PathBuf, zero_cell: ZeroCellPolicy) -> Result<Analysis> {
    let data = parse_binary_csv(input)?;
    let opts = BinaryOptions {
        scheme: cfg.scheme.clone(),
        methods: methods_or_all(cfg),
        scales: scales_or_both(cfg),
        level: cfg.level,
        policy: zero_cell,
    };
    analyze_binary(&data.strata, &opts)
}

fn survival(cfg: &RunConfig, input: Option<&PathBuf>, endpoint: Endpoint, external: Option<&PathBuf>) -> Result<Analysis> {
    let external = external.map(read_external_cis).transpose()?;
    let summ = match (input, external) {
        (Some(path), ext) => {
            let data = parse_survival_csv(path)?;
            let source = ext.map_or(CiSource::Default, CiSource::External);
            let mut summ = make_summaries(&data.records, endpoint, &source, cfg.level)?;
            summ.labels = data.labels;
            summ
        }
        (None, Some(ext)) => summaries_from_external(&ext, endpoint)?,
        (None, None) => {
            return Err(Error::invariant("input", "analyze-survival needs --input, --external-ci, or both"));
        }
    };
    let opts =
        SurvivalOptions { scheme: cfg.scheme.clone(), methods: methods_or_all(cfg), scales: scales_or_both(cfg), level: cfg.level };
    analyze_survival(&summ, &opts)
}

fn scenarios(cfg: &RunConfig, example: Option<u32>, scenario: Option<&PathBuf>, replicates: u64, seed: u64) -> Result<Vec<Scenario>> {
    match (example, scenario) {
        (Some(ex), None) => {
            let mut grid = scenario_grid(ex, replicates, seed)?;
            for s in &mut grid {
                s.level = cfg.level;
                if !cfg.methods.is_empty() {
                    s.methods = cfg.methods.clone();
                }
            }
            Ok(grid)
        }
        (None, Some(path)) => {
            let mut list = read_scenarios(path)?;
            if !cfg.methods.is_empty() {
                for s in &mut list {
                    s.methods = cfg.methods.clone();
                }
            }
            Ok(list)
        }
        _ => Err(Error::invariant("simulate", "give exactly one of --example or --scenario")),
    }
}

fn simulate(cfg: &RunConfig, list: &[Scenario], study: StudyKind) -> Result<Vec<SimReport>> {
    let go = || -> Result<Vec<SimReport>> {
        list.iter()
            .map(|s| match study {
                StudyKind::Coverage => coverage_study(s),
                StudyKind::Rejection => test_study(s),
            })
            .collect()
    };
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invariant("threads", e.to_string()))?
            .install(go),
        None => go(),
    }
}

/// Executes a configuration and renders its report; never panics on bad input.
pub fn run(cfg: &RunConfig) -> RunOutput {
    match &cfg.command {
        Command::AnalyzeBinary { input, zero_cell } => match binary(cfg, input, *zero_cell) {
            Ok(a) => finish_analysis(a, cfg),
            Err(e) => RunOutput::input_error(e),
        },
        Command::AnalyzeSurvival { input, endpoint, external_ci } => {
            match survival(cfg, input.as_ref(), *endpoint, external_ci.as_ref()) {
                Ok(a) => finish_analysis(a, cfg),
                Err(e) => RunOutput::input_error(e),
            }
        }
        Command::Simulate { example, scenario, replicates, seed, study } => {
            let reports = scenarios(cfg, *example, scenario.as_ref(), *replicates, *seed)
                .and_then(|list| simulate(cfg, &list, *study));
            let reports = match reports {
                Ok(r) => r,
                Err(e) => return RunOutput::input_error(e),
            };
            let diagnostics: Vec<String> = reports
                .iter()
                .flat_map(|rep| {
                    rep.rates
                        .iter()
                        .filter(|m| m.replicates == 0)
                        .map(move |m| format!("warning: {} never computable in {}", m.method, rep.scenario_id))
                })
                .collect();
            let code = if diagnostics.is_empty() { EXIT_OK } else { EXIT_INCOMPUTABLE };
            match render_sim(&reports, cfg.format) {
                Ok(report) => RunOutput { exit_code: code, report, diagnostics },
                Err(e) => RunOutput::input_error(e),
            }
        }
    }
}
