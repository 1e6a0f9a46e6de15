use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::SimReport;
use crate::types::{format_limit, Adjustment, Analysis, EffectResult};

/// Report encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// Aligned text, three decimals.
    #[default]
    Table,
    /// Full precision, infinite limits as `inf`.
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "table" => Ok(Format::Table),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::invariant("format", format!("unknown format '{other}' (table, csv, json)"))),
        }
    }
}

fn fixed3(v: f64) -> String {
    if v.is_infinite() { format_limit(v) } else { format!("{v:.3}") }
}

fn note(a: &Adjustment) -> String {
    match a {
        Adjustment::MrContinuity { c } => format!("mr-continuity({c:.4})"),
        Adjustment::LowerSetToZero => "lower-set-to-zero".into(),
        Adjustment::UpperUnbounded => "upper-unbounded".into(),
        Adjustment::GammaVarianceFromCi => "gamma-variance-from-ci".into(),
        Adjustment::ApproximateReleveling => "approximate-releveling".into(),
        Adjustment::DefaultOneSampleCi => "default-one-sample-ci".into(),
    }
}

fn notes(r: &EffectResult) -> String {
    r.corrections.iter().map(note).collect::<Vec<_>>().join(";")
}

fn gamma_cells(r: &EffectResult, fmt: fn(f64) -> String) -> (String, String) {
    r.gamma.map_or((String::new(), String::new()), |g| (fmt(g.control), fmt(g.treated)))
}

fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row.iter().zip(&widths).map(|(cell, w)| format!("{cell:<w$}")).collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

const ANALYSIS_HEADER: [&str; 9] =
    ["scale", "method", "scheme", "estimate", "lower", "upper", "gamma_control", "gamma_treated", "notes"];

fn analysis_rows(a: &Analysis, fmt: fn(f64) -> String) -> Vec<Vec<String>> {
    a.results
        .iter()
        .map(|r| {
            let (g0, g1) = gamma_cells(r, fmt);
            vec![
                r.scale.to_string(),
                r.method.to_string(),
                r.weights.scheme.to_string(),
                fmt(r.estimate),
                fmt(r.ci.lower),
                fmt(r.ci.upper),
                g0,
                g1,
                notes(r),
            ]
        })
        .collect()
}

/// Renders an analysis in `format`; failed methods follow the results.
pub fn render_analysis(a: &Analysis, format: Format) -> Result<String> {
    match format {
        Format::Table => {
            let mut rows = vec![ANALYSIS_HEADER.iter().map(|s| s.to_string()).collect()];
            rows.extend(analysis_rows(a, fixed3));
            let mut out = align(&rows);
            for f in &a.failures {
                let _ = writeln!(out, "{} {}: incomputable: {}", f.scale, f.method, f.error);
            }
            Ok(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(ANALYSIS_HEADER).map_err(csv_err)?;
            for row in analysis_rows(a, format_limit) {
                w.write_record(&row).map_err(csv_err)?;
            }
            for f in &a.failures {
                let mut row = vec![f.scale.to_string(), f.method.to_string()];
                row.resize(ANALYSIS_HEADER.len() - 1, String::new());
                row.push(format!("incomputable: {}", f.error));
                w.write_record(&row).map_err(csv_err)?;
            }
            finish(w)
        }
        Format::Json => json(a),
    }
}

const SIM_HEADER: [&str; 11] =
    ["scenario_id", "kind", "metric", "target", "method", "rate", "mcse", "replicates", "excluded", "regenerations", "weight_mean"];

/// Renders simulation summaries: long CSV, pivoted table or JSON.
pub fn render_sim(reports: &[SimReport], format: Format) -> Result<String> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(SIM_HEADER).map_err(csv_err)?;
            for rep in reports {
                for m in &rep.rates {
                    w.write_record([
                        rep.scenario_id.clone(),
                        serde_plain(&rep.kind),
                        rep.metric.as_str().to_string(),
                        format_limit(rep.target),
                        m.method.to_string(),
                        format_limit(m.rate),
                        format_limit(m.mcse),
                        m.replicates.to_string(),
                        m.excluded.to_string(),
                        rep.regenerations.to_string(),
                        rep.weight_mean.map(format_limit).unwrap_or_default(),
                    ])
                    .map_err(csv_err)?;
                }
            }
            finish(w)
        }
        Format::Table => {
            let mut methods = Vec::new();
            for rep in reports {
                for m in &rep.rates {
                    if !methods.contains(&m.method) {
                        methods.push(m.method);
                    }
                }
            }
            let mut header = vec!["scenario".to_string(), "kind".to_string()];
            header.extend(methods.iter().map(|m| m.to_string()));
            let mut rows = vec![header];
            for rep in reports {
                let mut row = vec![rep.scenario_id.clone(), serde_plain(&rep.kind)];
                row.extend(methods.iter().map(|&m| rep.rate(m).map_or(String::new(), |r| format!("{:.4}", r.rate))));
                rows.push(row);
            }
            Ok(align(&rows))
        }
        Format::Json => json(&reports),
    }
}

fn serde_plain<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

fn json<T: Serialize + ?Sized>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| Error::Io(e.to_string()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Parses a JSON analysis report back into results.
pub fn parse_analysis_json(s: &str) -> Result<Analysis> {
    serde_json::from_str(s).map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })
}
