use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use crate::binary::BinaryStratum;
use crate::error::{Error, Result};
use crate::sim::Scenario;
use crate::survival::{ExternalCis, SurvivalRecord};
use crate::types::Group;

/// Binary counts with their stratum labels, in order of first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryData {
    pub labels: Vec<String>,
    pub strata: Vec<BinaryStratum>,
}

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse { line: line as usize, message: message.into() }
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn records<R: Read>(reader: R, header: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).has_headers(true).from_reader(reader);
    let found = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if found.is_empty() || (found.len() == 1 && found[0].is_empty()) {
        return Err(parse_err(1, format!("empty input; expected header `{}`", header.join(","))));
    }
    if found.iter().map(str::to_ascii_lowercase).ne(header.iter().map(|h| h.to_string())) {
        return Err(parse_err(1, format!("header `{}` differs from `{}`", found.iter().collect::<Vec<_>>().join(","), header.join(","))));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push((line, rec));
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, line: u64, idx: usize, name: &str) -> Result<T> {
    let raw = rec.get(idx).unwrap_or("");
    raw.parse().map_err(|_| parse_err(line, format!("{name}: cannot parse '{raw}'")))
}

fn group(rec: &csv::StringRecord, line: u64, idx: usize) -> Result<Group> {
    let g: u8 = field(rec, line, idx, "group")?;
    Group::from_index(g).ok_or_else(|| parse_err(line, format!("group must be 0 or 1, got {g}")))
}

/// Reads `stratum,group,events,total` rows.
pub fn parse_binary_reader<R: Read>(reader: R) -> Result<BinaryData> {
    let rows = records(reader, &["stratum", "group", "events", "total"])?;
    if rows.is_empty() {
        return Err(parse_err(2, "no data rows"));
    }
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut cells: Vec<[Option<(u64, u64)>; 2]> = Vec::new();
    for (line, rec) in &rows {
        let label = rec.get(0).unwrap_or("").to_string();
        let g = group(rec, *line, 1)?;
        let x: u64 = field(rec, *line, 2, "events")?;
        let n: u64 = field(rec, *line, 3, "total")?;
        if n == 0 || x > n {
            return Err(parse_err(*line, format!("need 0 <= events <= total and total >= 1, got {x}/{n}")));
        }
        let s = *index.entry(label.clone()).or_insert_with(|| {
            labels.push(label.clone());
            cells.push([None, None]);
            labels.len() - 1
        });
        if cells[s][g.index()].replace((x, n)).is_some() {
            return Err(parse_err(*line, format!("duplicate row for stratum '{label}', group {}", g.index())));
        }
    }
    let strata = cells
        .iter()
        .zip(&labels)
        .map(|(c, label)| {
            let get = |g: Group| c[g.index()].ok_or_else(|| Error::MissingCell { stratum: label.clone(), group: g });
            let (x0, n0) = get(Group::Control)?;
            let (x1, n1) = get(Group::Treated)?;
            BinaryStratum::new(x0, n0, x1, n1)
        })
        .collect::<Result<_>>()?;
    Ok(BinaryData { labels, strata })
}

pub fn parse_binary_csv(path: impl AsRef<Path>) -> Result<BinaryData> {
    parse_binary_reader(open(path.as_ref())?)
}

/// Survival records with stratum labels in order of first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalData {
    pub labels: Vec<String>,
    pub records: Vec<SurvivalRecord>,
}

/// Reads `time,event,group,stratum` rows.
pub fn parse_survival_reader<R: Read>(reader: R) -> Result<SurvivalData> {
    let rows = records(reader, &["time", "event", "group", "stratum"])?;
    if rows.is_empty() {
        return Err(parse_err(2, "no data rows"));
    }
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut out = Vec::with_capacity(rows.len());
    for (line, rec) in &rows {
        let time: f64 = field(rec, *line, 0, "time")?;
        if !(time >= 0.0) || !time.is_finite() {
            return Err(parse_err(*line, format!("time must be a nonnegative number, got {time}")));
        }
        let event = match rec.get(1).unwrap_or("") {
            "1" => true,
            "0" => false,
            other => return Err(parse_err(*line, format!("event must be 0 or 1, got '{other}'"))),
        };
        let g = group(rec, *line, 2)?;
        let label = rec.get(3).unwrap_or("").to_string();
        let stratum = *index.entry(label.clone()).or_insert_with(|| {
            labels.push(label);
            labels.len() - 1
        });
        out.push(SurvivalRecord { time, event, group: g, stratum });
    }
    Ok(SurvivalData { labels, records: out })
}

pub fn parse_survival_csv(path: impl AsRef<Path>) -> Result<SurvivalData> {
    parse_survival_reader(open(path.as_ref())?)
}

pub fn read_external_cis(path: impl AsRef<Path>) -> Result<ExternalCis> {
    let f = open(path.as_ref())?;
    serde_json::from_reader(f).map_err(|e| parse_err(e.line() as u64, e.to_string()))
}

/// Reads a JSON scenario file: a single scenario or a list.
pub fn read_scenarios(path: impl AsRef<Path>) -> Result<Vec<Scenario>> {
    #[derive(serde::Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        Many(Vec<Scenario>),
        One(Box<Scenario>),
    }
    let f = open(path.as_ref())?;
    match serde_json::from_reader(f).map_err(|e| parse_err(e.line() as u64, e.to_string()))? {
        OneOrMany::Many(v) => Ok(v),
        OneOrMany::One(s) => Ok(vec![*s]),
    }
}
