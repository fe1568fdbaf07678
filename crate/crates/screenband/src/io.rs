//! Score and label files in, CSV tables and the policy document out.
//!
//! Inputs are two-column CSV files with a fixed header; blank lines and
//! lines starting with `#` are skipped. Outputs are rendered to a string
//! first and written in one go.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use screening_core::solver::FixedPointTrace;
use screening_core::value::ValueCurve;
use screening_core::{ExperimentReport, ScreeningPolicy};

use crate::error::{CliError, Result};
use crate::FORMAT_VERSION;

/// What produced an output file: enough to run it again.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub command: &'static str,
    /// Flags that determine the contents, in canonical form. Output paths
    /// and `--threads` are left out since they cannot change a byte.
    pub flags: String,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn header(&self) -> String {
        let mut out =
            format!("# format_version: {FORMAT_VERSION}\n# command: {}\n# flags: {}\n", self.command, self.flags);
        if let Some(seed) = self.seed {
            out.push_str(&format!("# seed: {seed}\n"));
        }
        out
    }
}

fn read_pairs<T>(
    path: &Path,
    column: &str,
    parse: impl Fn(&str) -> std::result::Result<T, String>,
) -> Result<Vec<(String, T)>> {
    let malformed = |line: u64, msg: String| CliError::Malformed { path: path.to_path_buf(), line, msg };
    let file = fs::File::open(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(file);
    let position_of = |e: &csv::Error| e.position().map_or(0, |p| p.line());

    let headers = reader.headers().map_err(|e| malformed(position_of(&e), e.to_string()))?.clone();
    if headers.len() != 2 || &headers[0] != "id" || &headers[1] != column {
        let line = headers.position().map_or(1, |p| p.line());
        return Err(malformed(
            line,
            format!("expected header `id,{column}`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| malformed(position_of(&e), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(malformed(line, "empty id".into()));
        }
        let value = parse(&record[1]).map_err(|msg| malformed(line, msg))?;
        if !seen.insert(id.clone()) {
            return Err(malformed(line, format!("duplicate id `{id}`")));
        }
        out.push((id, value));
    }
    if out.is_empty() {
        return Err(malformed(headers.position().map_or(1, |p| p.line()), "no rows".into()));
    }
    Ok(out)
}

/// Reads an `id,score` file; scores must lie in `[0, 1]`.
pub fn read_scores(path: &Path) -> Result<Vec<(String, f64)>> {
    read_pairs(path, "score", |s| match s.parse::<f64>() {
        Ok(x) if (0.0..=1.0).contains(&x) => Ok(x),
        Ok(x) => Err(format!("score {x} outside [0, 1]")),
        Err(_) => Err(format!("`{s}` is not a number")),
    })
}

/// Reads an `id,label` file; labels must be `0` or `1`.
pub fn read_labels(path: &Path) -> Result<Vec<(String, bool)>> {
    read_pairs(path, "label", |s| match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(format!("label `{s}` is not 0 or 1")),
    })
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn table(preamble: String, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    // writing to a Vec cannot fail
    w.write_record(header).unwrap();
    for row in rows {
        w.write_record(&row).unwrap();
    }
    let body = String::from_utf8(w.into_inner().unwrap()).unwrap();
    preamble + &body
}

fn num(x: f64) -> String {
    x.to_string()
}

pub const CURVE_HEADER: [&str; 7] = ["alpha", "q_alpha", "q_beta", "value", "precision", "marginal", "utility_gap"];
pub const ROWS_HEADER: [&str; 7] = ["kind", "alpha", "rep", "precision", "allocated", "screened", "tp"];
pub const AGGREGATE_HEADER: [&str; 4] = ["kind", "alpha", "mean", "std"];
pub const TRACE_HEADER: [&str; 3] = ["iter", "rho", "gap"];

/// Value curve table. The marginal column's method is recorded in the
/// header; failed rows hold `NaN` and are listed with their error.
pub fn render_curve(prov: &Provenance, curve: &ValueCurve) -> String {
    let mut notes = format!("# marginal_method: {}\n", curve.marginal_method.name());
    for r in &curve.rows {
        if !r.in_guaranteed_regime {
            notes.push_str(&format!("# outside_guaranteed_regime: alpha={}\n", r.alpha));
        }
        if let Some(e) = &r.failure {
            notes.push_str(&format!("# failed: alpha={}: {e}\n", r.alpha));
        }
    }
    let rows = curve
        .rows
        .iter()
        .map(|r| [r.alpha, r.q_alpha, r.q_beta, r.value, r.precision, r.marginal, r.utility_gap].map(num).to_vec());
    table(prov.header() + &notes, &CURVE_HEADER, rows)
}

/// Per-replication table. Failed cells hold `NaN` precision and empty counts.
pub fn render_rows(prov: &Provenance, report: &ExperimentReport) -> String {
    let rows = report.rows.iter().map(|r| {
        let mut row = vec![r.kind.name().to_string(), num(r.alpha), r.rep.to_string()];
        match &r.outcome {
            Ok(o) => row.extend([
                num(o.precision),
                o.allocated.to_string(),
                o.screened.to_string(),
                o.true_positives.to_string(),
            ]),
            Err(_) => row.extend([num(f64::NAN), String::new(), String::new(), String::new()]),
        }
        row
    });
    table(prov.header(), &ROWS_HEADER, rows)
}

pub fn render_aggregates(prov: &Provenance, report: &ExperimentReport) -> String {
    let rows = report.aggregates.iter().map(|a| vec![a.kind.name().to_string(), num(a.alpha), num(a.mean), num(a.std)]);
    table(prov.header(), &AGGREGATE_HEADER, rows)
}

/// `iter,rho,gap` with `gap = |rho_k - rho_{k-1}|`, empty on the first row.
pub fn render_trace(prov: &Provenance, trace: &FixedPointTrace) -> String {
    let rows = trace.rho_sequence.iter().enumerate().map(|(k, &rho)| {
        let gap = if k == 0 { String::new() } else { num((rho - trace.rho_sequence[k - 1]).abs()) };
        vec![k.to_string(), num(rho), gap]
    });
    table(prov.header(), &TRACE_HEADER, rows)
}

/// Flat JSON object: the policy fields plus `format_version`, `command`
/// and `flags`.
pub fn render_policy(prov: &Provenance, policy: &ScreeningPolicy) -> Result<String> {
    let mut doc = match serde_json::to_value(policy)? {
        serde_json::Value::Object(map) => map,
        _ => unreachable!("policy serializes to an object"),
    };
    doc.insert("format_version".into(), FORMAT_VERSION.into());
    doc.insert("command".into(), prov.command.into());
    doc.insert("flags".into(), prov.flags.clone().into());
    if let Some(seed) = prov.seed {
        doc.insert("seed".into(), seed.into());
    }
    let mut out = serde_json::to_string_pretty(&doc)?;
    out.push('\n');
    Ok(out)
}

/// Generic table with the provenance header, for callers with their own layout.
pub fn render_table(prov: &Provenance, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    table(prov.header(), header, rows)
}
