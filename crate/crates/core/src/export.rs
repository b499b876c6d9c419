//! CSV and JSON output.
//!
//! CSV files start with `#`-prefixed metadata lines followed by an RFC 4180
//! table in long format, one row per grid cell. JSON reports are objects with
//! `metadata` and `report` members.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::analysis::{CoolingResult, RobustnessGrid, RuntimeSweep};
use crate::dynamics::SimOutcome;
use crate::error::{Error, Result};
use crate::units::UNIT_SYSTEM;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub config_hash: String,
    pub version: String,
    pub units: String,
    /// Additional `key = value` pairs, e.g. the mass ratio.
    pub extra: Vec<(String, String)>,
}

impl Metadata {
    pub fn new(config_hash: impl Into<String>) -> Self {
        Self {
            config_hash: config_hash.into(),
            version: VERSION.to_string(),
            units: UNIT_SYSTEM.to_string(),
            extra: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.push((key.to_string(), value.to_string()));
        self
    }

    fn header_lines(&self) -> Vec<String> {
        let mut v = vec![
            format!("# config_hash = {}", self.config_hash),
            format!("# version = {}", self.version),
            format!("# units = {}", self.units),
        ];
        v.extend(self.extra.iter().map(|(k, x)| format!("# {k} = {x}")));
        v
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Writes the metadata lines, `header` and `rows` to `out`.
pub fn write_csv<W: Write>(
    mut out: W,
    meta: &Metadata,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    for line in meta.header_lines() {
        writeln!(out, "{line}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Like [`write_csv`] into a new file at `path`, creating parent directories.
pub fn write_csv_file(
    path: &Path,
    meta: &Metadata,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let f = std::io::BufWriter::new(fs::File::create(path)?);
    write_csv(f, meta, header, rows)
}

fn num(v: f64) -> String {
    v.to_string()
}

fn flag(f: &Option<String>) -> String {
    f.clone().unwrap_or_default()
}

pub const SWEEP_HEADER: [&str; 9] = [
    "t_f",
    "A",
    "B",
    "cost_quanta",
    "E_ex_1",
    "E_ex_2",
    "max_beta_ratio",
    "evaluations",
    "flags",
];

pub fn sweep_rows(sweep: &RuntimeSweep) -> Vec<Vec<String>> {
    sweep
        .points
        .iter()
        .map(|p| {
            let (a, b) = p.params.map_or((f64::NAN, f64::NAN), |q| (q.a, q.b));
            vec![
                num(p.t_f),
                num(a),
                num(b),
                num(p.cost_quanta),
                num(p.e_ex[0]),
                num(p.e_ex[1]),
                num(p.max_beta_ratio),
                p.evaluations.to_string(),
                flag(&p.flag),
            ]
        })
        .collect()
}

pub const GRID_HEADER: [&str; 5] = ["t_f", "eta", "E_ex_1", "E_ex_2", "flags"];

pub fn grid_rows(grid: &RobustnessGrid) -> Vec<Vec<String>> {
    grid.cells
        .iter()
        .map(|c| {
            vec![
                num(c.t_f),
                num(c.eta),
                num(c.e_ex[0]),
                num(c.e_ex[1]),
                flag(&c.flag),
            ]
        })
        .collect()
}

pub const COOLING_HEADER: [&str; 4] = ["t_f", "E_ex_1", "E_ex_2", "flags"];

pub fn cooling_rows(c: &CoolingResult) -> Vec<Vec<String>> {
    c.t_f
        .iter()
        .zip(&c.e_ex)
        .zip(&c.flags)
        .map(|((t, e), f)| vec![num(*t), num(e[0]), num(e[1]), flag(f)])
        .collect()
}

pub const TRAJECTORY_HEADER: [&str; 7] = ["t", "x1", "x2", "p1", "p2", "E_ex_1", "E_ex_2"];

pub fn trajectory_rows(out: &SimOutcome) -> Vec<Vec<String>> {
    out.trajectory
        .iter()
        .map(|s| {
            vec![
                num(s.state.t),
                num(s.state.x1),
                num(s.state.x2),
                num(s.state.p1),
                num(s.state.p2),
                num(s.e_ex[0]),
                num(s.e_ex[1]),
            ]
        })
        .collect()
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    metadata: &'a Metadata,
    report: &'a T,
}

pub fn json_report<T: Serialize>(meta: &Metadata, report: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(&Report {
        metadata: meta,
        report,
    })?)
}

pub fn write_json_file<T: Serialize>(path: &Path, meta: &Metadata, report: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, json_report(meta, report)? + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_metadata_then_table() {
        let meta = Metadata::new("abc").with("mass_ratio", 2.0);
        let mut buf = Vec::new();
        write_csv(
            &mut buf,
            &meta,
            &["t_f", "flags"],
            vec![vec!["1.5".into(), "needs, quoting".into()]],
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# config_hash = abc");
        assert!(lines[1].starts_with("# version = "));
        assert_eq!(lines[2], format!("# units = {UNIT_SYSTEM}"));
        assert_eq!(lines[3], "# mass_ratio = 2");
        assert_eq!(lines[4], "t_f,flags");
        assert_eq!(lines[5], "1.5,\"needs, quoting\"");
    }

    #[test]
    fn csv_reads_back_with_comments() {
        let mut buf = Vec::new();
        write_csv(
            &mut buf,
            &Metadata::new("h"),
            &["a", "b"],
            vec![vec!["1".into(), "2".into()]],
        )
        .unwrap();
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(buf.as_slice());
        let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
        assert_eq!(r.headers().unwrap(), vec!["a", "b"]);
        assert_eq!(rows[0], vec!["1", "2"]);
    }

    #[test]
    fn json_report_shape() {
        let v: serde_json::Value =
            serde_json::from_str(&json_report(&Metadata::new("h"), &[1.0, 2.0]).unwrap()).unwrap();
        assert_eq!(v["metadata"]["config_hash"], "h");
        assert_eq!(v["report"][1], 2.0);
    }
}
