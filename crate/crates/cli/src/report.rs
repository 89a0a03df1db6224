//! Command outcomes and their CSV / JSON serializations.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    B(bool),
    S(String),
}

impl Cell {
    /// CSV text; floats use 17 significant digits so outputs are byte-stable.
    pub fn csv(&self) -> String {
        match self {
            Cell::F(v) => format!("{v:.16e}"),
            Cell::U(v) => v.to_string(),
            Cell::B(v) => v.to_string(),
            Cell::S(v) => v.clone(),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            // JSON has no NaN or infinity
            Cell::F(v) if !v.is_finite() => s.serialize_str(&v.to_string()),
            Cell::F(v) => s.serialize_f64(*v),
            Cell::U(v) => s.serialize_u64(*v),
            Cell::B(v) => s.serialize_bool(*v),
            Cell::S(v) => s.serialize_str(v),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v as u64)
    }
}
impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::U(v as u64)
    }
}
impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::U(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&'static str]) -> Self {
        Self {
            name: name.into(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for row in &self.rows {
            out.write_record(row.iter().map(Cell::csv))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Rows as an array of objects keyed by the header.
impl Serialize for Table {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        struct Row<'a>(&'a [&'static str], &'a [Cell]);
        impl Serialize for Row<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                let mut m = s.serialize_map(Some(self.0.len()))?;
                for (k, v) in self.0.iter().zip(self.1) {
                    m.serialize_entry(k, v)?;
                }
                m.end()
            }
        }
        let mut seq = s.serialize_seq(Some(self.rows.len()))?;
        for r in &self.rows {
            seq.serialize_element(&Row(&self.header, r))?;
        }
        seq.end()
    }
}

/// One pass/fail line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// Measured quantity.
    pub value: f64,
    /// Limit it was compared against.
    pub limit: f64,
    pub detail: String,
}

impl Check {
    /// `value <= limit`.
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            pass: value <= limit,
            value,
            limit,
            detail: String::new(),
        }
    }

    pub fn flag(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            value: f64::from(u8::from(pass)),
            limit: 1.0,
            detail: detail.into(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Outcome {
    pub command: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    #[serde(serialize_with = "tables_by_name")]
    pub tables: Vec<Table>,
}

fn tables_by_name<S: Serializer>(tables: &[Table], s: S) -> Result<S::Ok, S::Error> {
    let mut m = s.serialize_map(Some(tables.len()))?;
    for t in tables {
        m.serialize_entry(&t.name, t)?;
    }
    m.end()
}

impl Outcome {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            seed,
            ..Self::default()
        }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn merge(&mut self, other: Outcome) {
        self.checks.extend(other.checks);
        self.tables.extend(other.tables);
    }

    pub fn checks_table(&self) -> Table {
        let mut t = Table::new("checks", &["name", "pass", "value", "limit", "detail"]);
        for c in &self.checks {
            t.push(vec![
                c.name.clone().into(),
                c.pass.into(),
                c.value.into(),
                c.limit.into(),
                c.detail.clone().into(),
            ]);
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Emit {
    Json,
    #[default]
    Csv,
}

/// Writes the outcome under `dir`, returning the files written. CSV emits one
/// file per table plus the checks; JSON emits a single summary document.
pub fn write_outcome(outcome: &Outcome, dir: &Path, emit: Emit) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    match emit {
        Emit::Csv => {
            let checks = outcome.checks_table();
            for t in outcome.tables.iter().chain(std::iter::once(&checks)) {
                let path = dir.join(format!("{}_{}.csv", outcome.command, t.name));
                t.write_csv(fs::File::create(&path)?).map_err(io::Error::other)?;
                files.push(path);
            }
        }
        Emit::Json => {
            let path = dir.join(format!("{}.json", outcome.command));
            let mut text = serde_json::to_string_pretty(outcome).map_err(io::Error::other)?;
            text.push('\n');
            fs::write(&path, text)?;
            files.push(path);
        }
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_floats_are_fixed_format() {
        let mut t = Table::new("x", &["a", "b"]);
        t.push(vec![0.1.into(), 3usize.into()]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n1.0000000000000001e-1,3\n");
    }

    #[test]
    fn json_rows_are_objects() {
        let mut o = Outcome::new("demo", 7);
        let mut t = Table::new("rows", &["level", "ok"]);
        t.push(vec![2u32.into(), true.into()]);
        o.tables.push(t);
        o.checks.push(Check::at_most("c", 1.0, 2.0));
        let v = serde_json::to_value(&o).unwrap();
        assert_eq!(v["tables"]["rows"][0]["level"], 2);
        assert_eq!(v["checks"][0]["pass"], true);
    }
}
