use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::ValueEnum;
use serde_json::{Map, Value};
use spikelab::sim::{csv_writer, fmt_value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Str(String),
    Int(u64),
    Float(f64),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Float(f) => fmt_value(*f),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Str(s) => Value::String(s.clone()),
            Cell::Int(i) => Value::from(*i),
            // JSON has no infinities; they are written as strings.
            Cell::Float(f) => serde_json::Number::from_f64(*f)
                .map_or_else(|| Value::String(f.to_string()), Value::Number),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Str(s.to_string())
    }
}
impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Str(s)
    }
}
impl From<f64> for Cell {
    fn from(f: f64) -> Self {
        Cell::Float(f)
    }
}
impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as u64)
    }
}
impl From<u64> for Cell {
    fn from(i: u64) -> Self {
        Cell::Int(i)
    }
}
impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}
impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(o: Option<T>) -> Self {
        o.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: Vec<&'static str>) -> Self {
        Self {
            name: name.into(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv_writer(out);
        w.write_record(&self.header).map_err(runtime)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).map_err(runtime)?;
        }
        w.flush()?;
        Ok(())
    }

    fn json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .header
                        .iter()
                        .zip(row)
                        .map(|(h, c)| (h.to_string(), c.json()))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

fn runtime(e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::Io(io),
        other => CliError::Runtime(format!("{other:?}")),
    }
}

/// Writes tables to `<dir>/<name>.<ext>`, or to stdout. On stdout a single
/// table is written bare; several CSV tables are each preceded by a
/// `# name` line and separated by blank lines, and several JSON tables
/// become one object keyed by name.
pub struct Sink {
    pub dir: Option<PathBuf>,
    pub format: Format,
}

impl Sink {
    pub fn emit(&self, tables: &[Table]) -> Result<(), CliError> {
        match &self.dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                for t in tables {
                    let ext = match self.format {
                        Format::Csv => "csv",
                        Format::Json => "json",
                    };
                    let path = dir.join(format!("{}.{ext}", t.name));
                    let mut f = BufWriter::new(File::create(&path)?);
                    self.write_one(t, &mut f)?;
                    f.flush()?;
                    log::info!("wrote {}", path.display());
                }
                Ok(())
            }
            None => {
                let stdout = io::stdout();
                let mut out = BufWriter::new(stdout.lock());
                match (self.format, tables) {
                    (_, [t]) => self.write_one(t, &mut out)?,
                    (Format::Csv, ts) => {
                        for (i, t) in ts.iter().enumerate() {
                            if i > 0 {
                                writeln!(out)?;
                            }
                            writeln!(out, "# {}", t.name)?;
                            t.write_csv(&mut out)?;
                        }
                    }
                    (Format::Json, ts) => {
                        let obj: Map<String, Value> =
                            ts.iter().map(|t| (t.name.clone(), t.json())).collect();
                        serde_json::to_writer_pretty(&mut out, &Value::Object(obj))
                            .map_err(|e| CliError::Runtime(e.to_string()))?;
                        writeln!(out)?;
                    }
                }
                out.flush()?;
                Ok(())
            }
        }
    }

    fn write_one<W: Write>(&self, t: &Table, mut out: W) -> Result<(), CliError> {
        match self.format {
            Format::Csv => t.write_csv(out),
            Format::Json => {
                serde_json::to_writer_pretty(&mut out, &t.json())
                    .map_err(|e| CliError::Runtime(e.to_string()))?;
                writeln!(out)?;
                Ok(())
            }
        }
    }
}
