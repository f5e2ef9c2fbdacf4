//! CSV files with a one-line JSON metadata header.
//!
//! Every file starts with `# {…}` holding at least `schema_version` and
//! `columns`, followed by an ordinary CSV table with a header row. Floats are
//! written in shortest round-trip form, so output is byte-stable.

use std::io::{BufRead, Write};

use serde_json::{json, Map, Value};

use crate::analysis::{DecompositionRow, Partition};
use crate::error::{Error, Result};
use crate::oracle::OracleSolution;
use crate::protocol::ExperimentTrace;

pub const SCHEMA_VERSION: u32 = 1;

/// Parsed table: metadata object, header and data rows with their 1-based
/// line numbers in the source.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub meta: Map<String, Value>,
    pub header: Vec<String>,
    pub rows: Vec<(u64, Vec<String>)>,
}

impl Table {
    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse {
                line: 1 + u64::from(!self.meta.is_empty()),
                message: format!("missing column `{name}`"),
            })
    }
}

pub fn write_table<W: Write>(
    out: &mut W,
    meta: &Map<String, Value>,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut meta = meta.clone();
    meta.insert("schema_version".into(), json!(SCHEMA_VERSION));
    meta.insert("columns".into(), json!(header));
    let line = serde_json::to_string(&Value::Object(meta)).map_err(|e| Error::Numerical(e.to_string()))?;
    writeln!(out, "# {line}")?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table<R: BufRead>(mut input: R) -> Result<Table> {
    let mut first = String::new();
    input.read_line(&mut first)?;
    let (meta, offset, rest) = if let Some(json) = first.strip_prefix('#') {
        let v: Value = serde_json::from_str(json.trim()).map_err(|e| Error::Parse {
            line: 1,
            message: format!("metadata is not valid JSON: {e}"),
        })?;
        let Value::Object(m) = v else {
            return Err(Error::Parse {
                line: 1,
                message: "metadata must be a JSON object".into(),
            });
        };
        (m, 1u64, String::new())
    } else {
        (Map::new(), 0, first)
    };
    let mut body = rest;
    input.read_to_string(&mut body)?;
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let header: Vec<String> = r.headers().map_err(|e| shift(csv_error(e), offset))?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| shift(csv_error(e), offset))?;
        let line = rec.position().map_or(0, |p| p.line()) + offset;
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(Table { meta, header, rows })
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

fn shift(e: Error, offset: u64) -> Error {
    match e {
        Error::Parse { line, message } => Error::Parse {
            line: line + offset,
            message,
        },
        other => other,
    }
}

fn parse_field<F: std::str::FromStr>(row: &(u64, Vec<String>), idx: usize, name: &str) -> Result<F> {
    let raw = row.1.get(idx).ok_or_else(|| Error::Parse {
        line: row.0,
        message: format!("missing field `{name}`"),
    })?;
    raw.parse().map_err(|_| Error::Parse {
        line: row.0,
        message: format!("cannot parse `{raw}` as {name}"),
    })
}

/// Labels `y` (and optionally a comparator `w`) in long format `t,k,y[,w]`
/// with 1-based `t` and `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub meta: Map<String, Value>,
    pub labels: Vec<Vec<f64>>,
    pub comparator: Option<Vec<Vec<f64>>>,
}

pub fn read_instance<R: BufRead>(input: R) -> Result<Instance> {
    let table = read_table(input)?;
    let (ti, ki, yi) = (table.column("t")?, table.column("k")?, table.column("y")?);
    let wi = table.column("w").ok();
    let mut cells: Vec<(usize, usize, f64, Option<f64>, u64)> = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let t: usize = parse_field(row, ti, "t")?;
        let k: usize = parse_field(row, ki, "k")?;
        let y: f64 = parse_field(row, yi, "y")?;
        if !y.is_finite() {
            return Err(Error::Parse { line: row.0, message: format!("non-finite label {y}") });
        }
        let w = wi.map(|i| parse_field::<f64>(row, i, "w")).transpose()?;
        if t == 0 || k == 0 {
            return Err(Error::Parse { line: row.0, message: "t and k are 1-based".into() });
        }
        cells.push((t, k, y, w, row.0));
    }
    if cells.is_empty() {
        return Err(Error::Parse { line: 1 + u64::from(!table.meta.is_empty()), message: "no data rows".into() });
    }
    let n = cells.iter().map(|c| c.0).max().unwrap_or(0);
    let d = cells.iter().map(|c| c.1).max().unwrap_or(0);
    let mut labels = vec![vec![f64::NAN; d]; n];
    let mut comparator = wi.map(|_| vec![vec![f64::NAN; d]; n]);
    for (t, k, y, w, line) in &cells {
        if !labels[t - 1][k - 1].is_nan() {
            return Err(Error::Parse { line: *line, message: format!("duplicate entry t={t}, k={k}") });
        }
        labels[t - 1][k - 1] = *y;
        if let (Some(c), Some(w)) = (comparator.as_mut(), w) {
            c[t - 1][k - 1] = *w;
        }
    }
    if let Some((t, row)) = labels.iter().enumerate().find(|(_, r)| r.iter().any(|v| v.is_nan())) {
        let k = row.iter().position(|v| v.is_nan()).unwrap_or(0);
        return Err(Error::Parse {
            line: cells.last().map_or(0, |c| c.4),
            message: format!("missing entry t={}, k={}", t + 1, k + 1),
        });
    }
    Ok(Instance { meta: table.meta, labels, comparator })
}

pub fn write_instance<W: Write>(
    out: &mut W,
    labels: &[Vec<f64>],
    comparator: Option<&[Vec<f64>]>,
    meta: &Map<String, Value>,
) -> Result<()> {
    let header: &[&str] = if comparator.is_some() { &["t", "k", "y", "w"] } else { &["t", "k", "y"] };
    let rows = labels.iter().enumerate().flat_map(|(t, row)| {
        row.iter().enumerate().map(move |(k, y)| {
            let mut r = vec![(t + 1).to_string(), (k + 1).to_string(), y.to_string()];
            if let Some(c) = comparator {
                r.push(c[t][k].to_string());
            }
            r
        })
    });
    write_table(out, meta, header, rows)
}

/// Solution rows `t,k,u`; λ, objective and the KKT report go in the metadata.
pub fn write_solution<W: Write>(out: &mut W, sol: &OracleSolution<f64>, meta: &Map<String, Value>) -> Result<()> {
    let mut meta = meta.clone();
    meta.insert("lambda".into(), json!(sol.lambda));
    meta.insert("objective".into(), json!(sol.objective));
    meta.insert("tv".into(), json!(sol.tv));
    meta.insert("budget".into(), json!(sol.budget));
    meta.insert("kkt".into(), serde_json::to_value(sol.kkt).map_err(|e| Error::Numerical(e.to_string()))?);
    let rows = sol.u.iter().enumerate().flat_map(|(t, row)| {
        row.iter()
            .enumerate()
            .map(move |(k, u)| vec![(t + 1).to_string(), (k + 1).to_string(), u.to_string()])
    });
    write_table(out, &meta, &["t", "k", "u"], rows)
}

/// Per-round trace `t,loss,grad_norm,x_1..x_d`.
pub fn write_trace<W: Write>(out: &mut W, trace: &ExperimentTrace<f64>, meta: &Map<String, Value>) -> Result<()> {
    let d = trace.rounds.first().map_or(0, |r| r.x.len());
    let xs: Vec<String> = (1..=d).map(|k| format!("x_{k}")).collect();
    let mut header = vec!["t", "loss", "grad_norm"];
    header.extend(xs.iter().map(String::as_str));
    let rows = trace.rounds.iter().map(|r| {
        let mut row = vec![r.t.to_string(), r.loss_value.to_string(), r.grad_norm.to_string()];
        row.extend(r.x.iter().map(f64::to_string));
        row
    });
    write_table(out, meta, &header, rows)
}

pub fn write_partition<W: Write>(out: &mut W, p: &Partition<f64>, meta: &Map<String, Value>) -> Result<()> {
    let rows = p.bins.iter().enumerate().map(|(i, b)| {
        vec![
            (i + 1).to_string(),
            b.start.to_string(),
            b.end.to_string(),
            b.len().to_string(),
            b.tv.to_string(),
        ]
    });
    write_table(out, meta, &["bin", "i_s", "i_t", "n_i", "C_i"], rows)
}

pub fn write_decomposition<W: Write>(
    out: &mut W,
    rows: &[DecompositionRow<f64>],
    meta: &Map<String, Value>,
) -> Result<()> {
    let body = rows.iter().map(|r| {
        vec![
            r.bin.to_string(),
            r.start.to_string(),
            r.end.to_string(),
            r.len.to_string(),
            r.tv.to_string(),
            r.t1.to_string(),
            r.t2.to_string(),
            r.t3.to_string(),
        ]
    });
    write_table(out, meta, &["bin", "i_s", "i_t", "n_i", "C_i", "T1", "T2", "T3"], body)
}
