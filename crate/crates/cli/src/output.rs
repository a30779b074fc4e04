//! CSV and JSON writers. Every data file starts with the schema token.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

pub const SCHEMA: &str = "dicke-ising/1";
pub const CSV_SCHEMA_LINE: &str = "#schema=dicke-ising/1";

/// Float text with 17 significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// A table with a fixed header; cells are already formatted.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

fn create(path: &Path) -> io::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_csv(path: &Path, table: &Table) -> io::Result<()> {
    let mut out = create(path)?;
    writeln!(out, "{CSV_SCHEMA_LINE}")?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()
}

/// Reads a file written by [`write_csv`], checking the schema line.
pub fn read_csv(path: &Path) -> io::Result<Table> {
    let text = std::fs::read_to_string(path)?;
    let body = text
        .strip_prefix(CSV_SCHEMA_LINE)
        .and_then(|rest| rest.strip_prefix("\n"))
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "missing schema line"))?;
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers()?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
        .collect::<Result<_, _>>()?;
    Ok(Table { header, rows })
}

#[derive(Serialize)]
struct Envelope<'a, M: Serialize, D: Serialize> {
    schema: &'a str,
    meta: &'a M,
    data: &'a D,
}

pub fn write_json<M: Serialize, D: Serialize>(path: &Path, meta: &M, data: &D) -> io::Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(
        &mut out,
        &Envelope {
            schema: SCHEMA,
            meta,
            data,
        },
    )?;
    writeln!(out)?;
    out.flush()
}

pub fn read_json(path: &Path) -> io::Result<serde_json::Value> {
    let v: serde_json::Value = serde_json::from_reader(File::open(path)?)?;
    if v.get("schema").and_then(|s| s.as_str()) != Some(SCHEMA) {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "missing schema token"));
    }
    Ok(v)
}

/// `<path>.<suffix>`, keeping the original extension in place.
pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

/// `map.csv` -> `map.boundary.csv`.
pub fn sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{tag}"),
    };
    path.with_file_name(name)
}
