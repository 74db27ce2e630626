//! Minimal deterministic CSV reading and writing.
//!
//! Output rules: comma separators, mandatory header row, `\n` line endings,
//! floats rendered as their shortest round-trip decimal, fields quoted only
//! when they contain a comma, quote, or newline. Identical inputs therefore
//! produce byte-identical files.

use crate::error::{Error, Result};
use std::fs;
use std::path::Path;

/// Shortest round-trip rendering of a float (Rust's default `Display`).
pub(crate) fn fmt_float(v: f64) -> String {
    format!("{v}")
}

fn needs_quoting(field: &str) -> bool {
    field.contains(',') || field.contains('"') || field.contains('\n') || field.contains('\r')
}

fn encode_field(field: &str) -> String {
    if needs_quoting(field) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Writes a header plus rows, creating parent directories as needed.
pub fn write_csv<P: AsRef<Path>>(
    path: P,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(path.display().to_string(), e))?;
        }
    }
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len(), "row width must match header");
        let encoded: Vec<String> = row.iter().map(|f| encode_field(f)).collect();
        out.push_str(&encoded.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

/// An in-memory CSV file: header names plus string-valued rows.
#[derive(Clone, Debug)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    /// Index of a named column, or the error the plotting layer reports.
    pub fn column_index(&self, name: &str, path: &Path) -> Result<usize> {
        self.header.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn {
            column: name.to_string(),
            path: path.display().to_string(),
        })
    }
}

fn parse_line(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut field = String::new();
    let mut chars = line.chars().peekable();
    let mut quoted = false;
    while let Some(c) = chars.next() {
        if quoted {
            match c {
                '"' if chars.peek() == Some(&'"') => {
                    chars.next();
                    field.push('"');
                }
                '"' => quoted = false,
                other => field.push(other),
            }
        } else {
            match c {
                '"' => quoted = true,
                ',' => fields.push(std::mem::take(&mut field)),
                other => field.push(other),
            }
        }
    }
    fields.push(field);
    fields
}

/// Reads a CSV file with a mandatory header row.
pub fn read_csv<P: AsRef<Path>>(path: P) -> Result<CsvTable> {
    let path = path.as_ref();
    let text =
        fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut lines = text.lines().filter(|l| !l.is_empty());
    let header = match lines.next() {
        Some(h) => parse_line(h),
        None => return Err(Error::EmptyCsv(path.display().to_string())),
    };
    let rows: Vec<Vec<String>> = lines.map(parse_line).collect();
    Ok(CsvTable { header, rows })
}
