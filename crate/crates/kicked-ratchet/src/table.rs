//! Minimal CSV emission and parsing.
//!
//! One header row, fixed column order, `#` comment lines before the
//! header. Values are written with Rust's shortest round-trip float
//! formatting, so re-reading a file recovers the exact binary values and
//! re-running a seeded scenario reproduces files byte-for-byte.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct Table {
    /// `#`-prefixed metadata lines (without the prefix).
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            comments: Vec::new(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn comment(&mut self, line: impl Into<String>) {
        self.comments.push(line.into());
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }

    /// Column index by name.
    pub fn col(&self, name: &str) -> usize {
        self.columns
            .iter()
            .position(|c| c == name)
            .unwrap_or_else(|| panic!("no column {name:?}"))
    }

    /// All values of a named column.
    pub fn column(&self, name: &str) -> Vec<f64> {
        let i = self.col(name);
        self.rows.iter().map(|r| r[i]).collect()
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(',');
                }
                first = false;
                out.push_str(&format_f64(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    pub fn from_csv_string(text: &str) -> Result<Table> {
        let mut t = Table::default();
        let mut lines = text.lines().peekable();
        while let Some(l) = lines.peek() {
            if let Some(c) = l.strip_prefix('#') {
                t.comments.push(c.trim_start().to_string());
                lines.next();
            } else {
                break;
            }
        }
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("csv: missing header".into()))?;
        t.columns = header.split(',').map(|s| s.to_string()).collect();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|s| s.trim().parse::<f64>()).collect();
            let row = row
                .map_err(|e| Error::Format(format!("csv row {}: {e}", i + 2)))?;
            if row.len() != t.columns.len() {
                return Err(Error::Format(format!(
                    "csv row {}: expected {} fields, got {}",
                    i + 2,
                    t.columns.len(),
                    row.len()
                )));
            }
            t.rows.push(row);
        }
        Ok(t)
    }

    pub fn read_csv(path: &Path) -> Result<Table> {
        Table::from_csv_string(&std::fs::read_to_string(path)?)
    }
}

/// Shortest representation that round-trips through parse::<f64>.
fn format_f64(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.1}") // keep a decimal point so columns read as floats
    } else {
        format!("{v}")
    }
}
