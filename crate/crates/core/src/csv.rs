//! Plot-ready CSV output: optional `#` comment preamble, one header row,
//! comma-separated numeric rows, `\n` line endings.
//!
//! Floats use Rust's shortest round-trip formatting, so identical inputs give
//! byte-identical files.

use std::fmt::Write;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            comments: Vec::new(),
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn comment(&mut self, line: impl Into<String>) -> &mut Self {
        self.comments.push(line.into());
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.comments {
            let _ = writeln!(s, "# {c}");
        }
        s.push_str(&self.header.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| format_float(*x)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    /// Parses numeric CSV with an optional `#` preamble.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut out = CsvTable::default();
        let mut have_header = false;
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                out.comments.push(c.trim().to_string());
                continue;
            }
            if !have_header {
                out.header = line.split(',').map(|h| h.trim().to_string()).collect();
                have_header = true;
                continue;
            }
            let row: Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
            let row = row.map_err(|e| format!("line {}: {e}", no + 1))?;
            if row.len() != out.header.len() {
                return Err(format!(
                    "line {}: expected {} columns, found {}",
                    no + 1,
                    out.header.len(),
                    row.len()
                ));
            }
            out.rows.push(row);
        }
        if !have_header {
            return Err("missing header row".into());
        }
        Ok(out)
    }
}

pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        // folds -0 into 0
        "0".to_string()
    } else if x.is_finite() && (x.abs() < 1e-4 || x.abs() >= 1e15) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}
