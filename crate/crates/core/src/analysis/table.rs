use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::{Error, Result};

/// Text table with a header row, written as CSV or whitespace-separated.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// Fixed-width scientific format used for every numeric cell.
pub fn format_number(v: f64) -> String {
    format!("{v:.10e}")
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::Dimension(format!("row has {} cells, header {}", row.len(), self.header.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn render(&self, separator: &str) -> String {
        let mut out = self.header.join(separator);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(separator));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        self.write_with(path, ",")
    }

    /// Whitespace-separated variant for gnuplot; the header line is a comment.
    pub fn write_gnuplot(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        write!(w, "# {}", self.render(" "))?;
        w.flush()?;
        Ok(())
    }

    fn write_with(&self, path: &Path, separator: &str) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(self.render(separator).as_bytes())?;
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_header_and_rows() {
        let mut t = Table::new(["a", "b"]);
        t.push(vec!["1".into(), format_number(0.5)]).unwrap();
        assert_eq!(t.render(","), "a,b\n1,5.0000000000e-1\n");
        assert!(t.push(vec!["x".into()]).is_err());
    }
}
