//! Result tables and their on-disk form: RFC-4180-style CSV bodies (UTF-8,
//! LF) preceded by `#`-prefixed metadata echo lines, plus a JSON sidecar
//! carrying the fully resolved configuration.

use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct Column {
    pub name: String,
    pub unit: &'static str,
}

/// One rectangular numeric panel of scenario output.
#[derive(Debug, Clone)]
pub struct ResultTable {
    /// Panel name; the file becomes `<scenario>_<panel>.csv`.
    pub panel: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<f64>>,
}

impl ResultTable {
    pub fn new(panel: &str, columns: &[(&str, &'static str)]) -> Self {
        Self {
            panel: panel.to_string(),
            columns: columns
                .iter()
                .map(|(name, unit)| Column {
                    name: name.to_string(),
                    unit,
                })
                .collect(),

            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len(), "ragged row");
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// All values of a named column.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn write_csv(&self, path: &Path, echo: &[String]) -> std::io::Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        for line in echo {
            writeln!(w, "# {line}")?;
        }
        let header: Vec<String> = self
            .columns
            .iter()
            .map(|c| format!("{} [{}]", c.name, c.unit))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_value(*v)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()
    }
}

/// Deterministic numeric formatting: integers render exactly, everything
/// else in full-precision scientific notation.
pub fn format_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.17e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = ResultTable::new("demo", &[("x", "1"), ("rate", "1/us")]);
        t.push(vec![1.0, 0.25]);
        t.push(vec![2.0, 0.5]);
        let dir = std::env::temp_dir().join("zeno_table_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("demo.csv");
        t.write_csv(&path, &["scenario = demo".into()]).unwrap();
        let body = std::fs::read_to_string(&path).unwrap();
        let mut lines = body.lines();
        assert_eq!(lines.next().unwrap(), "# scenario = demo");
        assert_eq!(lines.next().unwrap(), "x [1],rate [1/us]");
        assert!(lines.next().unwrap().starts_with('1'));
        assert!(body.ends_with('\n'));
        assert!(!body.contains('\r'));
    }

    #[test]
    fn formatting_is_exact_for_integers() {
        assert_eq!(format_value(50.0), "50");
        assert_eq!(format_value(-3.0), "-3");
        assert!(format_value(0.1).starts_with("1.000000000000000"));
    }
}
