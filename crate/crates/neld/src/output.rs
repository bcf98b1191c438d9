//! Tab-separated result tables.
//!
//! One header row; each column header is `name:unit:provenance` where
//! provenance is `measured` or `fitted`. Floats are written with 17
//! significant digits so reruns of the same config are byte-identical
//! and regression tests can compare files exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{NeldError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Measured,
    Fitted,
}

impl Provenance {
    fn tag(&self) -> &'static str {
        match self {
            Provenance::Measured => "measured",
            Provenance::Fitted => "fitted",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Column {
    pub name: String,
    pub unit: String,
    pub provenance: Provenance,
}

impl Column {
    pub fn new(name: &str, unit: &str, provenance: Provenance) -> Column {
        Column {
            name: name.to_string(),
            unit: unit.to_string(),
            provenance,
        }
    }
}

/// In-memory table with a fixed column order.
#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<String>>,
}

/// 17 significant digits, round-trippable for f64.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl Table {
    pub fn new(columns: Vec<Column>) -> Table {
        Table { columns, rows: Vec::new() }
    }

    pub fn push_row(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.columns.len(), "row width mismatch");
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self
            .columns
            .iter()
            .map(|c| format!("{}:{}:{}", c.name, c.unit, c.provenance.tag()))
            .collect();
        let _ = writeln!(out, "{}", header.join("\t"));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join("\t"));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render())?;
        Ok(())
    }

    /// Parse a table written by [`Table::write`], validating the header
    /// shape.
    pub fn read(path: &Path) -> Result<Table> {
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| NeldError::Config(format!(
            "{}: empty table",
            path.display()
        )))?;
        let mut columns = Vec::new();
        for cell in header.split('\t') {
            let parts: Vec<&str> = cell.split(':').collect();
            if parts.len() != 3 {
                return Err(NeldError::Config(format!(
                    "{}: malformed header cell {cell}",
                    path.display()
                )));
            }
            let provenance = match parts[2] {
                "measured" => Provenance::Measured,
                "fitted" => Provenance::Fitted,
                other => {
                    return Err(NeldError::Config(format!(
                        "{}: unknown provenance tag {other}",
                        path.display()
                    )))
                }
            };
            columns.push(Column::new(parts[0], parts[1], provenance));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let cells: Vec<String> = line.split('\t').map(str::to_string).collect();
            if cells.len() != columns.len() {
                return Err(NeldError::Config(format!(
                    "{}: row {} has {} cells, expected {}",
                    path.display(),
                    i + 2,
                    cells.len(),
                    columns.len()
                )));
            }
            rows.push(cells);
        }
        Ok(Table { columns, rows })
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn float_column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self.column_index(name).ok_or_else(|| {
            NeldError::Config(format!("missing column {name}"))
        })?;
        self.rows
            .iter()
            .map(|r| {
                r[idx]
                    .parse::<f64>()
                    .map_err(|_| NeldError::Config(format!("column {name}: bad float {}", r[idx])))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn float_format_round_trips() {
        for x in [0.0, 1.0, -1.5, 1.0 / 3.0, 1e-300, std::f64::consts::PI] {
            let s = fmt_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn table_round_trips_through_disk() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.tsv");
        let mut t = Table::new(vec![
            Column::new("t", "time", Provenance::Measured),
            Column::new("lambda_hat", "1/time", Provenance::Fitted),
        ]);
        t.push_row(vec![fmt_float(0.5), fmt_float(1.0 / 3.0)]);
        t.push_row(vec![fmt_float(1.0), fmt_float(0.25)]);
        t.write(&path).unwrap();

        let back = Table::read(&path).unwrap();
        assert_eq!(back.columns.len(), 2);
        assert_eq!(back.columns[1].provenance, Provenance::Fitted);
        assert_eq!(back.float_column("lambda_hat").unwrap(), vec![1.0 / 3.0, 0.25]);
        assert!(back.float_column("missing").is_err());
    }

    #[test]
    fn malformed_tables_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.tsv");
        std::fs::write(&path, "t:time\n1.0\n").unwrap();
        assert!(Table::read(&path).is_err());
        std::fs::write(&path, "t:time:measured\n1.0\t2.0\n").unwrap();
        assert!(Table::read(&path).is_err());
    }
}
