//! Column-oriented results rendered as CSV or JSON.

use crate::args::Format;
use crate::error::{CliError, CliResult};
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Empty, Into::into)
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format_float(*x),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => Value::from(*i),
            Cell::Float(x) => Value::from(*x),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
            Cell::Empty => Value::Null,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width differs from header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Fails on the first NaN or infinite entry.
    pub fn check_finite(&self) -> CliResult<()> {
        for (r, row) in self.rows.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                if let Cell::Float(x) = cell {
                    if !x.is_finite() {
                        return Err(CliError::Numerical(format!(
                            "row {r} column {} is {x}",
                            self.header[c]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .header
                        .iter()
                        .cloned()
                        .zip(row.iter().map(Cell::json))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// What a command produces before it is written anywhere.
#[derive(Debug, Clone)]
pub struct Report {
    pub table: Table,
    /// Replaces the row-array rendering in JSON mode.
    pub json: Option<Value>,
    pub default_format: Format,
    /// Set when a check inside the command failed; the output is still
    /// written and the process then exits with status 3.
    pub guard: Option<String>,
}

impl Report {
    pub fn csv(table: Table) -> Self {
        Self {
            table,
            json: None,
            default_format: Format::Csv,
            guard: None,
        }
    }

    pub fn render(&self, format: Option<Format>) -> CliResult<String> {
        self.table.check_finite()?;
        Ok(match format.unwrap_or(self.default_format) {
            Format::Csv => self.table.to_csv(),
            Format::Json => {
                let v = self.json.clone().unwrap_or_else(|| self.table.to_json());
                let mut s = serde_json::to_string_pretty(&v).expect("json values serialize");
                s.push('\n');
                s
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_csv() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(format_float(0.375), "3.7500000000000000e-1");
    }

    #[test]
    fn csv_quotes_and_json_nulls() {
        let mut t = Table::new(["a", "b", "c"]);
        t.push(vec!["x,y".into(), Cell::Empty, 2u64.into()]);
        assert_eq!(t.to_csv(), "a,b,c\n\"x,y\",,2\n");
        assert_eq!(t.to_json()[0]["b"], Value::Null);
    }

    #[test]
    fn non_finite_is_a_guard_failure() {
        let mut t = Table::new(["v"]);
        t.push(vec![f64::NAN.into()]);
        assert!(matches!(t.check_finite(), Err(CliError::Numerical(_))));
        assert!(Report::csv(t).render(None).is_err());
    }
}
