//! Experiment reports and their CSV form: `#`-prefixed header comments carry
//! the config echo and seed; rows are plain comma-separated cells whose
//! formatting round-trips exactly.

use std::fmt;
use std::path::Path;

use crate::HarnessError;

/// One CSV cell. `f64` cells print with Rust's shortest-round-trip formatting
/// so a parse of the emitted file reproduces the value bit-for-bit.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    U(u64),
    F(f64),
    B(bool),
    S(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::U(v) => write!(f, "{v}"),
            Cell::F(v) => write!(f, "{v}"),
            Cell::B(v) => write!(f, "{v}"),
            Cell::S(v) => write!(f, "{v}"),
        }
    }
}

impl Cell {
    fn parse(text: &str) -> Cell {
        if let Ok(v) = text.parse::<u64>() {
            return Cell::U(v);
        }
        if let Ok(v) = text.parse::<f64>() {
            return Cell::F(v);
        }
        match text {
            "true" => Cell::B(true),
            "false" => Cell::B(false),
            _ => Cell::S(text.to_string()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Column index by name.
    pub fn col(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric view of one column.
    pub fn f64_column(&self, name: &str) -> Vec<f64> {
        let idx = self.col(name).expect("unknown column");
        self.rows
            .iter()
            .map(|r| match &r[idx] {
                Cell::F(v) => *v,
                Cell::U(v) => *v as f64,
                Cell::B(v) => *v as u8 as f64,
                Cell::S(_) => f64::NAN,
            })
            .collect()
    }
}

/// Outcome of one experiment run.
#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub kind: String,
    pub seed: u64,
    pub config_echo: Vec<(String, String)>,
    pub table: CsvTable,
    /// Fitted log-log slope of the headline norm, when the sweep admits one.
    pub slope: Option<f64>,
    /// All measured norms vanished: no rate to fit, nothing to violate.
    pub degenerate: bool,
    pub passed: bool,
    /// Smallest sweep frequency at which every constraint held.
    pub chosen_freq: Option<u32>,
    pub notes: Vec<String>,
}

impl ConvergenceReport {
    pub fn new(kind: &str, seed: u64, config_echo: Vec<(String, String)>, table: CsvTable) -> Self {
        Self {
            kind: kind.to_string(),
            seed,
            config_echo,
            table,
            slope: None,
            degenerate: false,
            passed: false,
            chosen_freq: None,
            notes: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# experiment = {}\n", self.kind));
        out.push_str(&format!("# seed = {}\n", self.seed));
        for (k, v) in &self.config_echo {
            out.push_str(&format!("# cfg {k} = {v}\n"));
        }
        if let Some(s) = self.slope {
            out.push_str(&format!("# slope = {s}\n"));
        }
        if self.degenerate {
            out.push_str("# degenerate = true\n");
        }
        if let Some(n) = self.chosen_freq {
            out.push_str(&format!("# chosen_N = {n}\n"));
        }
        for note in &self.notes {
            out.push_str(&format!("# note: {note}\n"));
        }
        out.push_str(&format!("# passed = {}\n", self.passed));
        out.push_str(&self.table.columns.join(","));
        out.push('\n');
        for row in &self.table.rows {
            let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_csv())
            .map_err(|e| HarnessError::Config(format!("cannot write {}: {e}", path.display())))
    }
}

/// Parse an emitted CSV back into comments and a table.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, CsvTable), HarnessError> {
    let mut comments = Vec::new();
    let mut lines = text.lines().peekable();
    while let Some(line) = lines.peek() {
        if line.starts_with('#') {
            comments.push(lines.next().unwrap().to_string());
        } else {
            break;
        }
    }
    let header = lines
        .next()
        .ok_or_else(|| HarnessError::Config("CSV has no header row".into()))?;
    let mut table = CsvTable::new(&header.split(',').collect::<Vec<_>>());
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<Cell> = line.split(',').map(Cell::parse).collect();
        if row.len() != table.columns.len() {
            return Err(HarnessError::Config(format!(
                "CSV row width {} does not match header {}",
                row.len(),
                table.columns.len()
            )));
        }
        table.rows.push(row);
    }
    Ok((comments, table))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrips_exactly() {
        let mut table = CsvTable::new(&["N", "value", "ok"]);
        table.push(vec![Cell::U(16), Cell::F(0.1 + 0.2), Cell::B(true)]);
        table.push(vec![Cell::U(32), Cell::F(1.0 / 3.0), Cell::B(false)]);
        let mut rep = ConvergenceReport::new(
            "rates",
            42,
            vec![("sweep.N".into(), "16,32".into())],
            table.clone(),
        );
        rep.slope = Some(-1.002_503);
        rep.passed = true;
        let text = rep.to_csv();
        let (comments, parsed) = parse_csv(&text).unwrap();
        assert!(comments.iter().any(|c| c.contains("seed = 42")));
        assert_eq!(parsed, table);
    }
}
