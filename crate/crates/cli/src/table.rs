//! Numeric CSV tables: a header row and rows of floats written in the
//! shortest form that parses back to the same value.

use std::io::Write;
use std::path::Path;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn write_to(&self, out: impl Write) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header).map_err(CliError::io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| x.to_string())).map_err(CliError::io)?;
        }
        w.flush().map_err(|e| CliError::Failure(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Table, CliError> {
        let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let header = r.headers().map_err(CliError::io)?.iter().map(str::to_owned).collect();
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let row = rec
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Usage(format!("{}: row {}: {e}", path.display(), i + 1)))?;
            rows.push(row);
        }
        Ok(Table { header, rows })
    }
}

/// Fit targets: a CSV with a header and either one column of values or a
/// single row of them.
pub fn read_target(path: &Path) -> Result<Vec<f64>, CliError> {
    let t = Table::read(path)?;
    let values: Vec<f64> = match (t.header.len(), t.rows.len()) {
        (_, 0) => return Err(CliError::Usage(format!("{}: no target values", path.display()))),
        (1, _) => t.rows.iter().map(|r| r[0]).collect(),
        (_, 1) => t.rows[0].clone(),
        (c, r) => {
            return Err(CliError::Usage(format!(
                "{}: expected one column or one row of values, found {r} rows of {c}",
                path.display()
            )))
        }
    };
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(CliError::Usage(format!("{}: target values must be positive", path.display())));
    }
    if values.windows(2).any(|w| w[1] > w[0]) {
        return Err(CliError::Usage(format!("{}: target values must be descending", path.display())));
    }
    Ok(values)
}
