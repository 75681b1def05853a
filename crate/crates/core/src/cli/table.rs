//! Numeric CSV tables with a header row.

use std::path::Path;

/// A rectangular numeric table. Every cell is finite, so the CSV text is
/// plain decimal literals that parse back to the same `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Self {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<(), String> {
        if row.len() != self.headers.len() {
            return Err(format!(
                "row has {} cells but the table has {} columns",
                row.len(),
                self.headers.len()
            ));
        }
        if let Some(i) = row.iter().position(|v| !v.is_finite()) {
            return Err(format!("non-finite value {} in column {}", row[i], self.headers[i]));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.headers.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers).map_err(|e| e.to_string())?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))
                .map_err(|e| e.to_string())?;
        }
        w.into_inner().map_err(|e| e.to_string())
    }

    pub fn from_csv(bytes: &[u8]) -> Result<Self, String> {
        let mut r = csv::Reader::from_reader(bytes);
        let headers: Vec<String> = r
            .headers()
            .map_err(|e| e.to_string())?
            .iter()
            .map(str::to_string)
            .collect();
        let mut table = Table::new(headers);
        for (line, record) in r.records().enumerate() {
            let record = record.map_err(|e| e.to_string())?;
            let row = record
                .iter()
                .map(|cell| {
                    cell.parse::<f64>()
                        .map_err(|e| format!("data row {}: {cell:?}: {e}", line + 1))
                })
                .collect::<Result<Vec<_>, _>>()?;
            table.push(row)?;
        }
        Ok(table)
    }

    pub fn read(path: &Path) -> Result<Self, String> {
        let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_csv(&bytes).map_err(|e| format!("{}: {e}", path.display()))
    }
}
