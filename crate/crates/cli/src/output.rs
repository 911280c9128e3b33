use crate::Failure;
use serde::Serialize;
use std::io::Write;
use std::path::PathBuf;

/// Fixed header plus rows; the header is written even when there are no rows.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str], rows: Vec<Vec<String>>) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows }
    }

    fn to_csv(&self) -> Result<Vec<u8>, csv::Error> {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(w.into_inner().expect("in-memory writer"))
    }
}

pub struct Output {
    pub csv: bool,
    pub path: Option<PathBuf>,
}

impl Output {
    pub fn emit<T: Serialize>(&self, value: &T, table: Table) -> Result<(), Failure> {
        let bytes = if self.csv {
            table.to_csv().map_err(|e| Failure { code: "io", message: e.to_string() })?
        } else {
            let mut s = serde_json::to_vec_pretty(value).expect("report serializes");
            s.push(b'\n');
            s
        };
        match &self.path {
            Some(p) => std::fs::write(p, bytes).map_err(|e| Failure::io(p, e)),
            None => std::io::stdout().write_all(&bytes).map_err(|e| Failure { code: "io", message: e.to_string() }),
        }
    }
}
