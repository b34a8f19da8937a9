//! CSV output with a `#` metadata block.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

pub const VERSION: &str = env!("BOSEGAS_GIT_VERSION");

/// Reals with 17 significant digits, enough to round-trip.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct Table {
    meta: Vec<(String, String)>,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    footer: Vec<(String, String)>,
}

impl Table {
    pub fn new(command: &str, header: &[&'static str]) -> Self {
        Table {
            meta: vec![("bosegas".into(), VERSION.into()), ("command".into(), command.into())],
            header: header.to_vec(),
            rows: Vec::new(),
            footer: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.into(), value.to_string()));
    }

    pub fn row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn footer(&mut self, key: &str, value: impl ToString) {
        self.footer.push((key.into(), value.to_string()));
    }

    pub fn write_to(&self, out: impl Write) -> io::Result<()> {
        let mut out = BufWriter::new(out);
        for (k, v) in &self.meta {
            writeln!(out, "# {k}: {v}")?;
        }
        {
            let mut csv = csv::Writer::from_writer(&mut out);
            csv.write_record(&self.header)?;
            for row in &self.rows {
                csv.write_record(row)?;
            }
            csv.flush()?;
        }
        for (k, v) in &self.footer {
            writeln!(out, "# {k}: {v}")?;
        }
        out.flush()
    }

    pub fn write(&self, path: Option<&Path>) -> io::Result<()> {
        match path {
            Some(p) => self.write_to(File::create(p)?),
            None => self.write_to(io::stdout().lock()),
        }
    }
}
