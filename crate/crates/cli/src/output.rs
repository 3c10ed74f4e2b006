//! CSV tables with a commented metadata header.

use std::io::Write;

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

pub struct Table {
    pub columns: Vec<(&'static str, &'static str)>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    /// `columns` pairs each name with its unit.
    pub fn new(columns: &[(&'static str, &'static str)]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, config: &RunConfig, mut out: W) -> anyhow::Result<()> {
        writeln!(out, "# hyqt {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(out, "# schema {}/{}", config.command.name(), SCHEMA_VERSION)?;
        writeln!(out, "# config_sha256 {}", config.hash())?;
        writeln!(out, "# seed {}", config.seed)?;
        let units: Vec<String> = self.columns.iter().map(|(c, u)| format!("{c}={u}")).collect();
        writeln!(out, "# units {}", units.join(" "))?;
        for line in config.to_toml().lines() {
            writeln!(out, "# config {line}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.columns.iter().map(|(c, _)| *c))?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest decimal form that round-trips.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}
