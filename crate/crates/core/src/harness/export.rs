use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::ResultsTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::InvalidConfig(format!(
                "unknown export format '{other}'"
            ))),
        }
    }
}

pub const CSV_HEADER: &str = "n,m,p,b_low,b_high,iterations,metric,value,stderr,seed";

/// One line per (cell, metric). Values use six decimals; a missing
/// standard error is an empty field.
pub fn results_csv(table: &ResultsTable) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in &table.rows {
        let c = &row.cell;
        for m in &row.metrics {
            let stderr = m.stderr.map(|s| format!("{s:.6}")).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{:.6},{},{}",
                c.n,
                c.m,
                c.p,
                c.b_low,
                c.b_high,
                row.iterations,
                m.name,
                m.value,
                stderr,
                table.seed
            )
            .expect("writing to a string");
        }
    }
    out
}

pub fn export_results(
    table: &ResultsTable,
    format: ExportFormat,
    path: impl AsRef<Path>,
) -> Result<()> {
    let body = match format {
        ExportFormat::Csv => results_csv(table),
        ExportFormat::Json => table.to_json(),
    };
    std::fs::write(path, body)?;
    Ok(())
}
