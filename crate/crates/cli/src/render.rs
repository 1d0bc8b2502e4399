use std::io::Write;

use anyhow::Result;
use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Table,
}

/// What a subcommand produced: the JSON payload, a tabular view of the same
/// numbers for csv/table output, and whether the checked property held.
pub struct Rendered {
    pub result: Value,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub holds: bool,
}

#[derive(Serialize)]
struct Envelope<'a> {
    command: &'a str,
    params: &'a Value,
    result: &'a Value,
    version: &'static str,
}

pub fn emit(
    out: &mut impl Write,
    format: Format,
    command: &str,
    params: &Value,
    r: &Rendered,
) -> Result<()> {
    match format {
        Format::Json => {
            let envelope = Envelope {
                command,
                params,
                result: &r.result,
                version: env!("CARGO_PKG_VERSION"),
            };
            serde_json::to_writer_pretty(&mut *out, &envelope)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(&r.header)?;
            for row in &r.rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
        Format::Table => {
            let mut widths: Vec<usize> = r.header.iter().map(|h| h.len()).collect();
            for row in &r.rows {
                for (w, cell) in widths.iter_mut().zip(row) {
                    *w = (*w).max(cell.len());
                }
            }
            let line = |cells: Vec<&str>| -> String {
                cells
                    .iter()
                    .zip(&widths)
                    .map(|(c, w)| format!("{c:>w$}"))
                    .collect::<Vec<_>>()
                    .join("  ")
            };
            writeln!(out, "{}", line(r.header.clone()))?;
            for row in &r.rows {
                writeln!(out, "{}", line(row.iter().map(String::as_str).collect()))?;
            }
        }
    }
    Ok(())
}
