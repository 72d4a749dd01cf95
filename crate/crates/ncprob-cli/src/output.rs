use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use clap::ValueEnum;
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// What a subcommand produces: a table for CSV and a document for JSON.
pub struct Artifact {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub json: Value,
}

impl Artifact {
    pub fn new(columns: &[&'static str], json: Value) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new(), json }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }
}

/// Shortest round-trip form; never locale dependent. Negative zero is
/// written as `0.0`.
pub fn num(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:?}")
}

pub fn write(artifact: &Artifact, format: Format, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut file;
    let sink: &mut dyn Write = match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                if !dir.is_dir() {
                    return Err(CliError::Usage(format!("output directory {} does not exist", dir.display())));
                }
            }
            file = BufWriter::new(File::create(path)?);
            &mut file
        }
        None => stdout,
    };
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(sink);
            w.write_record(&artifact.columns)?;
            for r in &artifact.rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut *sink, &artifact.json)?;
            writeln!(sink)?;
            sink.flush()?;
        }
    }
    Ok(())
}
