//! Machine-readable run reports. Every run emits
//! `{ "config": {...}, "rows": [...], "summary": {...} }` as JSON, or a CSV
//! table carrying the same numeric payload with the config and summary as
//! `#`-prefixed comment lines.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl OutputFormat {
    pub fn as_str(&self) -> &'static str {
        match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize, S: Serialize> {
    config: &'a C,
    rows: &'a [R],
    summary: &'a S,
}

/// Render the report in the requested format. JSON field order follows the
/// struct definitions and floats use the shortest exact representation, so
/// identical inputs produce byte-identical output.
pub fn render<C: Serialize, R: Serialize, S: Serialize>(
    config: &C,
    rows: &[R],
    summary: &S,
    format: OutputFormat,
) -> Result<String, CliError> {
    match format {
        OutputFormat::Json => {
            let envelope = Envelope {
                config,
                rows,
                summary,
            };
            let mut text = serde_json::to_string_pretty(&envelope)?;
            text.push('\n');
            Ok(text)
        }
        OutputFormat::Csv => {
            let mut out = String::new();
            out.push_str("# config ");
            out.push_str(&serde_json::to_string(config)?);
            out.push('\n');
            let mut writer = csv::Writer::from_writer(Vec::new());
            for row in rows {
                writer.serialize(row)?;
            }
            let body = writer
                .into_inner()
                .map_err(|e| CliError::Output(format!("csv buffer error: {e}")))?;
            out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
            out.push_str("# summary ");
            out.push_str(&serde_json::to_string(summary)?);
            out.push('\n');
            Ok(out)
        }
    }
}

/// Write to the output path, or stdout when none was given.
pub fn emit(text: &str, output: Option<&PathBuf>) -> Result<(), CliError> {
    match output {
        Some(path) => {
            fs::write(path, text)
                .map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display())))?;
        }
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Output(format!("stdout error: {e}")))?;
        }
    }
    Ok(())
}
