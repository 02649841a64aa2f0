use std::io::Write;
use std::path::Path;

use super::{OutputFormat, ResultTable};

pub const CSV_HEADER: [&str; 9] = [
    "experiment",
    "input_state",
    "storage_time_us",
    "mc_fidelity",
    "mc_stderr",
    "oracle_fidelity",
    "reference_value",
    "n_effective_trials",
    "seed",
];

/// Serialize `table`. CSV always starts with [`CSV_HEADER`]; JSON is an array
/// of row objects. Both end with a newline.
pub fn write_results<W: Write>(table: &ResultTable, format: OutputFormat, out: W) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(CSV_HEADER)?;
            for row in &table.rows {
                w.serialize(row)?;
            }
            w.flush()
        }
        OutputFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, &table.rows)?;
            out.write_all(b"\n")
        }
    }
}

/// Write to `path`, or to stdout when `path` is `None`.
pub fn emit_results(table: &ResultTable, path: Option<&Path>, format: OutputFormat) -> std::io::Result<()> {
    match path {
        Some(p) => {
            let mut buf = Vec::new();
            write_results(table, format, &mut buf)?;
            std::fs::write(p, buf)
        }
        None => write_results(table, format, std::io::stdout().lock()),
    }
}
