use std::io::Write;

use rtcouple::experiment::SEED_DERIVATION;
use rtcouple::ExperimentRecord;

use crate::config::Format;
use crate::CliError;

pub const CSV_COLUMNS: &str = "experiment_id,n,t,param_json,statistic,value,stderr,seed,wall_ms";

/// Renders records as CSV (with `#` comment lines naming the command and
/// the seed derivation) or as a JSON array.
pub fn render(records: &[ExperimentRecord], format: Format, command: &str) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Json => {
            let mut buf = serde_json::to_vec_pretty(records).map_err(|e| CliError::Output(e.to_string()))?;
            buf.push(b'\n');
            Ok(buf)
        }
        Format::Csv => {
            let mut buf = Vec::new();
            writeln!(buf, "# rtcouple {command}")?;
            writeln!(buf, "# seed derivation: {SEED_DERIVATION}")?;
            let mut w = csv::Writer::from_writer(buf);
            if records.is_empty() {
                w.write_record(CSV_COLUMNS.split(','))
                    .map_err(|e| CliError::Output(e.to_string()))?;
            }
            for r in records {
                w.serialize(r).map_err(|e| CliError::Output(e.to_string()))?;
            }
            w.into_inner().map_err(|e| CliError::Output(e.to_string()))
        }
    }
}
