//! JSON and CSV serialization of run and Monte Carlo reports.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monte_carlo::AggregateReport;
use crate::solver::RunReport;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(Error::Config(format!("unknown report format `{other}` (expected json or csv)"))),
        }
    }
}

/// What gets written out.
#[derive(Clone, Copy, Debug, Serialize)]
#[serde(untagged)]
pub enum Report<'a> {
    Run(&'a RunReport),
    MonteCarlo { aggregate: &'a AggregateReport, runs: &'a [RunReport] },
}

const TRACE_HEADER: [&str; 5] = ["iteration", "variance", "n_particles", "best_energy", "consensus_error"];

fn trace_rows<W: Write>(w: &mut csv::Writer<W>, r: &RunReport, run: Option<usize>) -> Result<()> {
    let t = &r.traces;
    for k in 0..t.len() {
        let mut row: Vec<String> = Vec::with_capacity(6);
        if let Some(i) = run {
            row.push(i.to_string());
        }
        row.push((k + 1).to_string());
        row.push(t.variance[k].to_string());
        row.push(t.n_particles[k].to_string());
        row.push(t.best_energy[k].to_string());
        row.push(t.consensus_error.as_ref().map(|e| e[k].to_string()).unwrap_or_default());
        w.write_record(&row)?;
    }
    Ok(())
}

/// Writes `report` to `w`. CSV holds one row per executed iteration; Monte Carlo CSV prefixes a `run` column.
pub fn write_report<W: Write>(report: &Report<'_>, format: ReportFormat, mut w: W) -> Result<()> {
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut w, report)?;
            writeln!(w)?;
        }
        ReportFormat::Csv => {
            let mut cw = csv::Writer::from_writer(&mut w);
            match report {
                Report::Run(r) => {
                    cw.write_record(TRACE_HEADER)?;
                    trace_rows(&mut cw, r, None)?;
                }
                Report::MonteCarlo { runs, .. } => {
                    cw.write_record(std::iter::once("run").chain(TRACE_HEADER))?;
                    for (i, r) in runs.iter().enumerate() {
                        trace_rows(&mut cw, r, Some(i))?;
                    }
                }
            }
            cw.flush()?;
        }
    }
    Ok(())
}

/// Writes `report` to the file at `path`.
pub fn emit_report(report: &Report<'_>, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_report(report, format, &mut w)?;
    w.flush()?;
    Ok(())
}
