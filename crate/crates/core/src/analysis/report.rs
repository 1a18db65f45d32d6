use std::io::Write;

use serde::Serialize;

use super::montecarlo::{ErrorReport, ImprovementRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

fn write_rows<W: Write, R: Serialize, C: Serialize>(
    out: W,
    rows: &[R],
    format: OutputFormat,
    config: &C,
) -> anyhow::Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Doc<'a, C, R> {
                config: &'a C,
                rows: &'a [R],
            }
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, &Doc { config, rows })?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Error reports as CSV (`n,k,M,K,cost,err_hat,err_std,predictor`) or JSON
/// with a `config` echo.
pub fn write_reports<W: Write, C: Serialize>(
    out: W,
    reports: &[ErrorReport],
    format: OutputFormat,
    config: &C,
) -> anyhow::Result<()> {
    write_rows(out, reports, format, config)
}

/// Comparison rows as CSV (`n,k_star,M,K,w_ratio,ratio,ratio_std`) or JSON.
pub fn write_improvement<W: Write, C: Serialize>(
    out: W,
    rows: &[ImprovementRow],
    format: OutputFormat,
    config: &C,
) -> anyhow::Result<()> {
    write_rows(out, rows, format, config)
}
