//! CSV/JSON serialization of scenario records.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{OutputFormat, ScenarioConfig};
use super::{RunOutput, ScenarioResult};
use crate::error::{KikError, Result};

/// CSV columns, in order. Wall-clock time is kept out of the CSV so that
/// identical inputs give identical bytes; it is reported in the sidecar.
pub const CSV_HEADER: [&str; 20] = [
    "scenario",
    "point",
    "quantity",
    "xi",
    "param",
    "order",
    "g",
    "g_value",
    "mu",
    "estimate",
    "ideal",
    "bias",
    "variance",
    "overhead",
    "eq16",
    "eq17",
    "eq18",
    "flags",
    "seed",
    "config_hash",
];

/// 17 significant digits.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

fn io_err(e: impl std::fmt::Display) -> KikError {
    KikError::InvalidSpec(format!("output: {e}"))
}

pub fn write_csv<W: Write>(records: &[ScenarioResult], w: W) -> Result<()> {
    let mut wr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(w);
    wr.write_record(CSV_HEADER).map_err(io_err)?;
    for r in records {
        wr.write_record([
            r.scenario.clone(),
            r.point.clone(),
            r.quantity.clone(),
            format_float(r.xi),
            opt(r.param),
            r.order.to_string(),
            r.g.clone(),
            opt(r.g_value),
            opt(r.mu),
            format_float(r.estimate),
            format_float(r.ideal),
            format_float(r.bias),
            opt(r.variance),
            opt(r.overhead),
            opt(r.eq16),
            opt(r.eq17),
            opt(r.eq18),
            r.flags.clone(),
            r.seed.to_string(),
            r.config_hash.clone(),
        ])
        .map_err(io_err)?;
    }
    wr.flush().map_err(io_err)?;
    Ok(())
}

pub fn csv_string(records: &[ScenarioResult]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    String::from_utf8(buf).map_err(io_err)
}

pub fn json_string(records: &[ScenarioResult]) -> Result<String> {
    serde_json::to_string_pretty(records).map_err(io_err)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    scenario: &'a str,
    seed: u64,
    config_hash: String,
    records: usize,
    wall_clock_s: f64,
    config: &'a ScenarioConfig,
}

pub fn sidecar_string(cfg: &ScenarioConfig, run: &RunOutput) -> Result<String> {
    serde_json::to_string_pretty(&Sidecar {
        scenario: cfg.scenario.kind.name(),
        seed: cfg.scenario.seed,
        config_hash: cfg.hash(),
        records: run.records.len(),
        wall_clock_s: run.wall_clock_s,
        config: cfg,
    })
    .map_err(io_err)
}

/// `results.csv` → `results.config.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("config.json")
}

pub fn render(records: &[ScenarioResult], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => csv_string(records),
        OutputFormat::Json => json_string(records),
    }
}

/// Write records and the JSON sidecar; returns the two paths.
pub fn write_outputs(
    cfg: &ScenarioConfig,
    run: &RunOutput,
    path: &Path,
    format: OutputFormat,
) -> Result<(PathBuf, PathBuf)> {
    std::fs::write(path, render(&run.records, format)?).map_err(io_err)?;
    let side = sidecar_path(path);
    std::fs::write(&side, sidecar_string(cfg, run)?).map_err(io_err)?;
    Ok((path.to_path_buf(), side))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::ScenarioKind;

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(-2.0), "-2.0000000000000000e0");
        let x = 0.123456789012345678f64;
        assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn csv_quotes_and_header() {
        let r = ScenarioResult::new(ScenarioKind::Drift, "a,b", "q", 0.1, 1, "mu", 1.0, 0.5)
            .with_flag("x", true)
            .with_flag("y", false);
        let s = csv_string(&[r]).unwrap();
        let mut lines = s.split("\r\n");
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        let row = lines.next().unwrap();
        assert!(row.starts_with("drift,\"a,b\",q,"));
        assert!(row.contains("x=1;y=0"));
    }
}
