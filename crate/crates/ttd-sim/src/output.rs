//! Run artifacts: manifest.json, fixed-schema CSV tables, and summary.json.
//!
//! Floats are written with Rust's shortest round-trip formatting so a given
//! config and seed always produce byte-identical files.

use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use crate::config::ResolvedConfig;
use crate::experiments::{RunOutput, Table};
use crate::{CliError, Result};

fn io_err(e: std::io::Error) -> CliError {
    CliError::Runtime(format!("io error: {e}"))
}

/// The manifest echoes every resolved value the run used, including defaults
/// the config file left implicit.
pub fn manifest_json(cfg: &ResolvedConfig) -> Value {
    json!({
        "tool": env!("CARGO_PKG_NAME"),
        "tool_version": env!("CARGO_PKG_VERSION"),
        "config_version": crate::config::CONFIG_VERSION,
        "seed": cfg.seed,
        "output_dir": cfg.output_dir,
        "array": {
            "num_elements": cfg.array.num_elements,
            "element_spacing_m": cfg.array.element_spacing,
            "carrier_freq_hz": cfg.array.carrier_freq,
            "wave_speed_mps": cfg.array.wave_speed,
        },
        "impairments": {
            "delay_resolution_s": cfg.impairments.delay_resolution,
            "delay_range_s": cfg.impairments.delay_range,
            "analog_bw_hz": cfg.impairments.analog_bw,
            "buffer_loss_db": cfg.impairments.buffer_loss_db,
            "interleave_factor": cfg.impairments.interleave_factor,
            "lane_gain_sigma": cfg.impairments.lane_gain_sigma,
            "lane_offset_sigma": cfg.impairments.lane_offset_sigma,
            "seed": cfg.impairments.seed,
        },
        "resolved": cfg.experiment,
    })
}

fn write_csv(path: &Path, table: &Table) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Runtime(e.to_string()))?;
    w.write_record(table.header)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    for row in &table.rows {
        w.write_record(row)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    w.flush().map_err(io_err)
}

pub fn write_all(cfg: &ResolvedConfig, out: &RunOutput) -> Result<()> {
    let dir = Path::new(&cfg.output_dir);
    fs::create_dir_all(dir).map_err(io_err)?;

    let manifest = serde_json::to_string_pretty(&manifest_json(cfg))
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(dir.join("manifest.json"), manifest + "\n").map_err(io_err)?;

    for table in &out.tables {
        write_csv(&dir.join(table.name), table)?;
    }

    let summary = serde_json::to_string_pretty(&out.summary)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(dir.join("summary.json"), summary + "\n").map_err(io_err)?;
    Ok(())
}
