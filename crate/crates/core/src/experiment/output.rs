//! CSV serialization of sweep results.

use std::io::Write;
use std::path::Path;

use super::sweep::{ElementRecord, SweepRecord};

pub const CSV_HEADER: [&str; 12] = [
    "scenario_id",
    "method",
    "N",
    "spacing",
    "alpha_tx",
    "alpha_rx",
    "gamma_loss",
    "sweep_index",
    "array_gain",
    "array_gain_db",
    "wall_time_s",
    "flags",
];

pub const ELEMENT_CSV_HEADER: [&str; 6] = [
    "scenario_id",
    "method",
    "update_index",
    "sweep_index",
    "element",
    "array_gain",
];

/// Shortest representation that parses back to the same `f64`. Plain
/// decimal notation in `[1e-5, 1e16)`, exponent notation outside it.
pub fn format_f64(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

/// Write records in the given order with the fixed header.
pub fn write_records<W: Write>(out: W, records: &[SweepRecord]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.scenario_id.to_string(),
            r.method.name().to_string(),
            r.n.to_string(),
            format_f64(r.spacing),
            format_f64(r.alpha_tx),
            format_f64(r.alpha_rx),
            format_f64(r.gamma_loss),
            r.sweep_index.to_string(),
            opt(r.array_gain),
            opt(r.array_gain_db()),
            format_f64(r.wall_time_s),
            r.flags.join(";"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_element_records<W: Write>(out: W, records: &[ElementRecord]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(ELEMENT_CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.scenario_id.to_string(),
            r.method.name().to_string(),
            r.update_index.to_string(),
            r.sweep_index.to_string(),
            r.element.map(|e| e.to_string()).unwrap_or_default(),
            format_f64(r.array_gain),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(path: &Path, records: &[SweepRecord]) -> csv::Result<()> {
    write_records(std::fs::File::create(path)?, records)
}
