//! Loss sweeps: one simulated experiment per η_AB grid point, rendered
//! as a CSV whose rows stay in grid order and whose floats are formatted
//! to a fixed 12 significant digits so reruns are byte-identical.

use photonwit_core::homodyne::format_float;
use photonwit_core::{BoundMethod, LocalPhotonStats, Verdict};
use rayon::prelude::*;
use std::io::Write;

use crate::config::ExperimentConfig;
use crate::pipeline::{compute_bound, km_equivalent, simulate_point, verdict_label};
use crate::CliError;

/// One CSV row. Cells are `None` when the point or a bound failed; the
/// reason lands in `errors`.
pub struct SweepRow {
    pub eta_ab: f64,
    pub km: f64,
    pub s_exact: Option<f64>,
    pub s_mc: Option<f64>,
    pub s_se: Option<f64>,
    pub stats_a: Option<LocalPhotonStats>,
    pub stats_b: Option<LocalPhotonStats>,
    /// Aligned with the config's bounds list.
    pub bounds: Vec<Option<f64>>,
    pub verdicts: Vec<Option<Verdict>>,
    pub errors: Vec<String>,
}

/// Simulates every grid point. Points run in a worker pool; the returned
/// rows are in grid order regardless of completion order. Per-point
/// failures fill the row's errors and leave its cells empty; the sweep
/// itself only fails on invalid configuration.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>, CliError> {
    config.validate(true)?;
    let points = config.grid_points();
    let rows = points
        .par_iter()
        .enumerate()
        .map(|(index, &eta_ab)| build_row(config, eta_ab, index))
        .collect();
    Ok(rows)
}

fn build_row(config: &ExperimentConfig, eta_ab: f64, index: usize) -> SweepRow {
    let km = km_equivalent(eta_ab);
    let n_methods = config.bounds.len();
    match simulate_point(config, eta_ab, index) {
        Err(message) => SweepRow {
            eta_ab,
            km,
            s_exact: None,
            s_mc: None,
            s_se: None,
            stats_a: None,
            stats_b: None,
            bounds: vec![None; n_methods],
            verdicts: vec![None; n_methods],
            errors: vec![message],
        },
        Ok(outcome) => {
            let mut bounds = Vec::with_capacity(n_methods);
            let mut verdicts = Vec::with_capacity(n_methods);
            let mut errors = Vec::new();
            for &method in &config.bounds {
                match compute_bound(method, &outcome) {
                    Ok(result) => {
                        let v = photonwit_core::bounds::verdict(
                            &outcome.witness,
                            &result,
                            config.k_sigma,
                        );
                        bounds.push(Some(result.value));
                        verdicts.push(Some(v));
                    }
                    Err(e) => {
                        bounds.push(None);
                        verdicts.push(None);
                        errors.push(format!("{}: {e}", method.tag()));
                    }
                }
            }
            SweepRow {
                eta_ab,
                km,
                s_exact: Some(outcome.s_exact),
                s_mc: Some(outcome.witness.s),
                s_se: Some(outcome.witness.se),
                stats_a: Some(outcome.raw_a),
                stats_b: Some(outcome.raw_b),
                bounds,
                verdicts,
                errors,
            }
        }
    }
}

/// The header, in the documented column order.
pub fn csv_header(methods: &[BoundMethod]) -> Vec<String> {
    let mut header: Vec<String> = [
        "eta_ab", "km", "s_exact", "s_mc", "s_se", "p0a", "p1a", "pge2a", "p0b", "p1b", "pge2b",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(methods.iter().map(|m| format!("bound_{}", m.tag())));
    header.extend(methods.iter().map(|m| format!("verdict_{}", m.tag())));
    header.push("errors".into());
    header
}

fn float_cell(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

pub fn write_sweep_csv<W: Write>(
    rows: &[SweepRow],
    methods: &[BoundMethod],
    out: W,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(methods))?;
    for row in rows {
        let mut cells = vec![
            format_float(row.eta_ab),
            format_float(row.km),
            float_cell(row.s_exact),
            float_cell(row.s_mc),
            float_cell(row.s_se),
        ];
        for stats in [&row.stats_a, &row.stats_b] {
            cells.push(float_cell(stats.map(|s| s.p0)));
            cells.push(float_cell(stats.map(|s| s.p1)));
            cells.push(float_cell(stats.map(|s| s.p_ge2)));
        }
        cells.extend(row.bounds.iter().map(|b| float_cell(*b)));
        cells.extend(
            row.verdicts
                .iter()
                .map(|v| v.map(|v| verdict_label(v).to_string()).unwrap_or_default()),
        );
        cells.push(row.errors.join("; "));
        w.write_record(&cells)?;
    }
    w.flush()?;
    Ok(())
}
