//! Tomography extraction from a samples CSV, and raw sample emission:
//! the two halves of working with on-disk quadrature data.

use photonwit_core::homodyne::{sample_batch, SampleBatch};
use photonwit_core::tomography::{estimate_local_probs, p_star, Party, PStar};
use photonwit_core::LocalPhotonStats;
use serde::Serialize;
use std::io::{Read, Write};

use crate::config::ExperimentConfig;
use crate::pipeline::{build_state, point_seed};
use crate::CliError;

pub const EXTRACT_SCHEMA: &str = "extract-report/v1";

#[derive(Debug, Serialize)]
pub struct ExtractReport {
    pub schema: &'static str,
    pub n_records: usize,
    pub n_levels: usize,
    pub a: LocalPhotonStats,
    pub b: LocalPhotonStats,
    pub p_star: PStar,
}

/// Reads a samples CSV and estimates both parties' photon statistics
/// through pattern functions.
pub fn run_extract<R: Read>(input: R, n_levels: usize) -> Result<ExtractReport, CliError> {
    let batch = SampleBatch::read_csv(input)
        .map_err(|e| CliError::Usage(format!("samples csv: {e}")))?;
    let a = estimate_local_probs(&batch, Party::A, n_levels)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let b = estimate_local_probs(&batch, Party::B, n_levels)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(ExtractReport {
        schema: EXTRACT_SCHEMA,
        n_records: batch.count(),
        n_levels,
        a,
        b,
        p_star: p_star(&a, &b),
    })
}

/// Simulates the configuration's single point and writes the raw sample
/// records as CSV — the input `extract` expects back.
pub fn run_sample<W: Write>(config: &ExperimentConfig, out: W) -> Result<(), CliError> {
    config.validate(false)?;
    let points = config.grid_points();
    let [eta_ab] = points.as_slice() else {
        return Err(CliError::Usage(format!(
            "sample needs exactly one grid point, got {}",
            points.len()
        )));
    };
    let (eta_a, eta_b) = config.loss_mode.arm_efficiencies(*eta_ab);
    let state = build_state(config.source.p1, config.source.p2, eta_a, eta_b)?;
    let batch = sample_batch(&state, config.samples_per_setting, point_seed(config.seed, 0))
        .map_err(|e| CliError::CheckFailed(e.to_string()))?;
    batch.write_csv(out).map_err(|e| CliError::CheckFailed(e.to_string()))
}
