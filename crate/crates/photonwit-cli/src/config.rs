//! Experiment configuration: a JSON file, command-line overrides on top,
//! then validation.

use photonwit_core::BoundMethod;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::str::FromStr;

use crate::CliError;

/// Heralded-source parameters before the splitting beam splitter.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    /// Single-photon probability of the heralded state.
    pub p1: f64,
    /// Two-photon contamination probability.
    pub p2: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig { p1: 1.0, p2: 0.0 }
    }
}

/// How a grid value η_AB is distributed over the two arms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    /// Both arms lose equally: η_A = η_B = √η_AB.
    Sym,
    /// One lossless arm: η_A = 1, η_B = η_AB.
    Asym,
    /// Fixed per-arm efficiencies; the grid is replaced by the single
    /// point η_AB = η_A·η_B.
    Explicit { eta_a: f64, eta_b: f64 },
}

impl LossMode {
    /// Per-arm efficiencies realizing the overall transmission.
    pub fn arm_efficiencies(&self, eta_ab: f64) -> (f64, f64) {
        match *self {
            LossMode::Sym => (eta_ab.sqrt(), eta_ab.sqrt()),
            LossMode::Asym => (1.0, eta_ab),
            LossMode::Explicit { eta_a, eta_b } => (eta_a, eta_b),
        }
    }
}

/// Everything one run needs. All fields have defaults, so an empty JSON
/// object is a valid (ideal-state, single-point) configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub source: SourceConfig,
    pub loss_mode: LossMode,
    /// Overall transmissions η_AB to visit, in the file's order.
    pub eta_grid: Vec<f64>,
    pub samples_per_setting: usize,
    pub seed: u64,
    /// Bound methods evaluated per sweep point, in column order.
    pub bounds: Vec<BoundMethod>,
    /// Statistical penalty: a point is witnessed when S − k·SE clears
    /// the bound.
    pub k_sigma: f64,
    /// Report destination; stdout when absent.
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            source: SourceConfig::default(),
            loss_mode: LossMode::Sym,
            eta_grid: vec![1.0],
            samples_per_setting: 10_000,
            seed: 7,
            bounds: vec![
                BoundMethod::Qubit,
                BoundMethod::AnalyticMultiphoton,
                BoundMethod::SdpOriginal,
                BoundMethod::SdpEnhanced,
            ],
            k_sigma: 3.0,
            output: None,
        }
    }
}

/// Command-line values layered over the file; `None` keeps the file's
/// (or default) value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub loss_mode: Option<String>,
    pub eta_a: Option<f64>,
    pub eta_b: Option<f64>,
    pub eta_grid: Option<Vec<f64>>,
    pub samples_per_setting: Option<usize>,
    pub seed: Option<u64>,
    pub bounds: Option<Vec<String>>,
    pub k_sigma: Option<f64>,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Reads the file when given, otherwise starts from the defaults.
    pub fn load(path: Option<&PathBuf>) -> Result<Self, CliError> {
        match path {
            None => Ok(ExperimentConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("config {}: {e}", p.display())))
            }
        }
    }

    pub fn apply(&mut self, over: &Overrides) -> Result<(), CliError> {
        if let Some(p1) = over.p1 {
            self.source.p1 = p1;
        }
        if let Some(p2) = over.p2 {
            self.source.p2 = p2;
        }
        match over.loss_mode.as_deref() {
            None => {
                if over.eta_a.is_some() || over.eta_b.is_some() {
                    if !matches!(self.loss_mode, LossMode::Explicit { .. }) {
                        return Err(CliError::Usage(
                            "--eta-a/--eta-b need --loss-mode explicit".into(),
                        ));
                    }
                    let LossMode::Explicit { eta_a, eta_b } = self.loss_mode else {
                        unreachable!()
                    };
                    self.loss_mode = LossMode::Explicit {
                        eta_a: over.eta_a.unwrap_or(eta_a),
                        eta_b: over.eta_b.unwrap_or(eta_b),
                    };
                }
            }
            Some("sym") => self.loss_mode = LossMode::Sym,
            Some("asym") => self.loss_mode = LossMode::Asym,
            Some("explicit") => {
                let (Some(eta_a), Some(eta_b)) = (over.eta_a, over.eta_b) else {
                    return Err(CliError::Usage(
                        "--loss-mode explicit needs --eta-a and --eta-b".into(),
                    ));
                };
                self.loss_mode = LossMode::Explicit { eta_a, eta_b };
            }
            Some(other) => {
                return Err(CliError::Usage(format!(
                    "unknown loss mode '{other}' (expected sym, asym, or explicit)"
                )));
            }
        }
        if let Some(grid) = &over.eta_grid {
            self.eta_grid = grid.clone();
        }
        if let Some(n) = over.samples_per_setting {
            self.samples_per_setting = n;
        }
        if let Some(seed) = over.seed {
            self.seed = seed;
        }
        if let Some(tags) = &over.bounds {
            self.bounds = tags
                .iter()
                .map(|t| BoundMethod::from_str(t).map_err(CliError::Usage))
                .collect::<Result<_, _>>()?;
        }
        if let Some(k) = over.k_sigma {
            self.k_sigma = k;
        }
        if let Some(out) = &over.output {
            self.output = Some(out.clone());
        }
        Ok(())
    }

    /// The η_AB points the run will visit, in order. Explicit mode pins
    /// the grid to the single product point.
    pub fn grid_points(&self) -> Vec<f64> {
        match self.loss_mode {
            LossMode::Explicit { eta_a, eta_b } => vec![eta_a * eta_b],
            _ => self.eta_grid.clone(),
        }
    }

    /// Checks every invariant; `with_tomography` additionally demands
    /// the sample budget that makes pattern-function extraction usable.
    pub fn validate(&self, with_tomography: bool) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Usage(msg));
        let SourceConfig { p1, p2 } = self.source;
        if !(p1 >= 0.0 && p2 >= 0.0 && p1 + p2 <= 1.0 + 1e-12) {
            return bad(format!("source probabilities p1 = {p1}, p2 = {p2} must be nonnegative with p1 + p2 <= 1"));
        }
        if let LossMode::Explicit { eta_a, eta_b } = self.loss_mode {
            for (v, name) in [(eta_a, "eta_a"), (eta_b, "eta_b")] {
                if !(v > 0.0 && v <= 1.0) {
                    return bad(format!("{name} = {v} must lie in (0, 1]"));
                }
            }
            if !self.eta_grid.is_empty() && self.eta_grid != vec![1.0] {
                return bad("explicit loss mode fixes the point; leave eta_grid unset".into());
            }
        } else {
            if self.eta_grid.is_empty() {
                return bad("eta_grid must contain at least one point".into());
            }
            for &v in &self.eta_grid {
                if !(v > 0.0 && v <= 1.0) {
                    return bad(format!("grid value {v} must lie in (0, 1]"));
                }
            }
        }
        if with_tomography && self.samples_per_setting < 1_000 {
            return bad(format!(
                "samples_per_setting = {} is below the 1000 needed for tomography",
                self.samples_per_setting
            ));
        }
        if self.samples_per_setting == 0 {
            return bad("samples_per_setting must be positive".into());
        }
        if !(self.k_sigma.is_finite() && self.k_sigma >= 0.0) {
            return bad(format!("k_sigma = {} must be finite and nonnegative", self.k_sigma));
        }
        if self.bounds.is_empty() {
            return bad("bounds must name at least one method".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_json_is_the_default_config() {
        let cfg: ExperimentConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg.eta_grid, vec![1.0]);
        assert_eq!(cfg.samples_per_setting, 10_000);
        assert!(cfg.validate(true).is_ok());
    }

    #[test]
    fn loss_modes_round_trip_through_json() {
        for mode in [
            LossMode::Sym,
            LossMode::Asym,
            LossMode::Explicit { eta_a: 0.9, eta_b: 0.5 },
        ] {
            let text = serde_json::to_string(&mode).unwrap();
            let back: LossMode = serde_json::from_str(&text).unwrap();
            assert_eq!(back, mode);
        }
        assert_eq!(
            serde_json::from_str::<LossMode>("\"sym\"").unwrap(),
            LossMode::Sym
        );
    }

    #[test]
    fn arm_efficiencies_follow_the_mode() {
        let (a, b) = LossMode::Sym.arm_efficiencies(0.25);
        assert!((a - 0.5).abs() < 1e-15 && (b - 0.5).abs() < 1e-15);
        let (a, b) = LossMode::Asym.arm_efficiencies(0.25);
        assert!((a - 1.0).abs() < 1e-15 && (b - 0.25).abs() < 1e-15);
        let (a, b) = LossMode::Explicit { eta_a: 0.9, eta_b: 0.5 }.arm_efficiencies(0.7);
        assert!((a - 0.9).abs() < 1e-15 && (b - 0.5).abs() < 1e-15);
    }

    #[test]
    fn overrides_take_precedence_and_are_checked() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply(&Overrides {
            p1: Some(0.68),
            p2: Some(0.02),
            loss_mode: Some("asym".into()),
            eta_grid: Some(vec![0.5, 0.9]),
            bounds: Some(vec!["qubit".into(), "sdp_enhanced".into()]),
            ..Overrides::default()
        })
        .unwrap();
        assert_eq!(cfg.loss_mode, LossMode::Asym);
        assert_eq!(cfg.eta_grid, vec![0.5, 0.9]);
        assert_eq!(cfg.bounds, vec![BoundMethod::Qubit, BoundMethod::SdpEnhanced]);

        let err = cfg
            .apply(&Overrides { bounds: Some(vec!["nonsense".into()]), ..Overrides::default() })
            .unwrap_err();
        assert!(err.to_string().contains("nonsense"));

        let err = cfg
            .apply(&Overrides {
                loss_mode: Some("explicit".into()),
                eta_a: Some(0.9),
                ..Overrides::default()
            })
            .unwrap_err();
        assert!(err.to_string().contains("--eta-b"));
    }

    #[test]
    fn validation_rejects_out_of_range_values() {
        let mut cfg = ExperimentConfig::default();
        cfg.eta_grid = vec![0.0];
        assert!(cfg.validate(false).is_err());
        cfg.eta_grid = vec![1.2];
        assert!(cfg.validate(false).is_err());
        cfg.eta_grid = vec![0.5];
        cfg.samples_per_setting = 500;
        assert!(cfg.validate(true).is_err());
        assert!(cfg.validate(false).is_ok());
        cfg.source = SourceConfig { p1: 0.8, p2: 0.3 };
        assert!(cfg.validate(false).is_err());
    }
}
