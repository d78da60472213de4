//! Run configuration: a flat JSON object with every key optional.

use std::fs;
use std::path::{Path, PathBuf};

use ahglue_core::krylov::KrylovSettings;
use ahglue_core::pipeline::{sweep_spacing, PipelineConfig};
use ahglue_core::seed::AcSeedSpec;
use ahglue_core::solve::SolveSettings;
use ahglue_core::splice::SpliceConfig;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SeedFamily {
    /// Hyperbolic space with `K = g`.
    ExactHyperbolic,
    /// Closed-form perturbation pushed through the constraint solve.
    AcNumeric,
}

/// Everything a run needs. Field defaults are listed in [`RunConfig::default`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed_family: SeedFamily,
    /// Parameters of the AC-numeric seed; ignored for exact hyperbolic seeds.
    pub seed: AcSeedSpec,
    /// Neck parameter of a single run.
    pub epsilon: f64,
    /// Epsilon values of a sweep, largest first.
    pub sweep: Vec<f64>,
    /// Nodes per edge of the neck grid at the smallest epsilon.
    pub grid_n: usize,
    /// Cap on the outer truncation radius `1/eps`.
    pub r_out_cap: f64,
    /// Scale of the defining-function bump; `null` picks the default.
    pub b: Option<f64>,
    pub tol_linear: f64,
    pub tol_picard: f64,
    pub max_linear_iterations: usize,
    pub max_picard_steps: usize,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed_family: SeedFamily::AcNumeric,
            seed: AcSeedSpec::default(),
            epsilon: 0.2,
            sweep: vec![0.4, 0.283, 0.2, 0.141, 0.1],
            grid_n: 64,
            r_out_cap: 6.5,
            b: None,
            tol_linear: 1e-10,
            tol_picard: 1e-10,
            max_linear_iterations: 4000,
            max_picard_steps: 40,
            out_dir: PathBuf::from("ahglue-out"),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon {} must lie in (0, 1)", self.epsilon));
        }
        if let Some(e) = self.sweep.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return bad(format!("sweep value {e} must lie in (0, 1)"));
        }
        if self.grid_n < 16 {
            return bad(format!("grid_n {} below 16", self.grid_n));
        }
        if !(self.r_out_cap > std::f64::consts::SQRT_2) {
            return bad(format!("r_out_cap {} must exceed sqrt 2", self.r_out_cap));
        }
        if !(self.tol_linear > 0.0) || !(self.tol_picard > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.seed_family == SeedFamily::AcNumeric {
            self.seed.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn solve_settings(&self) -> SolveSettings {
        SolveSettings {
            krylov: KrylovSettings {
                tolerance: self.tol_linear,
                max_iterations: self.max_linear_iterations,
                ..KrylovSettings::default()
            },
            picard_tolerance: self.tol_picard,
            picard_max_steps: self.max_picard_steps,
            ..SolveSettings::default()
        }
    }

    /// Pipeline settings for a grid sized by the smallest of `epsilons`;
    /// `r_out` is the cap, clipped to `1/eps` per run.
    pub fn pipeline(&self, epsilons: &[f64]) -> Result<PipelineConfig, HarnessError> {
        let h = sweep_spacing(epsilons, self.r_out_cap, self.grid_n).map_err(|e| HarnessError::Config(e.to_string()))?;
        let eps = epsilons.iter().copied().fold(f64::INFINITY, f64::min);
        let mut splice = SpliceConfig::new(eps, h);
        splice.b = self.b;
        splice.r_out = Some(self.r_out_cap.min(1.0 / eps));
        splice.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        let mut cfg = PipelineConfig::new(splice);
        cfg.splice.r_out = Some(self.r_out_cap);
        cfg.solve = self.solve_settings();
        Ok(cfg)
    }
}
