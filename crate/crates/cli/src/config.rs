//! Run configuration: JSON file values overridden by command-line flags,
//! with the resolved result echoed into every report.

use panel_mph::dgp::{benchmark_theta, DgpConfig};
use panel_mph::moments::Experiment;
use panel_mph::mph::Theta;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Raw file configuration; unknown keys are rejected.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Option<String>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    /// Common-parameter override `(alpha, beta, gamma)`.
    pub theta0: Option<[f64; 3]>,
    pub moment: Option<String>,
    pub p: Option<f64>,
    pub out: Option<String>,
    pub threads: Option<usize>,
    pub with_latent: Option<bool>,
    pub data: Option<String>,
    pub y: Option<f64>,
    pub yprev: Option<f64>,
    pub x: Option<f64>,
    pub flavor: Option<String>,
    pub model: Option<String>,
    pub phi: Option<String>,
    pub tol: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("reading config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("parsing config {}: {e}", path.display()))
    }
}

/// Validated values actually used by a command.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub experiment: Experiment,
    pub experiment_name: String,
    pub n: usize,
    pub seed: u64,
    pub theta0_override: Option<[f64; 3]>,
}

impl Resolved {
    pub fn build(
        file: &RunConfig,
        experiment: Option<String>,
        n: Option<usize>,
        seed: Option<u64>,
    ) -> Result<Self, String> {
        let name = experiment.or_else(|| file.experiment.clone()).unwrap_or_else(|| "A".into());
        let exp = match name.to_ascii_uppercase().as_str() {
            "A" => Experiment::A,
            "B" => Experiment::B,
            other => return Err(format!("unknown experiment {other} (expected A or B)")),
        };
        Ok(Resolved {
            experiment: exp,
            experiment_name: name.to_ascii_uppercase(),
            n: n.or(file.n).unwrap_or(100_000),
            seed: seed.or(file.seed).unwrap_or(1),
            theta0_override: file.theta0,
        })
    }

    pub fn theta0(&self) -> Result<Theta, String> {
        match self.theta0_override {
            Some([a, b, g]) => Theta::new(a, b, g).map_err(|e| e.to_string()),
            None => Ok(benchmark_theta()),
        }
    }

    pub fn dgp_config(&self) -> Result<DgpConfig, String> {
        let mut cfg = match self.experiment {
            Experiment::A => DgpConfig::experiment_a(),
            Experiment::B => DgpConfig::experiment_b(),
        };
        cfg.theta0 = self.theta0()?;
        Ok(cfg)
    }

    /// Resolved configuration echoed into reports, with per-command extras.
    pub fn echo(
        &self,
        file: &RunConfig,
        extras: &[(&str, serde_json::Value)],
    ) -> serde_json::Value {
        let th = self.theta0().expect("validated");
        let mut obj = serde_json::json!({
            "experiment": self.experiment_name,
            "n": self.n,
            "seed": self.seed,
            "theta0": [th.alpha, th.beta, th.gamma],
            "threads": file.threads,
        });
        for (k, v) in extras {
            obj[k] = v.clone();
        }
        obj
    }
}
