//! Declarative experiment configs: TOML in, validated parameters out.
//!
//! A config is the single source of truth for a run — it is echoed
//! verbatim into the output manifest so every artifact can be traced back
//! to the exact parameters (and re-run bit-identically, worker count
//! included).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dgff::LocalTimeEngine;
use crate::tree::OffspringSpec;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Full cover-time trials with normalized statistics.
    Cover,
    /// Walker runs to fixed root budgets, recording total real time τ.
    Excursion,
    /// Local-time fields at t_μ budgets plus landscape diagnostics.
    LocaltimeField,
    /// Counts of uncovered generation-n vertices at t_μ budgets.
    UncoveredCount,
    /// Paired samples of both sides of the Ray-Knight identity.
    RayKnight,
    /// Maxima of the Gaussian field over generation n.
    DgffMax,
    /// Per-tree growth/mass regularity statistics (fresh tree per trial).
    Regularity,
}

impl ExperimentKind {
    pub fn label(self) -> &'static str {
        match self {
            ExperimentKind::Cover => "cover",
            ExperimentKind::Excursion => "excursion",
            ExperimentKind::LocaltimeField => "localtime-field",
            ExperimentKind::UncoveredCount => "uncovered-count",
            ExperimentKind::RayKnight => "ray-knight",
            ExperimentKind::DgffMax => "dgff-max",
            ExperimentKind::Regularity => "regularity",
        }
    }
}

/// Which sampler produces local-time fields where a choice exists
/// (`ray-knight`, `localtime-field`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineChoice {
    #[default]
    Exact,
    Walker,
}

impl From<EngineChoice> for LocalTimeEngine {
    fn from(c: EngineChoice) -> Self {
        match c {
            EngineChoice::Exact => LocalTimeEngine::Exact,
            EngineChoice::Walker => LocalTimeEngine::Walker,
        }
    }
}

fn default_workers() -> usize {
    1
}

fn default_c_sep() -> f64 {
    4.4
}

fn default_epsilon() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Offspring PMF over 0..=k children.
    pub offspring: Vec<f64>,
    pub lambda: f64,
    /// Truncation depth.
    pub n: usize,
    pub trials: usize,
    /// μ offsets for budget-driven experiments (default: [0]).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_grid: Option<Vec<f64>>,
    /// Raw root budgets for `excursion` and `ray-knight`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    pub master_seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    pub output_dir: PathBuf,
    /// Resample the tree inside every trial stream instead of fixing one
    /// tree for the whole experiment (annealed rather than quenched).
    #[serde(default)]
    pub fresh_tree_per_trial: bool,
    /// Ancestor-generation separation constant (needs c > 3/log λ).
    #[serde(default = "default_c_sep")]
    pub c_sep: f64,
    /// Exponent slack in the subtree second-moment ratio.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub engine: EngineChoice,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// μ grid with its default.
    pub fn mu_grid(&self) -> Vec<f64> {
        self.mu_grid.clone().unwrap_or_else(|| vec![0.0])
    }

    /// Checks every invariant that does not depend on the sampled tree and
    /// returns the validated offspring law.
    pub fn validate(&self) -> Result<OffspringSpec> {
        let spec = OffspringSpec::new(&self.offspring)?;
        if !self.lambda.is_finite() || self.lambda <= 1.0 {
            return Err(Error::InvalidConfig(format!(
                "lambda = {} must be a finite number > 1",
                self.lambda
            )));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be ≥ 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be ≥ 1".into()));
        }
        if let Some(grid) = &self.mu_grid {
            if grid.is_empty() || grid.iter().any(|m| !m.is_finite()) {
                return Err(Error::InvalidConfig("mu_grid must be nonempty and finite".into()));
            }
            let mut sorted = grid.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidConfig("mu_grid entries must be distinct".into()));
            }
        }
        match self.experiment {
            ExperimentKind::Excursion | ExperimentKind::RayKnight => {
                let grid = self.t_grid.as_deref().unwrap_or(&[]);
                if grid.is_empty() || grid.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "{} needs t_grid with positive finite budgets",
                        self.experiment.label()
                    )));
                }
                let mut sorted = grid.to_vec();
                sorted.sort_by(f64::total_cmp);
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::InvalidConfig(
                        "t_grid entries must be distinct".into(),
                    ));
                }
            }
            ExperimentKind::LocaltimeField => {
                if self.c_sep <= 3.0 / self.lambda.ln() {
                    return Err(Error::InvalidConfig(format!(
                        "c_sep = {} must exceed 3/log λ = {}",
                        self.c_sep,
                        3.0 / self.lambda.ln()
                    )));
                }
            }
            ExperimentKind::Regularity => {
                if self.n < 2 {
                    return Err(Error::InvalidConfig(
                        "regularity needs depth n ≥ 2".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_toml() -> String {
        r#"
            experiment = "cover"
            offspring = [0.0625, 0.375, 0.5625]
            lambda = 2.0
            n = 10
            trials = 100
            master_seed = 7
            output_dir = "/tmp/out"
        "#
        .to_string()
    }

    #[test]
    fn parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml_str(&base_toml()).unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Cover);
        assert_eq!(cfg.workers, 1);
        assert_eq!(cfg.mu_grid(), vec![0.0]);
        assert!(!cfg.fresh_tree_per_trial);
        assert_eq!(cfg.engine, EngineChoice::Exact);
        assert_eq!(cfg.c_sep, 4.4);
        let spec = cfg.validate().unwrap();
        assert!((spec.mean() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn kebab_case_kinds_round_trip() {
        for (label, kind) in [
            ("cover", ExperimentKind::Cover),
            ("excursion", ExperimentKind::Excursion),
            ("localtime-field", ExperimentKind::LocaltimeField),
            ("uncovered-count", ExperimentKind::UncoveredCount),
            ("ray-knight", ExperimentKind::RayKnight),
            ("dgff-max", ExperimentKind::DgffMax),
            ("regularity", ExperimentKind::Regularity),
        ] {
            let toml = base_toml().replace("\"cover\"", &format!("{label:?}"))
                + "t_grid = [1.0]\n";
            let cfg = ExperimentConfig::from_toml_str(&toml).unwrap();
            assert_eq!(cfg.experiment, kind);
            assert_eq!(kind.label(), label);
        }
    }

    #[test]
    fn echo_round_trips_exactly() {
        let mut cfg = ExperimentConfig::from_toml_str(&base_toml()).unwrap();
        cfg.mu_grid = Some(vec![-1.0, 0.0, 1.5]);
        cfg.workers = 8;
        let echoed = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, echoed);
    }

    #[test]
    fn rejects_unknown_fields() {
        let toml = base_toml() + "frobnicate = 3\n";
        assert!(ExperimentConfig::from_toml_str(&toml).is_err());
    }

    #[test]
    fn validation_catches_bad_fields() {
        let ok = ExperimentConfig::from_toml_str(&base_toml()).unwrap();

        let mut c = ok.clone();
        c.lambda = 1.0;
        assert!(c.validate().is_err());

        let mut c = ok.clone();
        c.offspring = vec![0.9, 0.1]; // m = 0.1, subcritical
        assert!(c.validate().is_err());

        let mut c = ok.clone();
        c.trials = 0;
        assert!(c.validate().is_err());

        let mut c = ok.clone();
        c.workers = 0;
        assert!(c.validate().is_err());

        let mut c = ok.clone();
        c.mu_grid = Some(vec![0.0, 0.0]);
        assert!(c.validate().is_err());

        let mut c = ok.clone();
        c.experiment = ExperimentKind::Excursion;
        assert!(c.validate().is_err(), "missing t_grid");
        c.t_grid = Some(vec![1.0, -2.0]);
        assert!(c.validate().is_err(), "negative budget");
        c.t_grid = Some(vec![1.0, 4.0]);
        assert!(c.validate().is_ok());

        let mut c = ok.clone();
        c.experiment = ExperimentKind::LocaltimeField;
        c.lambda = 1.5; // 3/log(1.5) ≈ 7.4 > default c_sep
        assert!(c.validate().is_err());
        c.c_sep = 8.0;
        assert!(c.validate().is_ok());

        let mut c = ok;
        c.experiment = ExperimentKind::Regularity;
        c.n = 1;
        assert!(c.validate().is_err());
    }
}
