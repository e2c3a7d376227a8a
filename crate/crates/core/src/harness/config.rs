use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Algorithm, Hyper};
use crate::error::{Error, Result};

/// Candidate values per hyperparameter. Lists an algorithm ignores are empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub hidden: Vec<usize>,
    pub shl: Vec<usize>,
    pub eta: Vec<f64>,
    pub sigma_init: Vec<f64>,
}

impl HyperGrid {
    /// Shipped search ranges per algorithm.
    pub fn default_for(algorithm: Algorithm) -> Self {
        let tens = |n: usize| (1..=n).map(|k| 10 * k).collect::<Vec<_>>();
        match algorithm {
            Algorithm::Uoro => Self {
                hidden: vec![10, 30, 50, 70, 90],
                shl: vec![10, 30, 50, 70, 90],
                eta: vec![0.05, 0.1, 0.2],
                sigma_init: vec![0.02, 0.05],
            },
            Algorithm::Rtrl => Self {
                hidden: vec![10, 25, 40, 55],
                shl: vec![10, 25, 40, 55],
                eta: vec![0.02, 0.05, 0.1, 0.2],
                sigma_init: vec![0.01, 0.02, 0.05],
            },
            Algorithm::Lms => Self {
                hidden: vec![],
                shl: vec![10, 30, 50, 70, 90],
                eta: vec![0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2],
                sigma_init: vec![],
            },
            Algorithm::Linreg => Self {
                hidden: vec![],
                shl: tens(9),
                eta: vec![],
                sigma_init: vec![],
            },
            Algorithm::None => Self {
                hidden: vec![],
                shl: vec![1],
                eta: vec![],
                sigma_init: vec![],
            },
        }
    }

    /// All tuples in tie-break order (q, then L, then eta, then sigma_init).
    pub fn tuples(&self, algorithm: Algorithm) -> Result<Vec<Hyper>> {
        let need = |name: &str, empty: bool| {
            if empty {
                Err(Error::Config(format!("{algorithm} grid has no {name} values")))
            } else {
                Ok(())
            }
        };
        need("history length", self.shl.is_empty())?;
        if self.shl.contains(&0) {
            return Err(Error::Config(format!("{algorithm} grid has a zero history length")));
        }
        let uses_eta = matches!(algorithm, Algorithm::Uoro | Algorithm::Rtrl | Algorithm::Lms);
        if uses_eta {
            need("learning rate", self.eta.is_empty())?;
        }
        if algorithm.is_stochastic() {
            need("hidden size", self.hidden.is_empty())?;
            need("init std-dev", self.sigma_init.is_empty())?;
        }

        let opt_usize = |v: &[usize], used: bool| if used { v.iter().map(|&x| Some(x)).collect() } else { vec![None] };
        let opt_f64 = |v: &[f64], used: bool| -> Vec<Option<f64>> {
            if used {
                let mut s = v.to_vec();
                s.sort_by(f64::total_cmp);
                s.dedup();
                s.into_iter().map(Some).collect()
            } else {
                vec![None]
            }
        };
        let mut hidden: Vec<Option<usize>> = opt_usize(&self.hidden, algorithm.is_stochastic());
        hidden.sort();
        hidden.dedup();
        let mut shl = self.shl.clone();
        shl.sort();
        shl.dedup();
        let etas = opt_f64(&self.eta, uses_eta);
        let sigmas = opt_f64(&self.sigma_init, algorithm.is_stochastic());

        let mut out = Vec::new();
        for &q in &hidden {
            for &l in &shl {
                for &eta in &etas {
                    for &sigma_init in &sigmas {
                        out.push(Hyper {
                            hidden: q,
                            shl: l,
                            eta,
                            sigma_init,
                        });
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Partial grid from a config file; absent lists keep the defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridOverride {
    pub hidden: Option<Vec<usize>>,
    pub shl: Option<Vec<usize>>,
    pub eta: Option<Vec<f64>>,
    pub sigma_init: Option<Vec<f64>>,
}

/// Everything that determines an experiment, loaded from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithms: Vec<Algorithm>,
    /// Forecast horizons in seconds.
    pub horizons: Vec<f64>,
    pub grids: BTreeMap<Algorithm, GridOverride>,
    pub n_cv: usize,
    pub n_test: usize,
    pub master_seed: u64,
    pub tau: f64,
    pub manifest: PathBuf,
    pub output_dir: PathBuf,
    /// Write the mean per-step loss of each evaluated condition.
    pub loss_traces: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algorithms: vec![Algorithm::Uoro],
            horizons: (1..=20).map(|k| k as f64 / 10.0).collect(),
            grids: BTreeMap::new(),
            n_cv: 50,
            n_test: 300,
            master_seed: 0,
            tau: 2.0,
            manifest: PathBuf::from("manifest.toml"),
            output_dir: PathBuf::from("results"),
            loss_traces: false,
        }
    }
}

impl ExperimentConfig {
    /// Reads and validates a config; relative paths resolve against the
    /// config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut config: Self = toml::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if config.manifest.is_relative() {
            config.manifest = base.join(&config.manifest);
        }
        if config.output_dir.is_relative() {
            config.output_dir = base.join(&config.output_dir);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms selected".into()));
        }
        if self.horizons.is_empty() {
            return Err(Error::Config("no horizons given".into()));
        }
        if let Some(h) = self.horizons.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
            return Err(Error::Config(format!("horizon {h} s is not positive")));
        }
        if let Some(h) = self.horizons.iter().find(|h| **h > 2.0) {
            log::warn!("horizon {h} s exceeds the usual 2 s range");
        }
        if self.n_cv == 0 || self.n_test == 0 {
            return Err(Error::Config("run counts must be at least one".into()));
        }
        if !(self.tau > 0.0) {
            return Err(Error::Config(format!("clip threshold {} must be positive", self.tau)));
        }
        for &a in &self.algorithms {
            self.grid(a).tuples(a)?;
        }
        Ok(())
    }

    pub fn grid(&self, algorithm: Algorithm) -> HyperGrid {
        let mut grid = HyperGrid::default_for(algorithm);
        if let Some(o) = self.grids.get(&algorithm) {
            if let Some(v) = &o.hidden {
                grid.hidden = v.clone();
            }
            if let Some(v) = &o.shl {
                grid.shl = v.clone();
            }
            if let Some(v) = &o.eta {
                grid.eta = v.clone();
            }
            if let Some(v) = &o.sigma_init {
                grid.sigma_init = v.clone();
            }
        }
        grid
    }

    /// Run count for cross-validation of one tuple.
    pub fn cv_runs(&self, algorithm: Algorithm) -> usize {
        if algorithm.is_stochastic() {
            self.n_cv
        } else {
            1
        }
    }

    pub fn test_runs(&self, algorithm: Algorithm) -> usize {
        if algorithm.is_stochastic() {
            self.n_test
        } else {
            1
        }
    }
}
