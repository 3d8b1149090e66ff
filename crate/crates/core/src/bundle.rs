//! Versioned JSON container for the offline identification results.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{GlobalPredictorBank, LocalBank};
use crate::identify::{ErrorBoundLambda, FeasibleParameterSet, GlobalPredictor};
use crate::polytope::Polytope;

pub const BUNDLE_VERSION: u32 = 1;

/// Everything identified for one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonModel {
    pub order: usize,
    pub input_dim: usize,
    pub horizon: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub gamma_bar: f64,
    pub d_bar: f64,
    pub lambda: f64,
    pub lp_optimum: f64,
    pub rows_before: usize,
    pub fps: Polytope,
    pub theta_hat: Option<Vec<f64>>,
    pub tau_bar: Option<f64>,
    pub mismatch: Option<f64>,
}

impl HorizonModel {
    pub fn fps(&self) -> FeasibleParameterSet {
        FeasibleParameterSet {
            horizon: self.horizon,
            polytope: self.fps.clone(),
            lambda: ErrorBoundLambda {
                horizon: self.horizon,
                lambda: self.lambda,
                lp_optimum: self.lp_optimum,
                alpha: self.alpha,
                d_bar: self.d_bar,
            },
            reduced: true,
        }
    }

    pub fn predictor(&self) -> Option<GlobalPredictor> {
        Some(GlobalPredictor {
            horizon: self.horizon,
            theta_hat: self.theta_hat.clone()?,
            tau_bar: self.tau_bar?,
            gamma_bar: self.gamma_bar,
            mismatch: self.mismatch?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub version: u32,
    pub config_hash: String,
    pub order: usize,
    pub input_dim: usize,
    pub d_bar: f64,
    pub sample_time: f64,
    /// Identification samples per horizon.
    pub samples: usize,
    pub horizons: Vec<HorizonModel>,
}

impl Bundle {
    pub fn max_horizon(&self) -> usize {
        self.horizons.len()
    }

    pub fn horizon(&self, p: usize) -> Result<&HorizonModel> {
        self.horizons
            .get(p.wrapping_sub(1))
            .ok_or_else(|| Error::BundleMismatch(format!("bundle has no horizon {p}")))
    }

    /// Rejects bundles identified for another order, input count or bound.
    pub fn check(&self, order: usize, input_dim: usize, d_bar: f64, pbar: usize) -> Result<()> {
        if self.order != order || self.input_dim != input_dim {
            return Err(Error::BundleMismatch(format!(
                "bundle has o={}, m={}; configuration needs o={order}, m={input_dim}",
                self.order, self.input_dim
            )));
        }
        if self.d_bar != d_bar {
            return Err(Error::BundleMismatch(format!(
                "bundle was identified with d_bar={}, configuration says {d_bar}",
                self.d_bar
            )));
        }
        if pbar > self.max_horizon() {
            return Err(Error::BundleMismatch(format!(
                "pbar={pbar} but the bundle stops at horizon {}",
                self.max_horizon()
            )));
        }
        Ok(())
    }

    pub fn local_bank(&self, pbar: usize, gamma: f64) -> Result<LocalBank> {
        let fps = (1..=pbar).map(|p| self.horizon(p).map(HorizonModel::fps)).collect::<Result<_>>()?;
        LocalBank::new(fps, gamma)
    }

    /// Dense `1..=pbar`, or the given horizons.
    pub fn global_bank(&self, pbar: usize, subset: Option<&[usize]>) -> Result<GlobalPredictorBank> {
        let dense: Vec<usize> = (1..=pbar).collect();
        let horizons = subset.unwrap_or(&dense);
        let preds = horizons
            .iter()
            .map(|&p| {
                self.horizon(p)?
                    .predictor()
                    .ok_or_else(|| Error::BundleMismatch(format!("horizon {p} has no global predictor")))
            })
            .collect::<Result<Vec<_>>>()?;
        if subset.is_some() {
            GlobalPredictorBank::with_subset(preds, self.order, self.input_dim)
        } else {
            GlobalPredictorBank::new(preds, self.order, self.input_dim)
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let b: Bundle = serde_json::from_str(text)?;
        if b.version != BUNDLE_VERSION {
            return Err(Error::BundleMismatch(format!(
                "bundle version {} is not supported (expected {BUNDLE_VERSION})",
                b.version
            )));
        }
        for (i, h) in b.horizons.iter().enumerate() {
            if h.horizon != i + 1 || h.order != b.order || h.input_dim != b.input_dim {
                return Err(Error::BundleMismatch(format!("entry {i} is inconsistent with the bundle header")));
            }
        }
        Ok(b)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
