//! Global bounds: fixed predictors with precomputed widths, no LPs online.

use serde::{Deserialize, Serialize};

use super::{EmptyPolicy, HorizonInterval, LocalFilterReport};
use crate::error::{Error, Result};
use crate::history::History;
use crate::identify::GlobalPredictor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalPredictorBank {
    pub predictors: Vec<GlobalPredictor>,
    pub order: usize,
    pub input_dim: usize,
    #[serde(default)]
    pub policy: EmptyPolicy,
}

impl GlobalPredictorBank {
    /// Horizons must be exactly `1..=p̄`.
    pub fn new(predictors: Vec<GlobalPredictor>, order: usize, input_dim: usize) -> Result<Self> {
        for (i, g) in predictors.iter().enumerate() {
            if g.horizon != i + 1 {
                return Err(Error::InvalidInput(format!(
                    "bank position {i} holds horizon {}, expected {}",
                    g.horizon,
                    i + 1
                )));
            }
        }
        Self::with_subset(predictors, order, input_dim)
    }

    /// Any strictly increasing set of horizons.
    pub fn with_subset(predictors: Vec<GlobalPredictor>, order: usize, input_dim: usize) -> Result<Self> {
        if predictors.is_empty() {
            return Err(Error::InvalidInput("empty predictor bank".into()));
        }
        if predictors.windows(2).any(|w| w[0].horizon >= w[1].horizon) || predictors[0].horizon == 0 {
            return Err(Error::InvalidInput("horizons must be positive and increasing".into()));
        }
        for g in &predictors {
            if !(g.tau_bar >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "horizon {} has bound {}",
                    g.horizon, g.tau_bar
                )));
            }
            let len = crate::history::regressor_len(order, input_dim, g.horizon);
            if g.theta_hat.len() != len {
                return Err(Error::InvalidInput(format!(
                    "horizon {} predictor has {} parameters, expected {len}",
                    g.horizon,
                    g.theta_hat.len()
                )));
            }
        }
        Ok(Self {
            predictors,
            order,
            input_dim,
            policy: EmptyPolicy::Error,
        })
    }

    pub fn max_horizon(&self) -> usize {
        self.predictors.last().map_or(0, |g| g.horizon)
    }

    /// `min_p τ̄̂_p`.
    pub fn min_tau_bar(&self) -> f64 {
        self.predictors.iter().map(|g| g.tau_bar).fold(f64::INFINITY, f64::min)
    }
}

/// `φ̃ᵀθ̂_p ± τ̄̂_p` for every horizon in the bank.
pub fn global_interval_bounds(bank: &GlobalPredictorBank, history: &History) -> Result<Vec<HorizonInterval>> {
    bank.predictors
        .iter()
        .map(|g| {
            let center = g.predict(&history.regressor(g.horizon)?);
            Ok(HorizonInterval {
                horizon: g.horizon,
                lower: center - g.tau_bar,
                upper: center + g.tau_bar,
            })
        })
        .collect()
}

pub fn global_filter_step(bank: &GlobalPredictorBank, history: &History, k: usize) -> Result<LocalFilterReport> {
    let mut r = LocalFilterReport::from_intervals(k, global_interval_bounds(bank, history)?, bank.policy)?;
    // the intersection is never wider than its narrowest member; (c+τ)−(c−τ)
    // can overshoot 2τ by an ulp
    r.bound = r.bound.min(bank.min_tau_bar());
    Ok(r)
}
