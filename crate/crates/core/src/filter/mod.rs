//! Output intervals from banks of multistep predictors and their
//! intersection.

mod global;
mod local;

pub use global::{global_filter_step, global_interval_bounds, GlobalPredictorBank};
pub use local::{local_filter_step, local_interval_bounds, LocalBank, LocalPredictor};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `[lower, upper]`, guaranteed to contain the true output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputInterval {
    pub lower: f64,
    pub upper: f64,
}

impl OutputInterval {
    pub fn center(&self) -> f64 {
        (self.upper + self.lower) / 2.0
    }

    pub fn half_width(&self) -> f64 {
        (self.upper - self.lower) / 2.0
    }

    pub fn contains(&self, z: f64) -> bool {
        self.lower <= z && z <= self.upper
    }
}

/// Interval predicted by the horizon-`horizon` predictor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonInterval {
    pub horizon: usize,
    pub lower: f64,
    pub upper: f64,
}

/// What to do when the per-horizon intervals do not overlap.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmptyPolicy {
    #[default]
    Error,
    /// Midpoint of the two conflicting bounds, zero width, marked untrusted.
    Clip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalFilterReport {
    pub time_index: usize,
    pub estimate: f64,
    pub bound: f64,
    pub interval: OutputInterval,
    pub per_horizon_intervals: Vec<HorizonInterval>,
    /// False only for clipped (empty) intersections.
    pub trusted: bool,
}

impl LocalFilterReport {
    fn from_intervals(time_index: usize, per_horizon: Vec<HorizonInterval>, policy: EmptyPolicy) -> Result<Self> {
        let (interval, trusted) = match intersect_intervals(&per_horizon) {
            Ok(iv) => (iv, true),
            Err(Error::EmptyIntersection { lower, upper, .. }) if policy == EmptyPolicy::Clip => {
                let mid = (lower + upper) / 2.0;
                (OutputInterval { lower: mid, upper: mid }, false)
            }
            Err(e) => return Err(e),
        };
        Ok(Self {
            time_index,
            estimate: interval.center(),
            bound: interval.half_width(),
            interval,
            per_horizon_intervals: per_horizon,
            trusted,
        })
    }
}

/// Gaps up to this relative size are roundoff between touching intervals.
pub const TOUCH_TOL: f64 = 1e-12;

/// Largest lower bound and smallest upper bound. Bounds that cross by no
/// more than roundoff collapse to their midpoint.
pub fn intersect_intervals(per_horizon: &[HorizonInterval]) -> Result<OutputInterval> {
    let first = per_horizon
        .first()
        .ok_or_else(|| Error::InvalidInput("no intervals to intersect".into()))?;
    let (mut lo, mut hi) = (first, first);
    for iv in &per_horizon[1..] {
        if iv.lower > lo.lower {
            lo = iv;
        }
        if iv.upper < hi.upper {
            hi = iv;
        }
    }
    if lo.lower > hi.upper {
        let scale = 1.0 + lo.lower.abs().max(hi.upper.abs());
        if lo.lower - hi.upper <= TOUCH_TOL * scale {
            let mid = 0.5 * (lo.lower + hi.upper);
            return Ok(OutputInterval { lower: mid, upper: mid });
        }
        return Err(Error::EmptyIntersection {
            lower: lo.lower,
            upper: hi.upper,
            lower_horizon: lo.horizon,
            upper_horizon: hi.horizon,
        });
    }
    Ok(OutputInterval {
        lower: lo.lower,
        upper: hi.upper,
    })
}
