//! Error and bound statistics over an evaluation range.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterMetrics {
    pub rmse: f64,
    pub max_error: f64,
    /// Bound statistics, absent for estimators without bounds.
    pub avg_bound: Option<f64>,
    pub max_bound: Option<f64>,
    /// Fraction of samples with `|z − ẑ| ≤ bound`.
    pub containment_rate: Option<f64>,
    pub samples: usize,
}

pub fn compute_metrics(true_z: &[f64], estimates: &[f64], bounds: Option<&[f64]>) -> Result<FilterMetrics> {
    if true_z.len() != estimates.len() || bounds.is_some_and(|b| b.len() != true_z.len()) {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} true outputs, {} estimates, {} bounds",
            true_z.len(),
            estimates.len(),
            bounds.map_or(0, <[f64]>::len)
        )));
    }
    if true_z.is_empty() {
        return Err(Error::InvalidInput("no samples to evaluate".into()));
    }
    let n = true_z.len() as f64;
    let errors: Vec<f64> = true_z.iter().zip(estimates).map(|(z, e)| z - e).collect();
    let rmse = (errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    let max_error = errors.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let (avg_bound, max_bound, containment_rate) = match bounds {
        Some(b) => {
            let inside = errors.iter().zip(b).filter(|(e, t)| e.abs() <= **t).count();
            (
                Some(b.iter().sum::<f64>() / n),
                Some(b.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
                Some(inside as f64 / n),
            )
        }
        None => (None, None, None),
    };
    Ok(FilterMetrics {
        rmse,
        max_error,
        avg_bound,
        max_bound,
        containment_rate,
        samples: true_z.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_offset_estimates() {
        let z = [1.0, -2.0, 0.5];
        let m = compute_metrics(&z, &z, Some(&[0.0; 3])).unwrap();
        assert_eq!((m.rmse, m.max_error, m.containment_rate), (0.0, 0.0, Some(1.0)));
        let off: Vec<f64> = z.iter().map(|v| v + 0.1).collect();
        let m = compute_metrics(&z, &off, Some(&[0.05; 3])).unwrap();
        assert!((m.max_error - 0.1).abs() < 1e-15);
        assert_eq!(m.containment_rate, Some(0.0));
        assert!(compute_metrics(&z, &z[..2], None).is_err());
    }

    #[test]
    fn joint_permutation_invariance() {
        let z = [0.3, -1.0, 2.0, 0.7];
        let e = [0.1, -0.8, 2.5, 0.6];
        let b = [0.3, 0.1, 0.4, 0.2];
        let a = compute_metrics(&z, &e, Some(&b)).unwrap();
        let idx = [2, 0, 3, 1];
        let pz: Vec<f64> = idx.iter().map(|&i| z[i]).collect();
        let pe: Vec<f64> = idx.iter().map(|&i| e[i]).collect();
        let pb: Vec<f64> = idx.iter().map(|&i| b[i]).collect();
        let p = compute_metrics(&pz, &pe, Some(&pb)).unwrap();
        assert!((a.rmse - p.rmse).abs() < 1e-15);
        assert_eq!((a.max_error, a.containment_rate, a.max_bound), (p.max_error, p.containment_rate, p.max_bound));
    }
}
