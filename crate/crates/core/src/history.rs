use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Length of the `p`-step regressor for order `o` and `m` inputs.
pub fn regressor_len(order: usize, input_dim: usize, horizon: usize) -> usize {
    order + input_dim * (order + horizon - 1)
}

/// Regressor predicting sample `k` from `p` steps back:
/// `[y(k−p) … y(k−p−o+1), u(k−1)ᵀ … u(k−p−o+1)ᵀ]`. Requires `k ≥ p+o−1`.
pub fn regressor_at(y: &[f64], u: &[Vec<f64>], k: usize, order: usize, horizon: usize) -> Vec<f64> {
    debug_assert!(k + 1 >= horizon + order);
    let m = u.first().map_or(0, Vec::len);
    let mut phi = Vec::with_capacity(regressor_len(order, m, horizon));
    phi.extend((0..order).map(|i| y[k - horizon - i]));
    for j in 1..=(horizon + order - 1) {
        phi.extend_from_slice(&u[k - j]);
    }
    phi
}

/// Ring buffer of the most recent `(ũ, ỹ)` samples.
#[derive(Debug, Clone)]
pub struct History {
    order: usize,
    input_dim: usize,
    depth: usize,
    y: VecDeque<f64>,
    u: VecDeque<Vec<f64>>,
}

impl History {
    /// Buffer deep enough for horizons up to `max_horizon`.
    pub fn new(order: usize, input_dim: usize, max_horizon: usize) -> Self {
        let depth = max_horizon + order - 1;
        Self {
            order,
            input_dim,
            depth,
            y: VecDeque::with_capacity(depth + 1),
            u: VecDeque::with_capacity(depth + 1),
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.y.len() == self.depth
    }

    pub fn push(&mut self, u: &[f64], y: f64) -> Result<()> {
        if u.len() != self.input_dim {
            return Err(Error::InvalidInput(format!(
                "input has dimension {}, expected {}",
                u.len(),
                self.input_dim
            )));
        }
        if self.y.len() == self.depth {
            self.y.pop_front();
            self.u.pop_front();
        }
        self.y.push_back(y);
        self.u.push_back(u.to_vec());
        Ok(())
    }

    /// `φ_p` for the sample right after the newest one in the buffer.
    pub fn regressor(&self, horizon: usize) -> Result<Vec<f64>> {
        let needed = horizon + self.order - 1;
        if horizon == 0 || needed > self.depth {
            return Err(Error::InvalidInput(format!(
                "horizon {horizon} outside the buffer range 1..={}",
                self.depth + 1 - self.order
            )));
        }
        if self.len() < needed {
            return Err(Error::InsufficientHistory {
                needed,
                got: self.len(),
            });
        }
        let len = self.len();
        let mut phi = Vec::with_capacity(regressor_len(self.order, self.input_dim, horizon));
        phi.extend((0..self.order).map(|i| self.y[len - horizon - i]));
        for j in 1..=needed {
            phi.extend_from_slice(&self.u[len - j]);
        }
        Ok(phi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buffer_matches_direct_indexing() {
        let y: Vec<f64> = (0..20).map(|v| v as f64).collect();
        let u: Vec<Vec<f64>> = (0..20).map(|v| vec![100.0 + v as f64, -(v as f64)]).collect();
        let mut h = History::new(2, 2, 4);
        for k in 0..20 {
            for p in 1..=4 {
                match h.regressor(p) {
                    Ok(phi) => assert_eq!(phi, regressor_at(&y, &u, k, 2, p)),
                    Err(Error::InsufficientHistory { .. }) => assert!(k < p + 1),
                    Err(e) => panic!("{e}"),
                }
            }
            h.push(&u[k], y[k]).unwrap();
        }
        assert!(h.regressor(5).is_err());
    }
}
