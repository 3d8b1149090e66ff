//! Steady-state Kalman filter used as the exact-model baseline.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sim::DiscreteStateSpace;

/// `x(k+1) = Ad x + Bd u + w`, `y = C x + d` with `Cov(w) = Q`, `Var(d) = R`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    pub ad: DMatrix<f64>,
    pub bd: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub process_cov: DMatrix<f64>,
    pub measurement_cov: f64,
}

impl StateSpaceModel {
    pub fn new(
        ad: DMatrix<f64>,
        bd: DMatrix<f64>,
        c: DMatrix<f64>,
        process_cov: DMatrix<f64>,
        measurement_cov: f64,
    ) -> Result<Self> {
        let n = ad.nrows();
        if ad.ncols() != n || bd.nrows() != n || c.nrows() != 1 || c.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "inconsistent shapes: Ad {}x{}, Bd {}x{}, C {}x{}",
                ad.nrows(),
                ad.ncols(),
                bd.nrows(),
                bd.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        if process_cov.shape() != (n, n) {
            return Err(Error::InvalidInput("Q must be n x n".into()));
        }
        let asym = (&process_cov - process_cov.transpose()).amax();
        if asym > 1e-12 * process_cov.amax().max(1.0) {
            return Err(Error::InvalidInput("Q is not symmetric".into()));
        }
        let min_eig = process_cov.clone().symmetric_eigenvalues().min();
        if min_eig < -1e-12 * process_cov.amax().max(1.0) {
            return Err(Error::InvalidInput(format!("Q is not positive semidefinite (eigenvalue {min_eig:e})")));
        }
        if !(measurement_cov > 0.0) {
            return Err(Error::InvalidInput(format!("R must be positive, got {measurement_cov}")));
        }
        Ok(Self {
            ad,
            bd,
            c,
            process_cov,
            measurement_cov,
        })
    }

    /// Exact discretized plant with `Q = σ_w² Bd Bdᵀ + q_reg·I`.
    pub fn from_discrete(sys: &DiscreteStateSpace, process_var: f64, q_reg: f64, measurement_var: f64) -> Result<Self> {
        let n = sys.ad.nrows();
        let q = &sys.bd * sys.bd.transpose() * process_var + DMatrix::identity(n, n) * q_reg;
        Self::new(sys.ad.clone(), sys.bd.clone(), sys.c.clone(), q, measurement_var)
    }

    pub fn state_dim(&self) -> usize {
        self.ad.nrows()
    }

    /// One step of the prediction Riccati map.
    pub fn riccati(&self, p: &DMatrix<f64>) -> DMatrix<f64> {
        let a = &self.ad;
        let pct = p * self.c.transpose();
        let s = (&self.c * &pct)[(0, 0)] + self.measurement_cov;
        let apct = a * &pct;
        let next = a * p * a.transpose() - &apct * apct.transpose() / s + &self.process_cov;
        (&next + next.transpose()) * 0.5
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyGain {
    pub gain: DVector<f64>,
    /// Prior (one-step prediction) covariance at convergence.
    pub covariance: DMatrix<f64>,
    pub iterations: usize,
}

pub const INITIAL_COVARIANCE: f64 = 1e3;

/// Iterates the Riccati map from `10³·I` until successive iterates differ
/// by at most `tol` in the max norm.
pub fn dare_steady_gain(model: &StateSpaceModel, tol: f64, max_iter: usize) -> Result<SteadyGain> {
    let n = model.state_dim();
    let mut p = DMatrix::identity(n, n) * INITIAL_COVARIANCE;
    for it in 1..=max_iter {
        let next = model.riccati(&p);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NoConvergence(it));
        }
        let diff = (&next - &p).amax();
        p = next;
        if diff <= tol {
            let pct = &p * model.c.transpose();
            let s = (&model.c * &pct)[(0, 0)] + model.measurement_cov;
            return Ok(SteadyGain {
                gain: pct.column(0).into_owned() / s,
                covariance: p,
                iterations: it,
            });
        }
    }
    Err(Error::NoConvergence(max_iter))
}

/// `‖P − f(P)‖_∞` for the Riccati map `f`.
pub fn dare_residual(model: &StateSpaceModel, p: &DMatrix<f64>) -> f64 {
    (p - model.riccati(p)).amax()
}

/// Correct the prior with `y`, report `C x̂`, then predict with `u`.
/// Returns the next prior and the output estimate.
pub fn kf_step(
    prior: &DVector<f64>,
    gain: &DVector<f64>,
    model: &StateSpaceModel,
    u: &[f64],
    y: f64,
) -> Result<(DVector<f64>, f64)> {
    let n = model.state_dim();
    if prior.len() != n || gain.len() != n || u.len() != model.bd.ncols() {
        return Err(Error::InvalidInput(format!(
            "state {}, gain {}, input {} do not fit a model with {n} states and {} inputs",
            prior.len(),
            gain.len(),
            u.len(),
            model.bd.ncols()
        )));
    }
    let innovation = y - (&model.c * prior)[(0, 0)];
    let post = prior + gain * innovation;
    let estimate = (&model.c * &post)[(0, 0)];
    let next = &model.ad * &post + &model.bd * DVector::from_column_slice(u);
    Ok((next, estimate))
}
