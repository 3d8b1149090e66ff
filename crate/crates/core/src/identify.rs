//! Offline identification: per-horizon datasets, the worst-case error bound,
//! feasible parameter sets and min–max global predictors.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::data::ExperimentData;
use crate::error::{Error, Result};
use crate::history::{regressor_at, regressor_len};
use crate::lp::{DenseSimplex, LpOutcome, LpSolver, LpView};
use crate::polytope::{remove_redundant_constraints, Polytope, DEFAULT_SLACK_TOL};

/// The pairs `(φ̃_p(k−p), ỹ(k))` for one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorDataset {
    pub horizon: usize,
    pub order: usize,
    pub input_dim: usize,
    pub regressors: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl RegressorDataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        regressor_len(self.order, self.input_dim, self.horizon)
    }
}

/// All complete regressors of horizon `horizon`: `N = L − (p+o−1)`.
pub fn assemble_regressors(data: &ExperimentData, order: usize, horizon: usize) -> Result<RegressorDataset> {
    assemble_with_start(data, order, horizon, horizon)
}

/// Like [`assemble_regressors`] but every horizon up to `max_horizon` yields
/// the same targets, `ỹ(k)` for `k ≥ max_horizon + o − 1`.
pub fn assemble_regressors_common(
    data: &ExperimentData,
    order: usize,
    horizon: usize,
    max_horizon: usize,
) -> Result<RegressorDataset> {
    if horizon > max_horizon {
        return Err(Error::InvalidInput(format!(
            "horizon {horizon} exceeds the common maximum {max_horizon}"
        )));
    }
    assemble_with_start(data, order, horizon, max_horizon)
}

fn assemble_with_start(
    data: &ExperimentData,
    order: usize,
    horizon: usize,
    start_horizon: usize,
) -> Result<RegressorDataset> {
    if order == 0 || horizon == 0 {
        return Err(Error::InvalidInput("order and horizon must be positive".into()));
    }
    let needed = order + start_horizon + 1;
    if data.len() < needed {
        return Err(Error::TooFewSamples {
            needed,
            got: data.len(),
        });
    }
    let first = start_horizon + order - 1;
    let y = &data.measured_outputs;
    let regressors = (first..data.len())
        .map(|k| regressor_at(y, &data.inputs, k, order, horizon))
        .collect();
    Ok(RegressorDataset {
        horizon,
        order,
        input_dim: data.input_dim(),
        regressors,
        targets: y[first..].to_vec(),
    })
}

/// `λ̲_p = α·λ*`, with `λ*` the smallest uniform error that some parameter
/// vector achieves on the data once the noise bound is discounted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBoundLambda {
    pub horizon: usize,
    pub lambda: f64,
    /// Unscaled LP optimum `λ*`.
    pub lp_optimum: f64,
    pub alpha: f64,
    pub d_bar: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `min λ s.t. |ỹ − φ̃ᵀθ| ≤ λ + d̄ for all pairs, λ ≥ 0`.
pub fn estimate_lambda(dataset: &RegressorDataset, d_bar: f64, alpha: f64) -> Result<ErrorBoundLambda> {
    if !(alpha > 1.0) {
        return Err(Error::InvalidInput(format!("alpha must exceed 1, got {alpha}")));
    }
    if !(d_bar >= 0.0) {
        return Err(Error::InvalidInput(format!("d_bar must be nonnegative, got {d_bar}")));
    }
    let dim = dataset.dim();
    if dataset.len() < dim {
        return Err(Error::TooFewSamples {
            needed: dim,
            got: dataset.len(),
        });
    }
    let n = dim + 1;
    let mut matrix = Vec::with_capacity((2 * dataset.len() + 1) * n);
    let mut rhs = Vec::with_capacity(2 * dataset.len() + 1);
    for (phi, &y) in dataset.regressors.iter().zip(&dataset.targets) {
        matrix.extend_from_slice(phi);
        matrix.push(-1.0);
        rhs.push(y + d_bar);
        matrix.extend(phi.iter().map(|v| -v));
        matrix.push(-1.0);
        rhs.push(-y + d_bar);
    }
    matrix.extend(std::iter::repeat_n(0.0, dim));
    matrix.push(-1.0);
    rhs.push(0.0);
    let mut cost = vec![0.0; n];
    cost[dim] = 1.0;
    let out = DenseSimplex::default().solve_view(
        LpView {
            cost: &cost,
            matrix: &matrix,
            rhs: &rhs,
        },
        None,
    )?;
    let lp_optimum = match out {
        LpOutcome::Optimal(s) => s.x[dim].max(0.0),
        other => {
            return Err(Error::InvalidInput(format!(
                "error-bound LP returned {:?}; it is feasible and bounded below by construction",
                other.status()
            )))
        }
    };
    Ok(ErrorBoundLambda {
        horizon: dataset.horizon,
        lambda: alpha * lp_optimum,
        lp_optimum,
        alpha,
        d_bar,
    })
}

/// `Θ_p = {θ : |ỹ − φ̃ᵀθ| ≤ λ̲_p + d̄ for every pair}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleParameterSet {
    pub horizon: usize,
    pub polytope: Polytope,
    pub lambda: ErrorBoundLambda,
    pub reduced: bool,
}

impl FeasibleParameterSet {
    pub fn dim(&self) -> usize {
        self.polytope.dim()
    }

    pub fn contains(&self, theta: &[f64], tol: f64) -> bool {
        self.polytope.contains(theta, tol)
    }
}

/// Two rows per pair, positive row first, in sample order.
pub fn build_fps(dataset: &RegressorDataset, lambda: &ErrorBoundLambda) -> Result<FeasibleParameterSet> {
    if dataset.horizon != lambda.horizon {
        return Err(Error::InvalidInput(format!(
            "dataset horizon {} does not match bound horizon {}",
            dataset.horizon, lambda.horizon
        )));
    }
    let dim = dataset.dim();
    let width = lambda.lambda + lambda.d_bar;
    let mut normals = Vec::with_capacity(2 * dataset.len() * dim);
    let mut offsets = Vec::with_capacity(2 * dataset.len());
    for (phi, &y) in dataset.regressors.iter().zip(&dataset.targets) {
        normals.extend_from_slice(phi);
        offsets.push(y + width);
        normals.extend(phi.iter().map(|v| -v));
        offsets.push(-y + width);
    }
    Ok(FeasibleParameterSet {
        horizon: dataset.horizon,
        polytope: Polytope::new(dim, normals, offsets)?,
        lambda: *lambda,
        reduced: false,
    })
}

pub fn reduce_fps(fps: &FeasibleParameterSet) -> Result<FeasibleParameterSet> {
    reduce_fps_with(fps, DEFAULT_SLACK_TOL)
}

pub fn reduce_fps_with(fps: &FeasibleParameterSet, slack_tol: f64) -> Result<FeasibleParameterSet> {
    let polytope = remove_redundant_constraints(&fps.polytope, slack_tol)?;
    debug!(
        "horizon {}: {} -> {} constraints",
        fps.horizon,
        fps.polytope.num_constraints(),
        polytope.num_constraints()
    );
    Ok(FeasibleParameterSet {
        polytope,
        reduced: true,
        ..fps.clone()
    })
}

/// `(max_{θ∈Θ} φᵀθ, max_{θ∈Θ} −φᵀθ)` for every regressor. Consecutive
/// queries are warm-started from the previous optimal vertex.
pub fn precompute_support_constants(fps: &FeasibleParameterSet, regressors: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
    let mut warm_pos = None;
    let mut warm_neg = None;
    regressors
        .iter()
        .map(|phi| {
            if phi.iter().all(|&v| v == 0.0) {
                return Ok((0.0, 0.0));
            }
            let up = fps.polytope.maximize(phi, &mut warm_pos)?.value;
            let neg: Vec<f64> = phi.iter().map(|v| -v).collect();
            let down = fps.polytope.maximize(&neg, &mut warm_neg)?.value;
            Ok((up, down))
        })
        .collect()
}

/// Fixed predictor `θ̂_p` with its trajectory-independent bound `τ̄̂_p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalPredictor {
    pub horizon: usize,
    pub theta_hat: Vec<f64>,
    pub tau_bar: f64,
    pub gamma_bar: f64,
    /// Optimal worst-case parameter mismatch `ζ*`.
    pub mismatch: f64,
}

impl GlobalPredictor {
    pub fn predict(&self, regressor: &[f64]) -> f64 {
        dot(&self.theta_hat, regressor)
    }
}

/// Chooses the FPS member minimizing the worst mismatch
/// `max_φ max_{θ∈Θ} |φᵀ(θ − θ_p)|` over the identification regressors, then
/// sets `τ̄̂_p = γ̄ ζ* + λ̲_p`.
pub fn identify_min_global_bound_predictor(
    fps: &FeasibleParameterSet,
    dataset: &RegressorDataset,
    gamma_bar: f64,
) -> Result<GlobalPredictor> {
    if !(gamma_bar > 1.0) {
        return Err(Error::InvalidInput(format!("gamma_bar must exceed 1, got {gamma_bar}")));
    }
    if dataset.horizon != fps.horizon {
        return Err(Error::InvalidInput(format!(
            "dataset horizon {} does not match FPS horizon {}",
            dataset.horizon, fps.horizon
        )));
    }
    let dim = fps.dim();
    let consts = precompute_support_constants(fps, &dataset.regressors)?;
    let n = dim + 1;
    let poly = &fps.polytope;
    let rows = poly.num_constraints() + 2 * dataset.len();
    let mut matrix = Vec::with_capacity(rows * n);
    let mut rhs = Vec::with_capacity(rows);
    for (r, &h) in poly.rows().zip(poly.offsets()) {
        matrix.extend_from_slice(r);
        matrix.push(0.0);
        rhs.push(h);
    }
    // signed regressors: every +φ first, then every −φ
    for (phi, &(c_pos, _)) in dataset.regressors.iter().zip(&consts) {
        matrix.extend(phi.iter().map(|v| -v));
        matrix.push(-1.0);
        rhs.push(-c_pos);
    }
    for (phi, &(_, c_neg)) in dataset.regressors.iter().zip(&consts) {
        matrix.extend_from_slice(phi);
        matrix.push(-1.0);
        rhs.push(-c_neg);
    }
    let mut cost = vec![0.0; n];
    cost[dim] = 1.0;
    let out = DenseSimplex::default().solve_view(
        LpView {
            cost: &cost,
            matrix: &matrix,
            rhs: &rhs,
        },
        None,
    )?;
    let sol = match out {
        LpOutcome::Optimal(s) => s,
        LpOutcome::Infeasible => return Err(Error::EmptyPolytope),
        LpOutcome::Unbounded => {
            return Err(Error::InvalidInput("min-max LP unbounded below; cannot happen for ζ ≥ 0".into()))
        }
    };
    let mismatch = sol.x[dim].max(0.0);
    Ok(GlobalPredictor {
        horizon: fps.horizon,
        theta_hat: sol.x[..dim].to_vec(),
        tau_bar: gamma_bar * mismatch + fps.lambda.lambda,
        gamma_bar,
        mismatch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate_arx, DiscreteArxModel, NoiseSpec};

    fn toy_data() -> ExperimentData {
        ExperimentData::new(vec![vec![10.0], vec![20.0], vec![30.0]], vec![0.0; 3], vec![1.0, 2.0, 3.0], 1.0)
            .unwrap()
    }

    #[test]
    fn hand_unrolled_regressors() {
        let ds = assemble_regressors(&toy_data(), 1, 1).unwrap();
        assert_eq!(ds.regressors, vec![vec![1.0, 10.0], vec![2.0, 20.0]]);
        assert_eq!(ds.targets, vec![2.0, 3.0]);
        assert!(matches!(
            assemble_regressors(&toy_data(), 1, 2),
            Err(Error::TooFewSamples { needed: 4, got: 3 })
        ));
    }

    #[test]
    fn regressor_dimension_formula() {
        let data = ExperimentData::new(vec![vec![0.5]; 12], vec![0.0; 12], (0..12).map(f64::from).collect(), 1.0)
            .unwrap();
        let ds = assemble_regressors(&data, 2, 2).unwrap();
        assert_eq!(ds.dim(), 5);
        assert!(ds.regressors.iter().all(|r| r.len() == 5));
        assert_eq!(ds.len(), 12 - 3);
    }

    fn noiseless_scalar(n: usize) -> ExperimentData {
        let model = DiscreteArxModel::new(1, 1, vec![0.5, 1.0], 1.0).unwrap();
        let inputs: Vec<Vec<f64>> = (0..n).map(|k| vec![((k * k * 7919 + 31 * k) % 1009) as f64 / 504.5 - 1.0]).collect();
        simulate_arx(&model, &inputs, &[0.3, 0.0], &NoiseSpec::noiseless()).unwrap()
    }

    #[test]
    fn exact_model_has_zero_bound_and_point_fps() {
        let data = noiseless_scalar(60);
        let ds = assemble_regressors(&data, 1, 1).unwrap();
        let lam = estimate_lambda(&ds, 0.0, 1.2).unwrap();
        assert!(lam.lambda.abs() < 1e-12);
        let fps = build_fps(&ds, &lam).unwrap();
        assert_eq!(fps.polytope.num_constraints(), 2 * ds.len());
        assert!(fps.contains(&[0.5, 1.0], 1e-9));
        let red = reduce_fps(&fps).unwrap();
        assert!(red.reduced);
        let g = identify_min_global_bound_predictor(&red, &ds, 1.1).unwrap();
        assert!(g.mismatch.abs() < 1e-9);
        assert!((g.theta_hat[0] - 0.5).abs() < 1e-9 && (g.theta_hat[1] - 1.0).abs() < 1e-9);
        assert!(g.tau_bar.abs() < 1e-9);
    }

    #[test]
    fn fps_row_layout() {
        let ds = RegressorDataset {
            horizon: 1,
            order: 1,
            input_dim: 1,
            regressors: vec![vec![1.0, 2.0], vec![3.0, -1.0]],
            targets: vec![0.5, 1.5],
        };
        let lam = estimate_lambda(&ds, 0.1, 1.5).unwrap();
        let fps = build_fps(&ds, &lam).unwrap();
        assert_eq!(fps.polytope.num_constraints(), 4);
        assert_eq!(fps.polytope.row(0), &[1.0, 2.0]);
        assert_eq!(fps.polytope.row(1), &[-1.0, -2.0]);
        let w = lam.lambda + 0.1;
        assert_eq!(fps.polytope.offsets(), &[0.5 + w, -0.5 + w, 1.5 + w, -1.5 + w]);
        let bad = ErrorBoundLambda { horizon: 2, ..lam };
        assert!(build_fps(&ds, &bad).is_err());
    }

    #[test]
    fn alpha_and_gamma_are_validated() {
        let ds = assemble_regressors(&noiseless_scalar(20), 1, 1).unwrap();
        assert!(estimate_lambda(&ds, 0.1, 1.0).is_err());
        let lam = estimate_lambda(&ds, 0.1, 1.2).unwrap();
        let fps = build_fps(&ds, &lam).unwrap();
        assert!(identify_min_global_bound_predictor(&fps, &ds, 1.0).is_err());
    }

    #[test]
    fn zero_regressor_support_is_zero() {
        let b = Polytope::boxed(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let lam = ErrorBoundLambda {
            horizon: 1,
            lambda: 0.0,
            lp_optimum: 0.0,
            alpha: 1.2,
            d_bar: 0.0,
        };
        let fps = FeasibleParameterSet {
            horizon: 1,
            polytope: b,
            lambda: lam,
            reduced: false,
        };
        let c = precompute_support_constants(&fps, &[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(c, vec![(0.0, 0.0), (1.0, 0.0)]);
    }
}
