//! Local bounds: four LPs per horizon and sample over the reduced FPS.

use super::{EmptyPolicy, HorizonInterval, LocalFilterReport};
use crate::error::{Error, Result};
use crate::history::History;
use crate::identify::FeasibleParameterSet;
use crate::lp::{DenseSimplex, LpOutcome, LpSolver, LpView};

/// Reusable LP storage: the FPS rows with an extra `τ` column and two
/// trailing rows that change with the regressor.
#[derive(Debug, Clone, Default)]
struct Workspace {
    matrix: Vec<f64>,
    rhs: Vec<f64>,
    warm_up: Option<Vec<usize>>,
    warm_down: Option<Vec<usize>>,
}

impl Workspace {
    fn new(fps: &FeasibleParameterSet) -> Self {
        let poly = &fps.polytope;
        let n = poly.dim() + 1;
        let m = poly.num_constraints();
        let mut matrix = Vec::with_capacity((m + 2) * n);
        let mut rhs = Vec::with_capacity(m + 2);
        for (r, &h) in poly.rows().zip(poly.offsets()) {
            matrix.extend_from_slice(r);
            matrix.push(0.0);
            rhs.push(h);
        }
        matrix.resize((m + 2) * n, 0.0);
        rhs.resize(m + 2, 0.0);
        Self {
            matrix,
            rhs,
            warm_up: None,
            warm_down: None,
        }
    }
}

fn bounds(fps: &FeasibleParameterSet, ws: &mut Workspace, phi: &[f64], gamma: f64) -> Result<(f64, f64)> {
    let poly = &fps.polytope;
    let dim = poly.dim();
    if phi.len() != dim {
        return Err(Error::InvalidInput(format!(
            "regressor has length {}, FPS dimension is {dim}",
            phi.len()
        )));
    }
    if !(gamma > 1.0) {
        return Err(Error::InvalidInput(format!("gamma must exceed 1, got {gamma}")));
    }
    let lambda = fps.lambda.lambda;
    let neg: Vec<f64> = phi.iter().map(|v| -v).collect();
    let top = poly.maximize(phi, &mut ws.warm_up)?;
    let bottom = poly.maximize(&neg, &mut ws.warm_down)?;
    let (c1, c2) = (top.value, bottom.value);

    // c1 − φᵀθ ≤ τ and c2 + φᵀθ ≤ τ
    let m = poly.num_constraints();
    let n = dim + 1;
    let (a, b) = ws.matrix[m * n..].split_at_mut(n);
    a[..dim].copy_from_slice(&neg);
    a[dim] = -1.0;
    b[..dim].copy_from_slice(phi);
    b[dim] = -1.0;
    ws.rhs[m] = -c1;
    ws.rhs[m + 1] = -c2;

    let solver = DenseSimplex::default();
    let solve = |cost: &[f64], warm: Vec<usize>| -> Result<f64> {
        let view = LpView {
            cost,
            matrix: &ws.matrix,
            rhs: &ws.rhs,
        };
        match solver.solve_view(view, Some(&warm))? {
            LpOutcome::Optimal(s) => Ok(s.value),
            LpOutcome::Infeasible => Err(Error::EmptyPolytope),
            LpOutcome::Unbounded => Err(Error::UnboundedFps),
        }
    };
    let mut cost = phi.to_vec();
    cost.push(gamma);
    // the support vertices plus the other τ row are primal feasible bases
    let mut warm = top.basis;
    warm.push(m + 1);
    let upper = solve(&cost, warm)? + lambda;
    cost[..dim].copy_from_slice(&neg);
    let mut warm = bottom.basis;
    warm.push(m);
    let lower = -solve(&cost, warm)? - lambda;
    if lower > upper {
        // rounding on a zero-width interval
        let mid = (lower + upper) / 2.0;
        return Ok((mid, mid));
    }
    Ok((lower, upper))
}

/// `(ζ_p^min, ζ_p^max)` for one regressor.
pub fn local_interval_bounds(fps: &FeasibleParameterSet, regressor: &[f64], gamma: f64) -> Result<(f64, f64)> {
    bounds(fps, &mut Workspace::new(fps), regressor, gamma)
}

/// One horizon of the local filter with its LP workspace.
#[derive(Debug, Clone)]
pub struct LocalPredictor {
    fps: FeasibleParameterSet,
    ws: Workspace,
}

impl LocalPredictor {
    pub fn new(fps: FeasibleParameterSet) -> Self {
        let ws = Workspace::new(&fps);
        Self { fps, ws }
    }

    pub fn fps(&self) -> &FeasibleParameterSet {
        &self.fps
    }

    pub fn horizon(&self) -> usize {
        self.fps.horizon
    }

    /// Same as [`local_interval_bounds`], warm-started from the previous call.
    pub fn interval(&mut self, regressor: &[f64], gamma: f64) -> Result<(f64, f64)> {
        bounds(&self.fps, &mut self.ws, regressor, gamma)
    }
}

/// FPSs for horizons `1..=p̄` sharing one `γ`.
#[derive(Debug, Clone)]
pub struct LocalBank {
    predictors: Vec<LocalPredictor>,
    pub gamma: f64,
    pub policy: EmptyPolicy,
}

impl LocalBank {
    pub fn new(fps: Vec<FeasibleParameterSet>, gamma: f64) -> Result<Self> {
        if fps.is_empty() {
            return Err(Error::InvalidInput("empty FPS bank".into()));
        }
        for (i, f) in fps.iter().enumerate() {
            if f.horizon != i + 1 {
                return Err(Error::InvalidInput(format!(
                    "bank position {i} holds horizon {}, expected {}",
                    f.horizon,
                    i + 1
                )));
            }
        }
        if !(gamma > 1.0) {
            return Err(Error::InvalidInput(format!("gamma must exceed 1, got {gamma}")));
        }
        Ok(Self {
            predictors: fps.into_iter().map(LocalPredictor::new).collect(),
            gamma,
            policy: EmptyPolicy::Error,
        })
    }

    pub fn max_horizon(&self) -> usize {
        self.predictors.len()
    }

    pub fn predictors(&self) -> &[LocalPredictor] {
        &self.predictors
    }
}

/// Filters sample `k` from the history holding every sample before it.
pub fn local_filter_step(bank: &mut LocalBank, history: &History, k: usize) -> Result<LocalFilterReport> {
    let gamma = bank.gamma;
    let mut per = Vec::with_capacity(bank.predictors.len());
    for pred in &mut bank.predictors {
        let phi = history.regressor(pred.horizon())?;
        let (lower, upper) = pred.interval(&phi, gamma)?;
        per.push(HorizonInterval {
            horizon: pred.horizon(),
            lower,
            upper,
        });
    }
    LocalFilterReport::from_intervals(k, per, bank.policy)
}
