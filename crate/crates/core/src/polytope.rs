//! H-representation polytopes: support queries and redundancy removal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{DenseSimplex, LpOutcome, LpSolution, LpSolver, LpView};

pub const DEFAULT_SLACK_TOL: f64 = 1e-9;

/// `{x : Hx ≤ h}` with `H` stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolytopeRepr", into = "PolytopeRepr")]
pub struct Polytope {
    dim: usize,
    normals: Vec<f64>,
    offsets: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PolytopeRepr {
    dim: usize,
    normals: Vec<Vec<f64>>,
    offsets: Vec<f64>,
}

impl From<Polytope> for PolytopeRepr {
    fn from(p: Polytope) -> Self {
        PolytopeRepr {
            dim: p.dim,
            normals: p.rows().map(<[f64]>::to_vec).collect(),
            offsets: p.offsets,
        }
    }
}

impl TryFrom<PolytopeRepr> for Polytope {
    type Error = Error;

    fn try_from(r: PolytopeRepr) -> Result<Self> {
        Polytope::from_rows(r.dim, r.normals, r.offsets)
    }
}

impl Polytope {
    pub fn new(dim: usize, normals: Vec<f64>, offsets: Vec<f64>) -> Result<Self> {
        if normals.len() != dim * offsets.len() {
            return Err(Error::InvalidInput(format!(
                "normals hold {} entries, expected {} rows of dimension {dim}",
                normals.len(),
                offsets.len()
            )));
        }
        if normals.iter().chain(&offsets).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite polytope coefficient".into()));
        }
        for (i, &h) in offsets.iter().enumerate() {
            let row = &normals[i * dim..(i + 1) * dim];
            if h < 0.0 && row.iter().all(|&v| v == 0.0) {
                return Err(Error::InvalidInput(format!(
                    "row {i} is 0·x ≤ {h}, which no point satisfies"
                )));
            }
        }
        Ok(Self {
            dim,
            normals,
            offsets,
        })
    }

    pub fn from_rows(dim: usize, rows: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        if rows.len() != offsets.len() {
            return Err(Error::InvalidInput(format!(
                "{} normals but {} offsets",
                rows.len(),
                offsets.len()
            )));
        }
        let mut flat = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "normal {i} has length {}, expected {dim}",
                    r.len()
                )));
            }
            flat.extend(r);
        }
        Self::new(dim, flat, offsets)
    }

    /// Axis-aligned box `lo ≤ x ≤ hi`.
    pub fn boxed(lo: &[f64], hi: &[f64]) -> Result<Self> {
        let dim = lo.len();
        let mut rows = Vec::with_capacity(2 * dim);
        let mut offs = Vec::with_capacity(2 * dim);
        for j in 0..dim {
            let mut r = vec![0.0; dim];
            r[j] = 1.0;
            rows.push(r.clone());
            offs.push(hi[j]);
            r[j] = -1.0;
            rows.push(r);
            offs.push(-lo[j]);
        }
        Self::from_rows(dim, rows, offs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_constraints(&self) -> usize {
        self.offsets.len()
    }

    pub fn normals(&self) -> &[f64] {
        &self.normals
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.normals[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.normals.chunks_exact(self.dim.max(1)).take(self.offsets.len())
    }

    /// Largest constraint violation at `x` (zero when inside).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.rows()
            .zip(&self.offsets)
            .map(|(r, &h)| dot(r, x) - h)
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.max_violation(x) <= tol
    }

    /// Maximizer of `directionᵀx`, warm-started from `warm` when it holds a
    /// basis of this polytope; `warm` is replaced by the new optimal basis.
    pub fn maximize(&self, direction: &[f64], warm: &mut Option<Vec<usize>>) -> Result<LpSolution> {
        if direction.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "direction has length {}, polytope dimension is {}",
                direction.len(),
                self.dim
            )));
        }
        let cost: Vec<f64> = direction.iter().map(|v| -v).collect();
        let view = LpView {
            cost: &cost,
            matrix: &self.normals,
            rhs: &self.offsets,
        };
        let out = DenseSimplex::default().solve_view(view, warm.as_deref())?;
        match out {
            LpOutcome::Optimal(mut s) => {
                s.value = -s.value;
                *warm = Some(s.basis.clone());
                Ok(s)
            }
            LpOutcome::Unbounded => Err(Error::UnboundedFps),
            LpOutcome::Infeasible => Err(Error::EmptyPolytope),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `max_{x ∈ poly} directionᵀx`.
pub fn support_value(poly: &Polytope, direction: &[f64]) -> Result<f64> {
    poly.maximize(direction, &mut None).map(|s| s.value)
}

/// Removes every row that is implied by the rows still retained, scanning
/// rows in index order. A row is dropped when its maximum over the other
/// retained rows stays within `slack_tol` of its offset; rows whose test is
/// unbounded are kept.
///
/// Each test is solved by constraint generation: the LP only carries a
/// working subset of the retained rows, and rows violated by its optimizer
/// are pulled in until the optimizer is feasible for all of them. A bound
/// proven on a subset holds on the full set, so the decisions are those of
/// the plain test.
pub fn remove_redundant_constraints(poly: &Polytope, slack_tol: f64) -> Result<Polytope> {
    let n = poly.dim;
    let m = poly.num_constraints();
    let solver = DenseSimplex::default();

    let zero = vec![0.0; n];
    let feas = solver.solve_view(
        LpView {
            cost: &zero,
            matrix: &poly.normals,
            rhs: &poly.offsets,
        },
        None,
    )?;
    let seed_basis = match feas {
        LpOutcome::Optimal(s) => s.basis,
        LpOutcome::Infeasible => return Err(Error::EmptyPolytope),
        LpOutcome::Unbounded => unreachable!("zero objective"),
    };

    let norms: Vec<f64> = poly.rows().map(|r| dot(r, r).sqrt()).collect();
    let mut retained = vec![true; m];
    let mut in_active = vec![false; m];
    let mut active: Vec<usize> = Vec::new();
    for &i in &seed_basis {
        if i < m && !in_active[i] {
            in_active[i] = true;
            active.push(i);
        }
    }

    // Global ids of the last optimal basis; `m` stands for the cap row.
    let mut last_basis: Option<Vec<usize>> = None;
    let mut matrix = Vec::new();
    let mut rhs = Vec::new();
    let mut local_ids: Vec<usize> = Vec::new();
    let mut pos_of = vec![usize::MAX; m + 1];

    for i in 0..m {
        if norms[i] == 0.0 {
            // 0·x ≤ h with h ≥ 0 (negative offsets are rejected at construction)
            retained[i] = false;
            continue;
        }
        let hi = poly.row(i);
        let cost: Vec<f64> = hi.iter().map(|v| -v).collect();
        loop {
            matrix.clear();
            rhs.clear();
            local_ids.clear();
            for &j in &active {
                if j != i {
                    pos_of[j] = local_ids.len();
                    local_ids.push(j);
                    matrix.extend_from_slice(poly.row(j));
                    rhs.push(poly.offsets[j]);
                }
            }
            // cap keeps the test bounded: only "≤ h_i + tol" matters
            pos_of[m] = local_ids.len();
            local_ids.push(m);
            matrix.extend_from_slice(hi);
            rhs.push(poly.offsets[i] + 1.0 + slack_tol);

            let hint: Option<Vec<usize>> = last_basis.as_ref().and_then(|b| {
                b.iter()
                    .map(|&g| {
                        let p = pos_of[g];
                        (p < local_ids.len() && local_ids[p] == g).then_some(p)
                    })
                    .collect()
            });
            let out = solver.solve_view(
                LpView {
                    cost: &cost,
                    matrix: &matrix,
                    rhs: &rhs,
                },
                hint.as_deref(),
            )?;
            let sol = match out {
                LpOutcome::Optimal(s) => s,
                LpOutcome::Infeasible => return Err(Error::EmptyPolytope),
                LpOutcome::Unbounded => unreachable!("capped objective"),
            };
            last_basis = Some(
                sol.basis
                    .iter()
                    .map(|&p| local_ids.get(p).copied().unwrap_or(usize::MAX))
                    .collect(),
            );
            if last_basis.as_ref().unwrap().contains(&usize::MAX) {
                last_basis = None;
            }
            let value = dot(hi, &sol.x);
            if value <= poly.offsets[i] + slack_tol {
                retained[i] = false;
                if in_active[i] {
                    in_active[i] = false;
                    active.retain(|&j| j != i);
                }
                break;
            }
            // rows of the full retained set cut off by this optimizer
            let mut violated: Vec<(f64, usize)> = (0..m)
                .filter(|&j| retained[j] && j != i && !in_active[j])
                .filter_map(|j| {
                    let v = dot(poly.row(j), &sol.x) - poly.offsets[j];
                    (v > slack_tol).then(|| (v / norms[j], j))
                })
                .collect();
            if violated.is_empty() {
                if !in_active[i] {
                    in_active[i] = true;
                    active.push(i);
                }
                break;
            }
            violated.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            for &(_, j) in violated.iter().take(4) {
                in_active[j] = true;
                active.push(j);
            }
        }
    }

    let mut rows = Vec::new();
    let mut offs = Vec::new();
    for i in (0..m).filter(|&i| retained[i]) {
        rows.extend_from_slice(poly.row(i));
        offs.push(poly.offsets[i]);
    }
    Polytope::new(n, rows, offs)
}
