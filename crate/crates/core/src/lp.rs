//! Dense linear programming over free variables.
//!
//! Every problem has the inequality form `minimize cᵀx subject to Ax ≤ b`
//! with `x` unrestricted in sign. The number of variables is small (tens)
//! while the number of rows can reach tens of thousands, so the solver works
//! on bases made of `n` constraint rows: a basis fixes a candidate point
//! `x = A_B⁻¹ b_B` and multipliers `y_B = -A_B⁻ᵀ c`. Two pivoting rules are
//! used on the same basis representation:
//!
//! * the *vertex* rule keeps `x` feasible and drives the multipliers
//!   nonnegative (primal simplex on the polytope's vertices);
//! * the *dual* rule keeps the multipliers nonnegative and removes
//!   constraint violations.
//!
//! A cold start crashes a basis from linearly independent rows and, when it
//! is neither feasible nor dual feasible, first runs the dual rule against an
//! auxiliary cost for which the crash basis is dual feasible. Pricing is
//! Dantzig's rule with a switch to Bland's smallest-index rule after a run of
//! degenerate pivots.

use std::cell::Cell;

use crate::error::LpError;

pub const DEFAULT_FEAS_TOL: f64 = 1e-9;

const PIVOT_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-10;
const HARRIS_DUAL: f64 = 1e-11;
const HARRIS_PRIMAL: f64 = 1e-11;
const REFACTOR_EVERY: usize = 64;
const DEGENERATE_RUN_BEFORE_BLAND: usize = 40;
const RANK_TOL: f64 = 1e-8;
const CRASH_TOL: f64 = 0.1;

thread_local! {
    static SOLVE_COUNT: Cell<u64> = const { Cell::new(0) };
    static FEAS_TOL: Cell<f64> = const { Cell::new(DEFAULT_FEAS_TOL) };
}

/// Runs `f` with `tol` as the tolerance of solvers made by
/// `DenseSimplex::default()` on this thread.
pub fn with_feas_tol<T>(tol: f64, f: impl FnOnce() -> T) -> T {
    let old = FEAS_TOL.with(|c| c.replace(tol));
    struct Restore(f64);
    impl Drop for Restore {
        fn drop(&mut self) {
            FEAS_TOL.with(|c| c.set(self.0));
        }
    }
    let _restore = Restore(old);
    f()
}

/// Number of LP solves performed on the current thread since it started.
pub fn lp_solve_count() -> u64 {
    SOLVE_COUNT.with(|c| c.get())
}

fn bump_solve_count() {
    SOLVE_COUNT.with(|c| c.set(c.get() + 1));
}

/// `minimize cᵀx s.t. Ax ≤ b`, `x` free. `A` is stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    cost: Vec<f64>,
    matrix: Vec<f64>,
    rhs: Vec<f64>,
}

impl LinearProgram {
    pub fn new(cost: Vec<f64>, rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self, LpError> {
        let n = cost.len();
        if rows.len() != rhs.len() {
            return Err(LpError::Dimension(format!(
                "{} constraint rows but {} right-hand sides",
                rows.len(),
                rhs.len()
            )));
        }
        let mut matrix = Vec::with_capacity(rows.len() * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(LpError::Dimension(format!(
                    "row {i} has {} entries, cost has {n}",
                    row.len()
                )));
            }
            matrix.extend_from_slice(row);
        }
        Self::from_flat(cost, matrix, rhs)
    }

    /// Builds from a row-major matrix with `cost.len()` columns.
    pub fn from_flat(cost: Vec<f64>, matrix: Vec<f64>, rhs: Vec<f64>) -> Result<Self, LpError> {
        let n = cost.len();
        if matrix.len() != n * rhs.len() {
            return Err(LpError::Dimension(format!(
                "matrix has {} entries, expected {} rows x {n} columns",
                matrix.len(),
                rhs.len()
            )));
        }
        if cost.iter().chain(&matrix).chain(&rhs).any(|v| !v.is_finite()) {
            return Err(LpError::Dimension("non-finite coefficient".into()));
        }
        Ok(Self { cost, matrix, rhs })
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rhs.len()
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.num_vars();
        &self.matrix[i * n..(i + 1) * n]
    }

    pub fn view(&self) -> LpView<'_> {
        LpView {
            cost: &self.cost,
            matrix: &self.matrix,
            rhs: &self.rhs,
        }
    }
}

/// Borrowed problem data; lets callers that already own a constraint
/// matrix (polytopes) solve without copying it.
#[derive(Debug, Clone, Copy)]
pub struct LpView<'a> {
    pub cost: &'a [f64],
    pub matrix: &'a [f64],
    pub rhs: &'a [f64],
}

impl LpView<'_> {
    fn n(&self) -> usize {
        self.cost.len()
    }

    fn m(&self) -> usize {
        self.rhs.len()
    }

    fn check(&self) -> Result<(), LpError> {
        if self.matrix.len() != self.n() * self.m() {
            return Err(LpError::Dimension(format!(
                "matrix has {} entries, expected {} x {}",
                self.matrix.len(),
                self.m(),
                self.n()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// Indices of the `n` rows defining the returned vertex. Indices at or
    /// beyond the constraint count refer to internal lineality pins.
    pub basis: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(&self) -> Option<&LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }

    pub fn status(&self) -> LpStatus {
        match self {
            LpOutcome::Optimal(_) => LpStatus::Optimal,
            LpOutcome::Infeasible => LpStatus::Infeasible,
            LpOutcome::Unbounded => LpStatus::Unbounded,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Pluggable LP backend.
pub trait LpSolver {
    fn solve_view(&self, lp: LpView<'_>, warm_basis: Option<&[usize]>) -> Result<LpOutcome, LpError>;

    fn solve(&self, lp: &LinearProgram) -> Result<LpOutcome, LpError> {
        self.solve_view(lp.view(), None)
    }
}

/// Dense simplex solver with an explicit basis inverse.
#[derive(Debug, Clone, Copy)]
pub struct DenseSimplex {
    pub feas_tol: f64,
    pub max_iter: Option<usize>,
}

impl Default for DenseSimplex {
    fn default() -> Self {
        Self {
            feas_tol: FEAS_TOL.with(Cell::get),
            max_iter: None,
        }
    }
}

impl DenseSimplex {
    pub fn new(feas_tol: f64) -> Self {
        Self {
            feas_tol,
            max_iter: None,
        }
    }
}

impl LpSolver for DenseSimplex {
    fn solve_view(&self, lp: LpView<'_>, warm_basis: Option<&[usize]>) -> Result<LpOutcome, LpError> {
        lp.check()?;
        bump_solve_count();
        solve_inner(lp, warm_basis, self.feas_tol, self.max_iter)
    }
}

/// Solves with the reference dense simplex backend.
pub fn solve_lp(problem: &LinearProgram, feas_tol: f64) -> Result<LpOutcome, LpError> {
    DenseSimplex::new(feas_tol).solve(problem)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Constraint rows plus optional pins `±v·x ≤ 0` that remove directions in
/// which every constraint row is constant.
struct Rows<'a> {
    lp: LpView<'a>,
    pins: Vec<Vec<f64>>,
}

impl Rows<'_> {
    fn n(&self) -> usize {
        self.lp.n()
    }

    fn len(&self) -> usize {
        self.lp.m() + 2 * self.pins.len()
    }

    fn row(&self, i: usize) -> RowRef<'_> {
        let m = self.lp.m();
        let n = self.n();
        if i < m {
            RowRef::Plain(&self.lp.matrix[i * n..(i + 1) * n])
        } else {
            let k = i - m;
            RowRef::Pin(&self.pins[k / 2], if k.is_multiple_of(2) { 1.0 } else { -1.0 })
        }
    }

    fn rhs(&self, i: usize) -> f64 {
        if i < self.lp.m() {
            self.lp.rhs[i]
        } else {
            0.0
        }
    }
}

#[derive(Clone, Copy)]
enum RowRef<'a> {
    Plain(&'a [f64]),
    Pin(&'a [f64], f64),
}

impl RowRef<'_> {
    fn dot(&self, v: &[f64]) -> f64 {
        match self {
            RowRef::Plain(r) => dot(r, v),
            RowRef::Pin(r, s) => s * dot(r, v),
        }
    }

    fn get(&self, j: usize) -> f64 {
        match self {
            RowRef::Plain(r) => r[j],
            RowRef::Pin(r, s) => s * r[j],
        }
    }
}

/// Greedy selection of linearly independent rows (modified Gram-Schmidt in
/// row order) and an orthonormal completion spanning the null space. A first
/// sweep only accepts rows far from the span of those already chosen, which
/// keeps the crash basis well conditioned.
fn crash_rows(lp: LpView<'_>) -> (Vec<usize>, Vec<Vec<f64>>) {
    let n = lp.n();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut chosen = Vec::with_capacity(n);
    let mut taken = vec![false; lp.m()];
    for threshold in [CRASH_TOL, RANK_TOL] {
        #[allow(clippy::needless_range_loop)]
        for i in 0..lp.m() {
            if chosen.len() == n {
                break;
            }
            if taken[i] {
                continue;
            }
            let row = &lp.matrix[i * n..(i + 1) * n];
            let norm = dot(row, row).sqrt();
            if norm == 0.0 {
                continue;
            }
            let mut r = row.to_vec();
            for _ in 0..2 {
                for qk in &q {
                    let proj = dot(qk, &r);
                    r.iter_mut().zip(qk).for_each(|(a, b)| *a -= proj * b);
                }
            }
            let rn = dot(&r, &r).sqrt();
            if rn > threshold * norm {
                r.iter_mut().for_each(|v| *v /= rn);
                q.push(r);
                chosen.push(i);
                taken[i] = true;
            }
        }
    }
    let mut null = Vec::new();
    if chosen.len() < n {
        let mut basis = q.clone();
        for j in 0..n {
            if basis.len() == n {
                break;
            }
            let mut r = vec![0.0; n];
            r[j] = 1.0;
            for _ in 0..2 {
                for qk in &basis {
                    let proj = dot(qk, &r);
                    r.iter_mut().zip(qk).for_each(|(a, b)| *a -= proj * b);
                }
            }
            let rn = dot(&r, &r).sqrt();
            if rn > 1e-6 {
                r.iter_mut().for_each(|v| *v /= rn);
                basis.push(r.clone());
                null.push(r);
            }
        }
    }
    (chosen, null)
}

fn invert(mut a: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for col in 0..n {
        let (piv, pmax) = (col..n)
            .map(|r| (r, a[r * n + col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pmax <= 1e-13 * scale {
            return None;
        }
        if piv != col {
            for j in 0..n {
                a.swap(piv * n + j, col * n + j);
                inv.swap(piv * n + j, col * n + j);
            }
        }
        let d = a[col * n + col];
        for j in 0..n {
            a[col * n + j] /= d;
            inv[col * n + j] /= d;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r * n + col];
            if f != 0.0 {
                for j in 0..n {
                    a[r * n + j] -= f * a[col * n + j];
                    inv[r * n + j] -= f * inv[col * n + j];
                }
            }
        }
    }
    Some(inv)
}

struct Basis {
    n: usize,
    rows: Vec<usize>,
    in_basis: Vec<bool>,
    /// Row-major inverse of the basis matrix whose i-th row is constraint `rows[i]`.
    inv: Vec<f64>,
    since_refactor: usize,
}

impl Basis {
    fn new(rows: &Rows<'_>, idx: Vec<usize>) -> Option<Self> {
        let n = rows.n();
        if idx.len() != n {
            return None;
        }
        let mut in_basis = vec![false; rows.len()];
        for &i in &idx {
            if i >= rows.len() || in_basis[i] {
                return None;
            }
            in_basis[i] = true;
        }
        let mut b = Basis {
            n,
            rows: idx,
            in_basis,
            inv: Vec::new(),
            since_refactor: 0,
        };
        if b.refactor(rows) {
            Some(b)
        } else {
            None
        }
    }

    fn refactor(&mut self, rows: &Rows<'_>) -> bool {
        let n = self.n;
        let mut mat = vec![0.0; n * n];
        for (k, &i) in self.rows.iter().enumerate() {
            let r = rows.row(i);
            for j in 0..n {
                mat[k * n + j] = r.get(j);
            }
        }
        match invert(mat, n) {
            Some(inv) => {
                self.inv = inv;
                self.since_refactor = 0;
                true
            }
            None => false,
        }
    }

    /// `x = B⁻¹ b_B`.
    fn point(&self, rows: &Rows<'_>) -> Vec<f64> {
        let n = self.n;
        let bb: Vec<f64> = self.rows.iter().map(|&i| rows.rhs(i)).collect();
        (0..n).map(|r| dot(&self.inv[r * n..(r + 1) * n], &bb)).collect()
    }

    /// `y_B = -cᵀ B⁻¹`.
    fn multipliers(&self, cost: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for (r, &c) in cost.iter().enumerate() {
            if c != 0.0 {
                let row = &self.inv[r * n..(r + 1) * n];
                y.iter_mut().zip(row).for_each(|(yj, v)| *yj -= c * v);
            }
        }
        y
    }

    /// `u = a B⁻¹`, the coordinates of row `a` in the basis rows.
    fn coords(&self, a: RowRef<'_>) -> Vec<f64> {
        let n = self.n;
        let mut u = vec![0.0; n];
        for r in 0..n {
            let ar = a.get(r);
            if ar != 0.0 {
                let row = &self.inv[r * n..(r + 1) * n];
                u.iter_mut().zip(row).for_each(|(uj, v)| *uj += ar * v);
            }
        }
        u
    }

    fn column(&self, k: usize) -> Vec<f64> {
        (0..self.n).map(|r| self.inv[r * self.n + k]).collect()
    }

    /// Replace basis position `pos` with constraint `entering`, where `u`
    /// holds the coordinates of the entering row.
    fn pivot(&mut self, rows: &Rows<'_>, pos: usize, entering: usize, u: &[f64]) -> Result<(), LpError> {
        let n = self.n;
        let ur = u[pos];
        for r in 0..n {
            let colr = self.inv[r * n + pos] / ur;
            let row = &mut self.inv[r * n..(r + 1) * n];
            for j in 0..n {
                if j == pos {
                    row[j] = colr;
                } else {
                    row[j] -= colr * u[j];
                }
            }
        }
        self.in_basis[self.rows[pos]] = false;
        self.in_basis[entering] = true;
        self.rows[pos] = entering;
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_EVERY && !self.refactor(rows) {
            return Err(LpError::SingularBasis);
        }
        Ok(())
    }
}

enum PhaseEnd {
    Done,
    Infeasible,
    Unbounded,
}

struct Engine<'a> {
    rows: Rows<'a>,
    basis: Basis,
    feas_tol: f64,
    iter: usize,
    max_iter: usize,
}

impl Engine<'_> {
    fn max_violation(&self, x: &[f64]) -> f64 {
        (0..self.rows.len())
            .filter(|&i| !self.basis.in_basis[i])
            .map(|i| self.rows.row(i).dot(x) - self.rows.rhs(i))
            .fold(0.0, f64::max)
    }

    fn tick(&mut self) -> Result<(), LpError> {
        self.iter += 1;
        if self.iter > self.max_iter {
            Err(LpError::IterationLimit(self.max_iter))
        } else {
            Ok(())
        }
    }

    /// Dual rule: multipliers for `cost` stay nonnegative, violations are removed.
    fn dual_phase(&mut self, cost: &[f64]) -> Result<PhaseEnd, LpError> {
        let tol = self.feas_tol * 0.1;
        let mut degenerate_run = 0usize;
        let mut skipped: Vec<usize> = Vec::new();
        loop {
            self.tick()?;
            let x = self.basis.point(&self.rows);
            let y = self.basis.multipliers(cost);
            let bland = degenerate_run >= DEGENERATE_RUN_BEFORE_BLAND;
            let mut entering = None;
            let mut best = tol;
            let mut best_viol = 0.0;
            for i in 0..self.rows.len() {
                if self.basis.in_basis[i] || skipped.contains(&i) {
                    continue;
                }
                let row = self.rows.row(i);
                let viol = row.dot(&x) - self.rows.rhs(i);
                if viol > tol {
                    if bland {
                        entering = Some(i);
                        best_viol = viol;
                        break;
                    }
                    let norm = match row {
                        RowRef::Plain(r) => dot(r, r).sqrt(),
                        RowRef::Pin(r, _) => dot(r, r).sqrt(),
                    };
                    let score = viol / norm.max(1e-300);
                    if score > best {
                        best = score;
                        best_viol = viol;
                        entering = Some(i);
                    }
                }
            }
            let Some(i) = entering else {
                return Ok(PhaseEnd::Done);
            };
            let u = self.basis.coords(self.rows.row(i));
            let umax = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let piv = PIVOT_TOL * umax.max(1.0);
            let leave = if bland {
                let mut leave: Option<(usize, f64)> = None;
                for (pos, &uj) in u.iter().enumerate() {
                    if uj > piv {
                        let ratio = y[pos].max(0.0) / uj;
                        leave = match leave {
                            Some((p, t))
                                if !(ratio < t - 1e-12
                                    || (ratio <= t + 1e-12 && self.basis.rows[pos] < self.basis.rows[p])) =>
                            {
                                Some((p, t))
                            }
                            _ => Some((pos, ratio)),
                        };
                    }
                }
                leave
            } else {
                // Harris: largest pivot among ratios within the relaxed bound
                let relaxed = u
                    .iter()
                    .zip(&y)
                    .filter(|(&uj, _)| uj > piv)
                    .map(|(&uj, &yj)| (yj.max(0.0) + HARRIS_DUAL) / uj)
                    .fold(f64::INFINITY, f64::min);
                u.iter()
                    .enumerate()
                    .filter(|&(pos, &uj)| uj > piv && y[pos].max(0.0) / uj <= relaxed)
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(pos, &uj)| (pos, y[pos].max(0.0) / uj))
            };
            if leave.is_none() {
                let spread: f64 = 1.0 + u.iter().map(|v| v.abs()).sum::<f64>();
                if best_viol / spread <= self.feas_tol && skipped.len() < self.rows.len() {
                    // only infeasible beyond what rounding in the data explains
                    skipped.push(i);
                    continue;
                }
            }
            let Some((pos, step)) = leave else {
                if self.basis.since_refactor > 0 {
                    // recheck the certificate on a fresh inverse
                    if !self.basis.refactor(&self.rows) {
                        return Err(LpError::SingularBasis);
                    }
                    continue;
                }
                return Ok(PhaseEnd::Infeasible);
            };
            degenerate_run = if step <= 1e-12 { degenerate_run + 1 } else { 0 };
            self.basis.pivot(&self.rows, pos, i, &u)?;
        }
    }

    /// Vertex rule: the point stays feasible, negative multipliers are removed.
    fn vertex_phase(&mut self, cost: &[f64]) -> Result<PhaseEnd, LpError> {
        let cscale = cost.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let ytol = DUAL_TOL * cscale;
        let mut degenerate_run = 0usize;
        loop {
            self.tick()?;
            let x = self.basis.point(&self.rows);
            let y = self.basis.multipliers(cost);
            let bland = degenerate_run >= DEGENERATE_RUN_BEFORE_BLAND;
            let mut pos = None;
            if bland {
                let mut best_row = usize::MAX;
                for (k, &yk) in y.iter().enumerate() {
                    if yk < -ytol && self.basis.rows[k] < best_row {
                        best_row = self.basis.rows[k];
                        pos = Some(k);
                    }
                }
            } else {
                let mut best = -ytol;
                for (k, &yk) in y.iter().enumerate() {
                    // normalise by the edge length so the rule is scale free
                    let col = self.basis.column(k);
                    let len = dot(&col, &col).sqrt().max(1e-300);
                    let score = yk / len;
                    if yk < -ytol && score < best {
                        best = score;
                        pos = Some(k);
                    }
                }
            }
            let Some(pos) = pos else {
                return Ok(PhaseEnd::Done);
            };
            let d: Vec<f64> = self.basis.column(pos).into_iter().map(|v| -v).collect();
            let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let piv = PIVOT_TOL * dmax.max(1.0);
            let mut cands: Vec<(usize, f64, f64)> = Vec::new();
            for i in 0..self.rows.len() {
                if self.basis.in_basis[i] {
                    continue;
                }
                let row = self.rows.row(i);
                let ad = row.dot(&d);
                if ad > piv {
                    let slack = (self.rows.rhs(i) - row.dot(&x)).max(0.0);
                    cands.push((i, slack, ad));
                }
            }
            let enter = if bland {
                let mut enter: Option<(usize, f64)> = None;
                for &(i, slack, ad) in &cands {
                    let t = slack / ad;
                    match enter {
                        Some((_, best)) if t >= best - 1e-12 => {}
                        _ => enter = Some((i, t)),
                    }
                }
                enter
            } else {
                let relaxed = cands
                    .iter()
                    .map(|&(_, slack, ad)| (slack + HARRIS_PRIMAL) / ad)
                    .fold(f64::INFINITY, f64::min);
                cands
                    .iter()
                    .filter(|&&(_, slack, ad)| slack / ad <= relaxed)
                    .map(|&(i, slack, ad)| {
                        let norm = match self.rows.row(i) {
                            RowRef::Plain(r) | RowRef::Pin(r, _) => dot(r, r).sqrt(),
                        };
                        (i, slack / ad, ad / norm.max(1e-300))
                    })
                    .max_by(|a, b| a.2.total_cmp(&b.2))
                    .map(|(i, t, _)| (i, t))
            };
            let Some((i, step)) = enter else {
                return Ok(PhaseEnd::Unbounded);
            };
            degenerate_run = if step <= 1e-12 { degenerate_run + 1 } else { 0 };
            let u = self.basis.coords(self.rows.row(i));
            if u[pos].abs() <= 1e-14 {
                return Err(LpError::SingularBasis);
            }
            self.basis.pivot(&self.rows, pos, i, &u)?;
        }
    }
}

fn solve_inner(
    lp: LpView<'_>,
    warm: Option<&[usize]>,
    feas_tol: f64,
    max_iter: Option<usize>,
) -> Result<LpOutcome, LpError> {
    let n = lp.n();
    let m = lp.m();
    if n == 0 {
        return Ok(if lp.rhs.iter().all(|&b| b >= -feas_tol) {
            LpOutcome::Optimal(LpSolution {
                x: Vec::new(),
                value: 0.0,
                basis: Vec::new(),
            })
        } else {
            LpOutcome::Infeasible
        });
    }

    let max_iter = max_iter.unwrap_or(50 * (m + n) + 1000);

    // A usable warm basis skips the crash entirely.
    if let Some(hint) = warm {
        if hint.iter().all(|&i| i < m) {
            let rows = Rows { lp, pins: Vec::new() };
            if let Some(basis) = Basis::new(&rows, hint.to_vec()) {
                let eng = Engine {
                    rows,
                    basis,
                    feas_tol,
                    iter: 0,
                    max_iter,
                };
                let x = eng.basis.point(&eng.rows);
                let primal_ok = eng.max_violation(&x) <= feas_tol * 0.1;
                let dual_ok = eng
                    .basis
                    .multipliers(lp.cost)
                    .iter()
                    .all(|&y| y >= -DUAL_TOL);
                if primal_ok || dual_ok {
                    return finish(eng, lp.cost, !primal_ok);
                }
            }
        }
    }

    let (chosen, null) = crash_rows(lp);
    if !null.is_empty() {
        let cnorm = dot(lp.cost, lp.cost).sqrt();
        let leaks = null.iter().any(|v| dot(v, lp.cost).abs() > 1e-9 * cnorm.max(1.0));
        if leaks {
            // The objective is unbounded along the lineality space whenever
            // the problem is feasible at all.
            let zero = vec![0.0; n];
            let probe = LpView {
                cost: &zero,
                matrix: lp.matrix,
                rhs: lp.rhs,
            };
            return Ok(match solve_inner(probe, None, feas_tol, Some(max_iter))? {
                LpOutcome::Optimal(_) => LpOutcome::Unbounded,
                other => other,
            });
        }
    }
    let mut idx = chosen;
    let npins = null.len();
    for k in 0..npins {
        idx.push(m + 2 * k);
    }
    let rows = Rows { lp, pins: null };
    let basis = Basis::new(&rows, idx).ok_or(LpError::SingularBasis)?;
    let mut eng = Engine {
        rows,
        basis,
        feas_tol,
        iter: 0,
        max_iter,
    };

    let x = eng.basis.point(&eng.rows);
    let primal_ok = eng.max_violation(&x) <= feas_tol * 0.1;
    let dual_ok = eng.basis.multipliers(lp.cost).iter().all(|&y| y >= -DUAL_TOL);
    if primal_ok || dual_ok {
        return finish(eng, lp.cost, !primal_ok);
    }
    // Auxiliary cost making every crash multiplier equal to one.
    let mut aux = vec![0.0; n];
    for &i in &eng.basis.rows {
        let r = eng.rows.row(i);
        for (j, a) in aux.iter_mut().enumerate() {
            *a -= r.get(j);
        }
    }
    match eng.dual_phase(&aux)? {
        PhaseEnd::Infeasible => return Ok(LpOutcome::Infeasible),
        PhaseEnd::Unbounded => unreachable!("dual rule never reports unboundedness"),
        PhaseEnd::Done => {}
    }
    finish(eng, lp.cost, false)
}

fn finish(mut eng: Engine<'_>, cost: &[f64], start_dual: bool) -> Result<LpOutcome, LpError> {
    let mut run_dual = start_dual;
    let mut worst = 0.0;
    for _ in 0..4 {
        if run_dual {
            match eng.dual_phase(cost)? {
                PhaseEnd::Infeasible => return Ok(LpOutcome::Infeasible),
                PhaseEnd::Unbounded => unreachable!(),
                PhaseEnd::Done => {}
            }
        }
        match eng.vertex_phase(cost)? {
            PhaseEnd::Unbounded => return Ok(LpOutcome::Unbounded),
            PhaseEnd::Infeasible => unreachable!(),
            PhaseEnd::Done => {}
        }
        if !eng.basis.refactor(&eng.rows) {
            return Err(LpError::SingularBasis);
        }
        let x = eng.basis.point(&eng.rows);
        worst = eng.max_violation(&x);
        if worst <= eng.feas_tol {
            let value = dot(cost, &x);
            return Ok(LpOutcome::Optimal(LpSolution {
                x,
                value,
                basis: eng.basis.rows.clone(),
            }));
        }
        // drift after many rank-one updates: repair with the dual rule
        run_dual = true;
    }
    Err(LpError::Inaccurate(worst))
}
