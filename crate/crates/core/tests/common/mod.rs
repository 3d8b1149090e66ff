//! Brute-force reference implementations shared by the test targets.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub const VERTEX_TOL: f64 = 1e-9;

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                let (pivot, row) = if r < col {
                    let (head, tail) = a.split_at_mut(col);
                    (&tail[0], &mut head[r])
                } else {
                    let (head, tail) = a.split_at_mut(r);
                    (&head[col], &mut tail[0])
                };
                for (x, p) in row[col..n].iter_mut().zip(&pivot[col..n]) {
                    *x -= f * p;
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > m {
        return out;
    }
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == m - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// All vertices of `{x : a_i·x ≤ b_i}` in 2 or 3 dimensions.
pub fn vertices(rows: &[Vec<f64>], rhs: &[f64]) -> Vec<Vec<f64>> {
    let n = rows[0].len();
    combinations(rows.len(), n)
        .into_iter()
        .filter_map(|set| {
            let a = set.iter().map(|&i| rows[i].clone()).collect();
            let b = set.iter().map(|&i| rhs[i]).collect();
            solve_square(a, b)
        })
        .filter(|x| rows.iter().zip(rhs).all(|(r, &h)| dot(r, x) <= h + VERTEX_TOL))
        .collect()
}

/// Extreme rays of the recession cone `{d : a_i·d ≤ 0}`.
pub fn recession_rays(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows[0].len();
    let cands: Vec<Vec<f64>> = match n {
        2 => rows.iter().map(|r| vec![-r[1], r[0]]).collect(),
        3 => combinations(rows.len(), 2)
            .into_iter()
            .map(|s| {
                let (a, b) = (&rows[s[0]], &rows[s[1]]);
                vec![a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
            })
            .collect(),
        _ => panic!("recession rays only for 2-D and 3-D"),
    };
    cands
        .into_iter()
        .flat_map(|d| [d.clone(), d.iter().map(|v| -v).collect()])
        .filter(|d| dot(d, d) > 1e-18)
        .filter(|d| rows.iter().all(|r| dot(r, d) <= 1e-12 * dot(d, d).sqrt()))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleLp {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

/// `min cᵀx s.t. Ax ≤ b` by enumeration; assumes a pointed recession cone.
pub fn enumerate_lp(cost: &[f64], rows: &[Vec<f64>], rhs: &[f64]) -> OracleLp {
    let verts = vertices(rows, rhs);
    if verts.is_empty() {
        return OracleLp::Infeasible;
    }
    if recession_rays(rows).iter().any(|d| dot(cost, d) < -1e-9) {
        return OracleLp::Unbounded;
    }
    OracleLp::Optimal(verts.iter().map(|v| dot(cost, v)).fold(f64::INFINITY, f64::min))
}

/// Random polytope with `m` unit normals; offsets may be negative, so some
/// instances are empty.
pub fn random_polytope(rng: &mut ChaCha8Rng, dim: usize, m: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let rows = (0..m).map(|_| unit_vector(rng, dim)).collect();
    let rhs = (0..m).map(|_| rng.random_range(-0.3..1.0)).collect();
    (rows, rhs)
}

pub fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = dot(&v, &v).sqrt();
        if n > 1e-3 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Reference `(ζ_min, ζ_max)` for a bounded 2-D FPS.
///
/// The supports `c1 = max φᵀθ`, `c2 = max −φᵀθ` come from the vertices. The
/// upper end minimizes `s + γ·max(c1 − s, s + c2)` over `s = φᵀθ`, checked
/// on a grid of parameter points; the lower end is symmetric.
pub fn local_interval_oracle(rows: &[Vec<f64>], rhs: &[f64], phi: &[f64], gamma: f64, lambda: f64) -> (f64, f64) {
    let verts = vertices(rows, rhs);
    assert!(!verts.is_empty());
    let s: Vec<f64> = verts.iter().map(|v| dot(phi, v)).collect();
    let c1 = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let c2 = -s.iter().copied().fold(f64::INFINITY, f64::min);
    let upper_obj = |s: f64| s + gamma * (c1 - s).max(s + c2);
    let lower_obj = |s: f64| -s + gamma * (c1 - s).max(s + c2);
    // piecewise linear in s: minima sit at the kink or at an end
    let cands = [-c2, c1, 0.5 * (c1 - c2)];
    let up = cands.iter().map(|&s| upper_obj(s)).fold(f64::INFINITY, f64::min);
    let lo = cands.iter().map(|&s| lower_obj(s)).fold(f64::INFINITY, f64::min);

    // grid over the parameter box, feasible points only
    let (mut xmin, mut xmax) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for v in &verts {
        for i in 0..2 {
            xmin[i] = xmin[i].min(v[i]);
            xmax[i] = xmax[i].max(v[i]);
        }
    }
    let steps = 300;
    let (mut gup, mut glo) = (f64::INFINITY, f64::INFINITY);
    for i in 0..=steps {
        for j in 0..=steps {
            let th = [
                xmin[0] + (xmax[0] - xmin[0]) * i as f64 / steps as f64,
                xmin[1] + (xmax[1] - xmin[1]) * j as f64 / steps as f64,
            ];
            if rows.iter().zip(rhs).all(|(r, &h)| dot(r, &th) <= h + 1e-12) {
                let s = dot(phi, &th);
                gup = gup.min(upper_obj(s));
                glo = glo.min(lower_obj(s));
            }
        }
    }
    let spread = (c1 + c2).abs() + 1.0;
    assert!(gup >= up - 1e-9 * spread && glo >= lo - 1e-9 * spread, "grid beats candidate minimum");
    (-(lo + lambda), up + lambda)
}
