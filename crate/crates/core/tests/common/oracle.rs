//! Exact LP values by brute-force basis enumeration.
//!
//! Works on `min cᵀx s.t. Ax ≥ b` with `A` of full column rank, so that a
//! nonempty feasible set has a vertex and a bounded problem has a basic
//! optimal dual solution. The dual returned is the best basic one, so
//! `bᵀy = value` is an independent strong-duality check. Shares no code
//! with the library.

use conicsens::{ConeBlock, ConicProgram64};

#[derive(Clone, Debug, PartialEq)]
pub enum LpValue {
    Infeasible,
    Unbounded,
    Optimal { value: f64, x: Vec<f64>, y: Vec<f64> },
}

impl LpValue {
    pub fn value(&self) -> f64 {
        match self {
            LpValue::Infeasible => f64::INFINITY,
            LpValue::Unbounded => f64::NEG_INFINITY,
            LpValue::Optimal { value, .. } => *value,
        }
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn solve_square(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    let scale = a.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-10 * scale {
            return None;
        }
        a.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for k in col..n {
                a[r][k] -= f * a[col][k];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (rhs[i] - s) / a[i][i];
    }
    Some(x)
}

fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            if m - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, m, k, &mut Vec::new(), &mut out);
    out
}

pub fn lp_min(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> LpValue {
    let (m, n) = (a.len(), c.len());
    assert!(m >= n, "oracle needs at least n constraints");
    let tol = 1e-9 * (1.0 + b.iter().fold(0.0_f64, |s, v| s.max(v.abs())));
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut dual: Option<(f64, Vec<f64>)> = None;
    let mut any_basis = false;
    for s in subsets(m, n) {
        let rows: Vec<Vec<f64>> = s.iter().map(|&i| a[i].clone()).collect();
        let Some(x) = solve_square(rows.clone(), s.iter().map(|&i| b[i]).collect()) else {
            continue;
        };
        any_basis = true;
        let feasible = a
            .iter()
            .zip(b)
            .all(|(row, &bi)| row.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() >= bi - tol);
        if feasible {
            let val: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
            if best.as_ref().map_or(true, |(v, _)| val < *v) {
                best = Some((val, x));
            }
        }
        let cols: Vec<Vec<f64>> = (0..n).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        if let Some(ys) = solve_square(cols, c.to_vec()) {
            if ys.iter().all(|&v| v >= -1e-9) {
                let mut y = vec![0.0; m];
                for (&i, v) in s.iter().zip(ys) {
                    y[i] = v.max(0.0);
                }
                let by: f64 = b.iter().zip(&y).map(|(p, q)| p * q).sum();
                if dual.as_ref().map_or(true, |(v, _)| by > *v) {
                    dual = Some((by, y));
                }
            }
        }
    }
    assert!(any_basis, "oracle needs A of full column rank");
    match (best, dual) {
        (None, _) => LpValue::Infeasible,
        (Some(_), None) => LpValue::Unbounded,
        (Some((value, x)), Some((_, y))) => LpValue::Optimal { value, x, y },
    }
}

/// Rewrites orthant and H-polyhedral blocks as plain inequalities.
pub fn as_inequalities(p: &ConicProgram64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let (mut rows, mut rhs) = (Vec::new(), Vec::new());
    for (blk, range) in p.cone().block_ranges() {
        match blk {
            ConeBlock::Orthant { .. } => {
                for i in range {
                    rows.push(p.a().row(i).to_vec());
                    rhs.push(p.b()[i]);
                }
            }
            ConeBlock::PolyhedralH { b: bm } => {
                for k in 0..bm.rows() {
                    let coef = bm.row(k);
                    let mut row = vec![0.0; p.n()];
                    let mut r = 0.0;
                    for (off, i) in range.clone().enumerate() {
                        for (j, v) in row.iter_mut().enumerate() {
                            *v += coef[off] * p.a().row(i)[j];
                        }
                        r += coef[off] * p.b()[i];
                    }
                    rows.push(row);
                    rhs.push(r);
                }
            }
            other => panic!("oracle handles polyhedral blocks only, got {}", other.kind()),
        }
    }
    (rows, rhs)
}

/// `φ(b_new)` of a polyhedral program.
pub fn phi(p: &ConicProgram64, b_new: &[f64]) -> LpValue {
    let q = p.with_b(b_new.to_vec()).unwrap();
    let (a, b) = as_inequalities(&q);
    lp_min(&a, &b, q.c())
}

/// `ψ(c_new)` of a polyhedral program.
pub fn psi(p: &ConicProgram64, c_new: &[f64]) -> LpValue {
    let (a, b) = as_inequalities(p);
    lp_min(&a, &b, c_new)
}
