#![allow(dead_code)]

pub mod oracle;

use conicsens::{Cone64, ConeBlock, ConicProgram64, Matrix64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

fn small_int(rng: &mut ChaCha8Rng, lo: i32, hi: i32) -> f64 {
    f64::from(rng.gen_range(lo..=hi))
}

fn tr_matvec(a: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let n = a.first().map_or(0, Vec::len);
    (0..n).map(|j| a.iter().zip(y).map(|(row, v)| row[j] * v).sum()).collect()
}

fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

fn full_column_rank(rows: &[Vec<f64>]) -> bool {
    let n = rows.first().map_or(0, Vec::len);
    let gram: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| rows.iter().map(|r| r[i] * r[j]).sum()).collect())
        .collect();
    oracle::solve_square(gram, vec![0.0; n]).is_some()
}

/// Random program over orthant and H-polyhedral blocks with `n, m ≤ 8`
/// and both sides strictly feasible by construction: `b = Ax⁰ − s` with
/// `s ∈ int K` and `c = Aᵀy⁰` with `y⁰ ∈ int K*`. Half of the draws use
/// small integers, which makes degenerate vertices common.
pub fn polyhedral_instance(rng: &mut ChaCha8Rng) -> ConicProgram64 {
    loop {
        let integer = rng.gen_bool(0.5);
        let n = rng.gen_range(1..=5);
        let m = rng.gen_range(n..=8);
        let draw = |rng: &mut ChaCha8Rng| {
            if integer {
                small_int(rng, -2, 2)
            } else {
                rng.sample(StandardNormal)
            }
        };
        let a: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| draw(rng)).collect()).collect();
        let poly = if rng.gen_bool(0.5) { rng.gen_range(1..=m.min(3)) } else { 0 };
        let orth = m - poly;
        let mut blocks = Vec::new();
        let mut s = Vec::new();
        let mut y = Vec::new();
        let positive = |rng: &mut ChaCha8Rng| if integer { small_int(rng, 1, 2) } else { rng.gen_range(0.2..1.5) };
        if orth > 0 {
            blocks.push(ConeBlock::Orthant { dim: orth });
            for _ in 0..orth {
                s.push(positive(rng));
                y.push(positive(rng));
            }
        }
        if poly > 0 {
            let k = rng.gen_range(poly..=poly + 2);
            let mut bm: Vec<Vec<f64>> = (0..k)
                .map(|i| {
                    (0..poly)
                        .map(|j| {
                            let base = if i == j { 1.0 } else { 0.0 };
                            if i < poly { base + 0.3 * draw(rng) } else { draw(rng) }
                        })
                        .collect()
                })
                .collect();
            // make the all-ones vector interior
            for row in &mut bm {
                let sum: f64 = row.iter().sum();
                if sum < 0.5 {
                    let shift = (0.5 - sum) / poly as f64;
                    row.iter_mut().for_each(|v| *v += shift);
                }
            }
            if !full_column_rank(&bm) {
                continue;
            }
            let u = positive(rng);
            s.extend(std::iter::repeat(u).take(poly));
            let lambda: Vec<f64> = (0..k).map(|_| positive(rng)).collect();
            y.extend(tr_matvec(&bm, &lambda));
            blocks.push(ConeBlock::PolyhedralH {
                b: Matrix64::from_rows(&bm).unwrap(),
            });
        }
        let x0: Vec<f64> = (0..n).map(|_| draw(rng)).collect();
        let ax = matvec(&a, &x0);
        let b: Vec<f64> = ax.iter().zip(&s).map(|(p, q)| p - q).collect();
        let c = tr_matvec(&a, &y);
        let program = ConicProgram64::new(Matrix64::from_rows(&a).unwrap(), b, c, Cone64::new(blocks).unwrap()).unwrap();
        if full_column_rank(&oracle::as_inequalities(&program).0) {
            return program;
        }
    }
}

fn soc_point(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let mut v = gauss(rng, dim - 1);
    let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
    v.push(norm + rng.gen_range(0.3..1.5));
    v
}

fn symmetric_blocks(rng: &mut ChaCha8Rng) -> Vec<ConeBlock<f64>> {
    let mut blocks = Vec::new();
    let orth = rng.gen_range(0..=2);
    let mut used = orth;
    if orth > 0 {
        blocks.push(ConeBlock::Orthant { dim: orth });
    }
    for _ in 0..rng.gen_range(1..=2) {
        let dim = rng.gen_range(2..=(8 - used).min(4));
        used += dim;
        blocks.push(ConeBlock::SecondOrder { dim });
    }
    blocks
}

/// Random point of `int K` with margin at least 0.3.
pub fn interior_point(rng: &mut ChaCha8Rng, cone: &Cone64) -> Vec<f64> {
    let mut v = Vec::new();
    for (blk, r) in cone.block_ranges() {
        match blk {
            ConeBlock::Orthant { .. } => v.extend(r.map(|_| rng.gen_range(0.3..1.5))),
            _ => v.extend(soc_point(rng, r.len())),
        }
    }
    v
}

/// Random strictly primal and dual feasible program over orthant and
/// second-order blocks, `n ≤ 4`, `m ≤ 8`.
pub fn symmetric_instance(rng: &mut ChaCha8Rng) -> ConicProgram64 {
    let n = rng.gen_range(1..=4);
    let cone = Cone64::new(symmetric_blocks(rng)).unwrap();
    let (s, y) = (interior_point(rng, &cone), interior_point(rng, &cone));
    let m = s.len();
    let a: Vec<Vec<f64>> = (0..m).map(|_| gauss(rng, n)).collect();
    let x0 = gauss(rng, n);
    let b: Vec<f64> = matvec(&a, &x0).iter().zip(&s).map(|(p, q)| p - q).collect();
    let c = tr_matvec(&a, &y);
    ConicProgram64::new(Matrix64::from_rows(&a).unwrap(), b, c, cone).unwrap()
}

/// Primal infeasible program: `Aᵀy* = 0`, `bᵀy* = 1` for some
/// `y* ∈ int K*`.
pub fn infeasible_instance(rng: &mut ChaCha8Rng) -> ConicProgram64 {
    let n = rng.gen_range(1..=4);
    let cone = Cone64::new(symmetric_blocks(rng)).unwrap();
    let y = interior_point(rng, &cone);
    let m = y.len();
    let yy = dot(&y, &y);
    let a0: Vec<Vec<f64>> = (0..m).map(|_| gauss(rng, n)).collect();
    let aty = tr_matvec(&a0, &y);
    let a: Vec<Vec<f64>> = a0
        .iter()
        .zip(&y)
        .map(|(row, &yi)| row.iter().zip(&aty).map(|(v, g)| v - yi * g / yy).collect())
        .collect();
    let b0 = gauss(rng, m);
    let shift = (1.0 - dot(&b0, &y)) / yy;
    let b = along(&b0, shift, &y);
    let c = gauss(rng, n);
    ConicProgram64::new(Matrix64::from_rows(&a).unwrap(), b, c, cone).unwrap()
}

/// Feasible program with a recession direction `r`, `Ar ∈ int K`,
/// `cᵀr = −1`.
pub fn unbounded_instance(rng: &mut ChaCha8Rng) -> ConicProgram64 {
    let n = rng.gen_range(1..=4);
    let cone = Cone64::new(symmetric_blocks(rng)).unwrap();
    let sr = interior_point(rng, &cone);
    let m = sr.len();
    let mut r = gauss(rng, n);
    let nr = norm(&r);
    r.iter_mut().for_each(|v| *v /= nr);
    let a0: Vec<Vec<f64>> = (0..m).map(|_| gauss(rng, n)).collect();
    let a: Vec<Vec<f64>> = a0
        .iter()
        .zip(&sr)
        .map(|(row, &t)| {
            let k = t - dot(row, &r);
            row.iter().zip(&r).map(|(v, q)| v + k * q).collect()
        })
        .collect();
    let s = interior_point(rng, &cone);
    let x0 = gauss(rng, n);
    let b: Vec<f64> = matvec(&a, &x0).iter().zip(&s).map(|(p, q)| p - q).collect();
    let c0 = gauss(rng, n);
    let c = along(&c0, -(dot(&c0, &r) + 1.0), &r);
    ConicProgram64::new(Matrix64::from_rows(&a).unwrap(), b, c, cone).unwrap()
}

pub fn soc_unique_dual() -> ConicProgram64 {
    let a = Matrix64::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    ConicProgram64::new(a, vec![-1.0, 0.0, 0.0], vec![1.0, 0.0], Cone64::second_order(3).unwrap()).unwrap()
}

pub fn soc_unattained() -> ConicProgram64 {
    let a = Matrix64::from_rows(&[vec![1.0], vec![0.0], vec![0.0]]).unwrap();
    ConicProgram64::new(a, vec![0.0, 0.0, -1.0], vec![1.0], Cone64::second_order(3).unwrap()).unwrap()
}

pub fn orthant_unbounded_optima() -> ConicProgram64 {
    let a = Matrix64::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
    ConicProgram64::new(a, vec![1.0, -1.0], vec![1.0, 0.0], Cone64::orthant(2).unwrap()).unwrap()
}

pub fn along(v: &[f64], t: f64, d: &[f64]) -> Vec<f64> {
    v.iter().zip(d).map(|(p, q)| p + t * q).collect()
}

/// Membership in `K` (orthant and second-order blocks, head last) with an
/// absolute tolerance.
pub fn in_cone(cone: &Cone64, y: &[f64], tol: f64) -> bool {
    cone.block_ranges().all(|(blk, r)| {
        let v = &y[r];
        match blk {
            ConeBlock::Orthant { .. } => v.iter().all(|&t| t >= -tol),
            ConeBlock::SecondOrder { .. } => {
                let (tail, head) = v.split_at(v.len() - 1);
                head[0] >= tail.iter().map(|t| t * t).sum::<f64>().sqrt() - tol
            }
            other => panic!("no membership test for {}", other.kind()),
        }
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
