//! Programs with free variables, equality constraints and constant offsets,
//! reduced to the full-column-rank form the embedding expects.
//!
//! `min qᵀx + q₀  s.t.  E x = f,  A x − b ∈ K`
//!
//! Equalities are eliminated through `x = x_p + N u` (minimum-norm
//! particular solution, orthonormal null basis). Directions in `null(A)`
//! are removed the same way: if the cost has a component there the program
//! is either unbounded along it or infeasible.

use crate::extreal::ExtReal;
use crate::linalg::{self, dot, norm2, AffineSolutionSet, Matrix, PivotedQr};
use crate::scalar::Scalar;

use super::ipm::{self, BlockKind, CoreSettings, CoreStatus, SolverCone};
use super::{Settings, Status};

/// Relative tolerance deciding numerical rank in eliminations.
pub(crate) const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub(crate) struct AffineProgram<T> {
    pub objective: Vec<T>,
    pub offset: T,
    pub eq: Option<(Matrix<T>, Vec<T>)>,
    /// Accepted least-squares residual of `eq`; `None` uses the solver's
    /// feasibility tolerance. The equality is then solved in the
    /// least-squares sense.
    pub eq_slack: Option<T>,
    pub a: Matrix<T>,
    pub b: Vec<T>,
    pub cone: SolverCone,
}

#[derive(Clone, Debug)]
pub(crate) struct Outcome<T> {
    pub status: Status,
    /// Optimal (or limiting) value including the offset.
    pub value: ExtReal<T>,
    pub x: Option<Vec<T>>,
    /// Multiplier of the conic constraint.
    pub z: Option<Vec<T>>,
    /// `y ∈ K*`, `Aᵀy = 0`, `bᵀy = 1` (conic part only).
    pub certificate: Option<Vec<T>>,
    /// `A r ∈ K`, `E r = 0`, `qᵀr < 0`.
    pub ray: Option<Vec<T>>,
    pub iterations: usize,
}

impl<T: Scalar> Outcome<T> {
    fn infeasible(certificate: Option<Vec<T>>, iterations: usize) -> Self {
        Self {
            status: Status::PrimalInfeasible,
            value: ExtReal::PlusInf,
            x: None,
            z: None,
            certificate,
            ray: None,
            iterations,
        }
    }

    fn failure(iterations: usize) -> Self {
        Self {
            status: Status::NumericalFailure,
            value: ExtReal::Finite(T::nan()),
            x: None,
            z: None,
            certificate: None,
            ray: None,
            iterations,
        }
    }
}

/// Euclidean projection onto the (self-dual) solver cone.
pub(crate) fn project<T: Scalar>(cone: &SolverCone, v: &[T]) -> Vec<T> {
    let mut out = v.to_vec();
    for (k, r) in &cone.blocks {
        let blk = &mut out[r.clone()];
        match k {
            BlockKind::Orthant => blk.iter_mut().for_each(|x| *x = x.max(T::zero())),
            BlockKind::Soc => {
                let h = blk.len() - 1;
                let nt = norm2(&blk[..h]);
                let head = blk[h];
                if nt <= head {
                    continue;
                }
                if nt <= -head {
                    blk.iter_mut().for_each(|x| *x = T::zero());
                    continue;
                }
                let f = (head + nt) / T::lit(2.0);
                for x in blk[..h].iter_mut() {
                    *x = f * *x / nt;
                }
                blk[h] = f;
            }
        }
    }
    out
}

/// Distance from `v` to the solver cone.
pub(crate) fn cone_distance<T: Scalar>(cone: &SolverCone, v: &[T]) -> T {
    norm2(&linalg::sub(v, &project(cone, v)))
}

pub(crate) fn solve_affine<T: Scalar>(prog: &AffineProgram<T>, st: &Settings<T>) -> Outcome<T> {
    let Some((e, f)) = &prog.eq else {
        let mut out = solve_free(&prog.a, &prog.b, &prog.objective, &prog.cone, st);
        if let ExtReal::Finite(v) = out.value {
            out.value = ExtReal::Finite(v + prog.offset);
        }
        return out;
    };
    let set = AffineSolutionSet::new(e, f, T::lit(RANK_TOL));
    let slack = prog
        .eq_slack
        .unwrap_or_else(|| T::lit(100.0) * st.tol_feas * (T::one() + norm2(f)));
    if set.residual > slack {
        return Outcome::infeasible(None, 0);
    }
    let n_basis = &set.null_basis;
    let xp = &set.particular;
    let mut q = n_basis.tr_matvec(&prog.objective);
    let offset = prog.offset + dot(&prog.objective, xp);
    let mut a = prog.a.matmul(n_basis);
    // rounding noise left by the elimination is not a direction
    let tol = T::lit(RANK_TOL);
    let q_floor = tol * norm2(&prog.objective);
    q.iter_mut().filter(|v| v.abs() <= q_floor).for_each(|v| *v = T::zero());
    let a_floor = tol * prog.a.max_abs() * T::lit((prog.a.cols().max(1)) as f64).sqrt();
    for j in 0..a.cols() {
        if norm2(&a.column(j)) <= a_floor {
            a.set_column(j, &vec![T::zero(); a.rows()]);
        }
    }
    let b = linalg::sub(&prog.b, &prog.a.matvec(xp));
    let mut out = solve_free(&a, &b, &q, &prog.cone, st);
    if let ExtReal::Finite(v) = out.value {
        out.value = ExtReal::Finite(v + offset);
    }
    out.x = out.x.map(|u| linalg::add(xp, &n_basis.matvec(&u)));
    out.ray = out.ray.map(|u| n_basis.matvec(&u));
    out
}

/// `min cᵀx s.t. Ax − b ∈ K` with `x` free and `A` of any rank.
pub(crate) fn solve_free<T: Scalar>(a: &Matrix<T>, b: &[T], c: &[T], cone: &SolverCone, st: &Settings<T>) -> Outcome<T> {
    let n = a.cols();
    let qr = PivotedQr::new(&a.transpose(), T::lit(RANK_TOL));
    let basis = qr.range_basis();
    let c_range = basis.matvec(&basis.tr_matvec(c));
    let c_perp = linalg::sub(c, &c_range);
    let perp_norm = norm2(&c_perp);

    if perp_norm > T::lit(10.0) * st.tol_feas * (T::one() + norm2(c)) {
        // cost not in range(Aᵀ): dual infeasible. Unbounded iff feasible.
        let feas = solve_free(a, b, &vec![T::zero(); n], cone, st);
        return match feas.status {
            Status::Optimal | Status::NearOptimalUnattained => {
                let ray: Vec<T> = c_perp.iter().map(|&v| -v / perp_norm).collect();
                Outcome {
                    status: Status::Unbounded,
                    value: ExtReal::MinusInf,
                    x: feas.x,
                    z: None,
                    certificate: None,
                    ray: Some(ray),
                    iterations: feas.iterations,
                }
            }
            _ => feas,
        };
    }

    if qr.rank() == 0 {
        return constant_constraints(b, cone, st, n);
    }

    let ar = a.matmul(&basis);
    let cr = basis.tr_matvec(c);
    let core = CoreSettings {
        tol_feas: st.tol_feas,
        tol_gap: st.tol_gap,
        max_iters: st.max_iters,
        step_fraction: st.step_fraction,
        unattained_norm: st.unattained_norm,
    };
    let res = ipm::solve_hsde(&ar, b, &cr, cone, &core);
    let lift = |w: &[T]| basis.matvec(w);
    let tau = res.tau;
    match res.status {
        CoreStatus::Optimal => {
            let x: Vec<T> = lift(&res.x).iter().map(|&v| v / tau).collect();
            let z: Vec<T> = res.z.iter().map(|&v| v / tau).collect();
            let status = if res.unattained {
                Status::NearOptimalUnattained
            } else {
                Status::Optimal
            };
            Outcome {
                status,
                value: ExtReal::Finite(dot(c, &x)),
                x: Some(x),
                z: Some(z),
                certificate: None,
                ray: None,
                iterations: res.iterations,
            }
        }
        CoreStatus::PrimalInfeasible => {
            let bz = dot(b, &res.z);
            let y: Vec<T> = res.z.iter().map(|&v| v / bz).collect();
            Outcome::infeasible(Some(y), res.iterations)
        }
        CoreStatus::DualInfeasible => {
            let cx = dot(&cr, &res.x);
            let ray: Vec<T> = lift(&res.x).iter().map(|&v| v / (-cx)).collect();
            let feas = solve_free(a, b, &vec![T::zero(); n], cone, st);
            match feas.status {
                Status::Optimal | Status::NearOptimalUnattained => Outcome {
                    status: Status::Unbounded,
                    value: ExtReal::MinusInf,
                    x: feas.x,
                    z: None,
                    certificate: None,
                    ray: Some(ray),
                    iterations: res.iterations + feas.iterations,
                },
                _ => feas,
            }
        }
        CoreStatus::Stopped => {
            // Diverging iterates with settled objective: unattained optimum.
            let relaxed = T::lit(1e-6).max(st.tol_feas);
            let settled = res.pres <= relaxed && res.dres <= relaxed && res.gap <= relaxed * (T::one() + res.gap.abs());
            let x: Vec<T> = lift(&res.x).iter().map(|&v| v / tau).collect();
            let z: Vec<T> = res.z.iter().map(|&v| v / tau).collect();
            let big = norm2(&x).max(norm2(&z)) > st.unattained_norm;
            if settled && big && tau > T::zero() {
                Outcome {
                    status: Status::NearOptimalUnattained,
                    value: ExtReal::Finite(dot(c, &x)),
                    x: Some(x),
                    z: Some(z),
                    certificate: None,
                    ray: None,
                    iterations: res.iterations,
                }
            } else {
                Outcome::failure(res.iterations)
            }
        }
    }
}

/// No free directions left: feasibility of `−b ∈ K` decides everything.
fn constant_constraints<T: Scalar>(b: &[T], cone: &SolverCone, st: &Settings<T>, n: usize) -> Outcome<T> {
    let s: Vec<T> = b.iter().map(|&v| -v).collect();
    if cone_distance(cone, &s) <= st.tol_feas * (T::one() + norm2(b)) {
        return Outcome {
            status: Status::Optimal,
            value: ExtReal::Finite(T::zero()),
            x: Some(vec![T::zero(); n]),
            z: Some(vec![T::zero(); b.len()]),
            certificate: None,
            ray: None,
            iterations: 0,
        };
    }
    // y = Π_K(b) gives bᵀy = ‖y‖² > 0 and y ∈ K = K*
    let y = project(cone, b);
    let by = dot(b, &y);
    let cert = (by > T::zero()).then(|| y.iter().map(|&v| v / by).collect());
    Outcome::infeasible(cert, 0)
}
