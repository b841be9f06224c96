//! Two-sided increment estimates and exact polyhedral increments.

use serde::Serialize;

use crate::cones::ConeBlock;
use crate::extreal::ExtReal;
use crate::linalg::axpy;
use crate::scalar::Scalar;
use crate::solver::{Scope, Status};

use super::{check_dim, range_test_residual, violation, Analyzer, Hypothesis, SensitivityError, RANGE_TOL};

/// Finest dyadic step tried when certifying an exactness horizon (`2⁻²⁰`).
const HORIZON_LEVELS: i32 = 20;

/// `lower ≤ value(t) ≤ upper`, with `lower = v + t·lower_slope` and
/// `upper = v + t·upper_slope`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct IncrementBounds<T> {
    pub lower: ExtReal<T>,
    pub upper: ExtReal<T>,
    pub lower_slope: ExtReal<T>,
    pub upper_slope: ExtReal<T>,
    pub lower_attained: bool,
    pub upper_attained: bool,
    /// Whether the bounds are known to hold at this `t`. Always true for
    /// cost perturbations; for right-hand sides it means the strict
    /// feasibility witness is still interior after the perturbation.
    pub valid: bool,
}

/// `value(t) = v + t·slope` for `0 ≤ t ≤ tau`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct ExactIncrement<T> {
    pub slope: ExtReal<T>,
    /// Numerically certified horizon; `None` when even the finest grid
    /// step disagrees with the linear prediction.
    pub tau: Option<T>,
}

fn check_step<T: Scalar>(t: T) -> Result<(), SensitivityError> {
    if !(t > T::zero()) || !t.is_finite() {
        return Err(SensitivityError::InvalidStep);
    }
    Ok(())
}

/// Largest `t ≤ 1` such that `value(t') = v + t'·slope` (within `tol`) on
/// every tested `t' ≤ t`: dyadic grid from `2⁻²⁰` upwards, then bisection
/// between the last agreeing and the first disagreeing step.
fn certify_horizon<T: Scalar>(
    v: T,
    slope: ExtReal<T>,
    tol: T,
    value_at: impl Fn(T) -> Result<ExtReal<T>, SensitivityError>,
) -> Result<Option<T>, SensitivityError> {
    let agrees = |t: T| -> Result<bool, SensitivityError> {
        let predicted = ExtReal::affine(ExtReal::Finite(v), t, slope)?;
        Ok(match (value_at(t)?, predicted) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => (a - b).abs() <= tol,
            (a, b) => a == b,
        })
    };
    let two = T::lit(2.0);
    let mut passing = None;
    let mut failing = None;
    for k in (0..=HORIZON_LEVELS).rev() {
        let t = two.powi(-k);
        if agrees(t)? {
            passing = Some(t);
        } else {
            failing = Some(t);
            break;
        }
    }
    let (Some(mut lo), Some(mut hi)) = (passing, failing) else {
        return Ok(passing);
    };
    while hi - lo > T::lit(1e-6) * hi {
        let mid = (lo + hi) / two;
        if agrees(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

impl<T: Scalar> Analyzer<'_, T> {
    pub(crate) fn require_polyhedral(&self) -> Result<(), SensitivityError> {
        for (i, blk) in self.program.cone().blocks().iter().enumerate() {
            if !matches!(blk, ConeBlock::Orthant { .. } | ConeBlock::PolyhedralH { .. }) {
                return Err(SensitivityError::NotPolyhedral {
                    block: i,
                    kind: blk.kind(),
                });
            }
        }
        Ok(())
    }

    /// Agreement tolerance of the horizon search, a tenth of the
    /// `1e-6·(1+|v|)` exactness tolerance (for `f64`).
    fn horizon_tol(v: T) -> T {
        T::lit(1e-7_f64.max(10.0 * T::DEFAULT_TOL)) * (T::one() + v.abs())
    }

    /// `v + t·sup{dᵀy : y ∈ S(D)} ≤ φ(b + td) ≤ v + t·sup{dᵀy : y ∈ F(D)}`.
    pub fn phi_increment_bounds(&self, d: &[T], t: T) -> Result<IncrementBounds<T>, SensitivityError> {
        check_dim("d", self.program.m(), d.len())?;
        check_step(t)?;
        let cert = self.require_strict_primal()?.clone();
        let v = self.require_finite_value()?;
        let (lower_slope, lower_attained) = self.dual_support(d, Scope::Solutions)?;
        let (upper_slope, upper_attained) = self.dual_support(d, Scope::Feasible)?;
        let base = ExtReal::Finite(v);
        // the estimate holds while the strict witness stays interior
        let valid = match &cert.witness {
            Some(x0) => {
                let mut slack = self.program.conic_slack(x0);
                axpy(-t, d, &mut slack);
                self.program.cone().interior_margin(&slack).is_ok_and(|m| m > T::zero())
            }
            None => false,
        };
        Ok(IncrementBounds {
            lower: ExtReal::affine(base, t, lower_slope)?,
            upper: ExtReal::affine(base, t, upper_slope)?,
            lower_slope,
            upper_slope,
            lower_attained,
            upper_attained,
            valid,
        })
    }

    /// Slope over `S(D)` and the horizon on which
    /// `φ(b + td) = φ(b) + t·slope` holds (polyhedral `K`).
    pub fn phi_increment_exact_polyhedral(&self, d: &[T]) -> Result<ExactIncrement<T>, SensitivityError> {
        check_dim("d", self.program.m(), d.len())?;
        self.require_polyhedral()?;
        let v = self.require_finite_value()?;
        let (slope, _) = self.dual_support(d, Scope::Solutions)?;
        let b = self.program.b();
        let tau = certify_horizon(v, slope, Self::horizon_tol(v), |t| {
            let mut bt = b.to_vec();
            axpy(t, d, &mut bt);
            self.phi(&bt)
        })?;
        Ok(ExactIncrement { slope, tau })
    }

    /// `ψ(c) + t·inf{hᵀx : x ∈ F(P)} ≤ ψ(c + th) ≤ ψ(c) + t·inf{hᵀx : x ∈ S(P)}`
    /// for every `t > 0`.
    pub fn psi_increment_bounds(&self, h: &[T], t: T) -> Result<IncrementBounds<T>, SensitivityError> {
        check_dim("h", self.program.n(), h.len())?;
        check_step(t)?;
        let v = self.require_finite_value()?;
        let (lower_slope, lower_attained) = self.primal_support(h, Scope::Feasible)?;
        let (upper_slope, upper_attained) = if self.base()?.status == Status::Optimal {
            self.primal_support(h, Scope::Solutions)?
        } else {
            // S(P) = ∅: the infimum over it is +∞
            (ExtReal::PlusInf, false)
        };
        let base = ExtReal::Finite(v);
        Ok(IncrementBounds {
            lower: ExtReal::affine(base, t, lower_slope)?,
            upper: ExtReal::affine(base, t, upper_slope)?,
            lower_slope,
            upper_slope,
            lower_attained,
            upper_attained,
            valid: true,
        })
    }

    /// Slope over `S(P)` and the horizon on which
    /// `ψ(c + th) = ψ(c) + t·slope` holds (polyhedral `K`, `h ∈ range(Aᵀ)`).
    pub fn psi_increment_exact_polyhedral(&self, h: &[T]) -> Result<ExactIncrement<T>, SensitivityError> {
        check_dim("h", self.program.n(), h.len())?;
        self.require_polyhedral()?;
        let residual = range_test_residual(self.program, h);
        if residual > T::lit(RANGE_TOL) {
            return Err(SensitivityError::RangeTestFailed {
                residual: residual.to_f64_lossy(),
            });
        }
        self.require_strict_dual()?;
        if self.base()?.status == Status::PrimalInfeasible {
            return Err(violation(Hypothesis::PrimalFeasibility, "F(P) is empty"));
        }
        let v = self.require_finite_value()?;
        let (slope, _) = self.primal_support(h, Scope::Solutions)?;
        let c = self.program.c();
        let tau = certify_horizon(v, slope, Self::horizon_tol(v), |t| {
            let mut ct = c.to_vec();
            axpy(t, h, &mut ct);
            self.psi(&ct)
        })?;
        Ok(ExactIncrement { slope, tau })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::Cone;
    use crate::linalg::Matrix;
    use crate::problem::ConicProgram;
    use crate::solver::Settings;
    use approx::assert_abs_diff_eq;

    fn mat(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn orthant_instance() -> ConicProgram<f64> {
        ConicProgram::new(Matrix::identity(2), vec![1.0, 2.0], vec![1.0, 1.0], Cone::orthant(2).unwrap()).unwrap()
    }

    #[test]
    fn horizon_of_a_kinked_function() {
        // value(t) = |t − 0.3| − 0.3 agrees with slope −1 up to t = 0.3
        let tau = certify_horizon(0.0, ExtReal::Finite(-1.0), 1e-9, |t: f64| {
            Ok(ExtReal::Finite((t - 0.3).abs() - 0.3))
        })
        .unwrap()
        .unwrap();
        assert_abs_diff_eq!(tau, 0.3, epsilon = 1e-6);
        let none = certify_horizon(0.0, ExtReal::Finite(1.0), 1e-9, |t: f64| Ok(ExtReal::Finite(2.0 * t))).unwrap();
        assert_eq!(none, None);
        let all = certify_horizon(0.0, ExtReal::Finite(1.0), 1e-9, |t: f64| Ok(ExtReal::Finite(t))).unwrap();
        assert_eq!(all, Some(1.0));
    }

    #[test]
    fn orthant_instance_increments() {
        let p = orthant_instance();
        let an = Analyzer::new(&p, Settings::default()).unwrap();
        let ex = an.phi_increment_exact_polyhedral(&[2.0, -1.0]).unwrap();
        assert_abs_diff_eq!(ex.slope.finite().unwrap(), 1.0, epsilon = 1e-6);
        assert!(ex.tau.unwrap() >= 1.0);
        let ex = an.psi_increment_exact_polyhedral(&[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(ex.slope.finite().unwrap(), 1.0, epsilon = 1e-6);
        assert!(ex.tau.unwrap() >= 1.0);
        let bounds = an.psi_increment_bounds(&[1.0, 0.0], 1.0).unwrap();
        assert_abs_diff_eq!(bounds.lower.finite().unwrap(), 4.0, epsilon = 1e-6);
        assert_abs_diff_eq!(bounds.upper.finite().unwrap(), 4.0, epsilon = 1e-6);
    }

    #[test]
    fn rank_deficient_example_exact_cost_increment() {
        let a = mat(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let p = ConicProgram::new(a, vec![1.0, -1.0], vec![1.0, 0.0], Cone::orthant(2).unwrap()).unwrap();
        let an = Analyzer::new(&p, Settings::default()).unwrap();
        let ex = an.psi_increment_exact_polyhedral(&[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(ex.slope.finite().unwrap(), 1.0, epsilon = 1e-6);
        assert!(matches!(
            an.psi_increment_exact_polyhedral(&[0.0, 1.0]),
            Err(SensitivityError::RangeTestFailed { .. })
        ));
    }

    #[test]
    fn polyhedral_slope_matches_orthant_reformulation() {
        // K = {y : y₁ ≥ 0, y₁ + y₂ ≥ 0} written directly and via B(Ax − b) ≥ 0
        let bm = mat(&[&[1.0, 0.0], &[1.0, 1.0]]);
        let a = mat(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let b = vec![1.0, -1.0];
        let c = vec![2.0, 1.0];
        let p = ConicProgram::new(a.clone(), b.clone(), c.clone(), Cone::polyhedral(bm.clone()).unwrap()).unwrap();
        let q = ConicProgram::new(bm.matmul(&a), bm.matvec(&b), c, Cone::orthant(2).unwrap()).unwrap();
        let d = [0.5, -2.0];
        let st = Settings::default();
        let sp = Analyzer::new(&p, st.clone()).unwrap().phi_increment_exact_polyhedral(&d).unwrap();
        let sq = Analyzer::new(&q, st).unwrap().phi_increment_exact_polyhedral(&bm.matvec(&d)).unwrap();
        assert_abs_diff_eq!(sp.slope.finite().unwrap(), sq.slope.finite().unwrap(), epsilon = 1e-6);
    }

    #[test]
    fn second_order_cone_is_rejected_for_exact_increments() {
        let a = mat(&[&[0.0, 0.0], &[0.0, 1.0], &[1.0, 0.0]]);
        let p = ConicProgram::new(a, vec![-1.0, 0.0, 0.0], vec![1.0, 0.0], Cone::second_order(3).unwrap()).unwrap();
        let an = Analyzer::new(&p, Settings::default()).unwrap();
        assert!(matches!(
            an.phi_increment_exact_polyhedral(&[1.0, 0.0, 0.0]),
            Err(SensitivityError::NotPolyhedral { block: 0, .. })
        ));
    }
}
