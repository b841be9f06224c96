//! Numerical checks of the first-order theory: difference quotients, local
//! Lipschitz behaviour of `φ` and boundedness of dual solution sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::extreal::ExtReal;
use crate::linalg::{axpy, norm2, sub};
use crate::problem::{Perturbation, PerturbationKind};
use crate::scalar::Scalar;
use crate::solver::Scope;

use super::{check_dim, Analyzer, SensitivityError};

/// Difference quotients `q(t) = (value(t) − value(0)) / t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct FdTable<T> {
    pub base: ExtReal<T>,
    /// `(t, q(t))` in schedule order (decreasing `t`).
    pub rows: Vec<(T, ExtReal<T>)>,
}

impl<T: Scalar> FdTable<T> {
    /// Checks the table against a directional derivative.
    ///
    /// Convex case (`φ`): quotients do not increase as `t` decreases and stay
    /// above the derivative. Concave case (`ψ`): mirrored. `value_tol` is the
    /// accuracy of a single value evaluation, relative to `1 + |v|`; row `t`
    /// gets slack `2·value_tol·(1 + |v|)/t`.
    pub fn consistent_with(&self, derivative: ExtReal<T>, convex: bool, value_tol: T) -> bool {
        let scale = T::one() + self.base.finite().map_or(T::zero(), |v| v.abs());
        let slack = |t: T| T::lit(2.0) * value_tol * scale / t;
        let le = |a: ExtReal<T>, b: ExtReal<T>, tol: T| match (a, b) {
            (ExtReal::Finite(x), ExtReal::Finite(y)) => x <= y + tol,
            (a, b) => a <= b,
        };
        let mut prev: Option<(T, ExtReal<T>)> = None;
        for &(t, q) in &self.rows {
            let tol = slack(t);
            let bound_ok = if convex {
                le(derivative, q, tol)
            } else {
                le(q, derivative, tol)
            };
            let monotone = match prev {
                None => true,
                Some((_, qp)) if convex => le(q, qp, tol),
                Some((_, qp)) => le(qp, q, tol),
            };
            if !bound_ok || !monotone {
                return false;
            }
            prev = Some((t, q));
        }
        true
    }
}

/// Outcome of sampling `φ` on a ball around `b`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct LipschitzProbe<T> {
    pub finite_everywhere: bool,
    /// Largest subgradient norm `‖y(b')‖` over the sampled points, with
    /// `y(b')` the dual solution at `b'`; bounds the quotients below.
    pub modulus_estimate: T,
    /// `max |φ(b₁) − φ(b₂)| / ‖b₁ − b₂‖` over the sampled pairs.
    pub quotient_max: T,
    /// Radius actually used (the requested one, capped by half the
    /// certified interior margin).
    pub radius: T,
    pub pairs: usize,
}

fn ball_point<T: Scalar>(rng: &mut ChaCha8Rng, center: &[T], radius: T) -> Vec<T> {
    let m = center.len();
    let dir: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
    let nd = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let r: f64 = rng.gen::<f64>().powf(1.0 / m as f64);
    let scale = radius.to_f64_lossy() * r / nd;
    center.iter().zip(&dir).map(|(&c, &d)| c + T::lit(d * scale)).collect()
}

impl<T: Scalar> Analyzer<'_, T> {
    /// Value at step `t` along a perturbation of `b` or `c`.
    fn value_along(&self, pert: &Perturbation<T>, t: T) -> Result<ExtReal<T>, SensitivityError> {
        match &pert.kind {
            PerturbationKind::Rhs(d) => {
                let mut b = self.program.b().to_vec();
                axpy(t, d, &mut b);
                self.phi(&b)
            }
            PerturbationKind::Objective(h) => {
                let mut c = self.program.c().to_vec();
                axpy(t, h, &mut c);
                self.psi(&c)
            }
        }
    }

    /// Difference quotients along `pert` for each step of `schedule`
    /// (strictly decreasing, positive). Infinite values are recorded, not
    /// treated as errors.
    pub fn fd_verify(&self, pert: &Perturbation<T>, schedule: &[T]) -> Result<FdTable<T>, SensitivityError> {
        let (what, expected) = match &pert.kind {
            PerturbationKind::Rhs(_) => ("d", self.program.m()),
            PerturbationKind::Objective(_) => ("h", self.program.n()),
        };
        check_dim(what, expected, pert.direction().len())?;
        let ordered = schedule.windows(2).all(|w| w[0] > w[1]);
        if !ordered || schedule.iter().any(|&t| !(t > T::zero()) || !t.is_finite()) {
            return Err(SensitivityError::InvalidSchedule);
        }
        let v = self.require_finite_value()?;
        let mut rows = Vec::with_capacity(schedule.len());
        for &t in schedule {
            let q = self
                .value_along(pert, t)?
                .checked_sub(ExtReal::Finite(v))?
                .scale(T::one() / t);
            rows.push((t, q));
        }
        Ok(FdTable {
            base: ExtReal::Finite(v),
            rows,
        })
    }

    /// Value and dual solution norm at a right-hand side.
    fn value_and_subgradient(&self, b_new: &[T]) -> Result<(ExtReal<T>, T), SensitivityError> {
        let q = self.lowered().with_b(self.lowered.forward(b_new))?;
        let sol = crate::solver::solve(&q, &self.settings)?;
        let g = sol.y_opt.as_ref().map_or(T::zero(), |y| norm2(&self.lowered.lift_dual(y)));
        Ok((super::value_of(&sol)?, g))
    }

    /// Samples `pairs` pairs of right-hand sides in the ball of radius
    /// `radius` around `b` and estimates the local Lipschitz modulus of `φ`.
    /// The radius is capped at half the interior radius of the strict
    /// feasibility witness, inside which every sample stays feasible.
    pub fn lipschitz_probe(&self, radius: T, pairs: usize, seed: u64) -> Result<LipschitzProbe<T>, SensitivityError> {
        let cert = self.require_strict_primal()?.clone();
        self.require_finite_value()?;
        let witness = cert.witness.unwrap_or_else(|| vec![T::zero(); self.program.n()]);
        let margin = self
            .program
            .cone()
            .interior_radius(&self.program.conic_slack(&witness))
            .map_err(crate::problem::ProblemError::from)?;
        let radius = radius.min(margin / T::lit(2.0)).max(T::zero());
        let mut probe = LipschitzProbe {
            finite_everywhere: true,
            modulus_estimate: T::zero(),
            quotient_max: T::zero(),
            radius,
            pairs: 0,
        };
        if radius == T::zero() {
            return Ok(probe);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = self.program.b();
        for _ in 0..pairs {
            let b1 = ball_point(&mut rng, b, radius);
            let b2 = ball_point(&mut rng, b, radius);
            let ((v1, g1), (v2, g2)) = (self.value_and_subgradient(&b1)?, self.value_and_subgradient(&b2)?);
            probe.pairs += 1;
            match (v1, v2) {
                (ExtReal::Finite(p), ExtReal::Finite(q)) => {
                    probe.modulus_estimate = probe.modulus_estimate.max(g1).max(g2);
                    let dist = norm2(&sub(&b1, &b2));
                    if dist > T::zero() {
                        probe.quotient_max = probe.quotient_max.max((p - q).abs() / dist);
                    }
                }
                _ => probe.finite_everywhere = false,
            }
        }
        Ok(probe)
    }

    /// Whether `S(D)` at the right-hand side `b_new` has a finite support
    /// function in every probe direction (default: `±eᵢ`).
    pub fn dual_solution_boundedness_probe(
        &self,
        b_new: &[T],
        probes: Option<&[Vec<T>]>,
    ) -> Result<bool, SensitivityError> {
        let m = self.program.m();
        check_dim("b_new", m, b_new.len())?;
        let shifted = self.program.with_b(b_new.to_vec())?;
        let an = Analyzer::new(&shifted, self.settings.clone())?;
        an.require_strict_primal()?;
        an.require_finite_value()?;
        let axes: Vec<Vec<T>>;
        let dirs = match probes {
            Some(p) => p,
            None => {
                axes = (0..2 * m)
                    .map(|k| {
                        let mut e = vec![T::zero(); m];
                        e[k / 2] = if k % 2 == 0 { T::one() } else { -T::one() };
                        e
                    })
                    .collect();
                &axes
            }
        };
        for w in dirs {
            check_dim("probe direction", m, w.len())?;
            if !an.dual_support(w, Scope::Solutions)?.0.is_finite() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
