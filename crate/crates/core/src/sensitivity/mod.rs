//! Optimal value functions and their first-order behaviour.
//!
//! For the program `min cᵀx s.t. Ax − b ∈ K`:
//!
//! ```text
//!   φ(b') = inf{cᵀx : Ax − b' ∈ K}      (right-hand side perturbations)
//!   ψ(c') = inf{c'ᵀx : Ax − b ∈ K}      (cost perturbations)
//! ```
//!
//! `φ` is convex and `ψ` concave. Under strict feasibility
//!
//! ```text
//!   φ′(b; d) = max{dᵀy : y ∈ S(D)}
//!   ψ′(c; h) = inf{hᵀx : x ∈ S(P)}   if h ∈ range(Aᵀ),  −∞ otherwise
//! ```
//!
//! and `v + t·sup{dᵀy : y ∈ S(D)} ≤ φ(b + td) ≤ v + t·sup{dᵀy : y ∈ F(D)}`
//! for small `t`. For polyhedral `K` the lower estimate is exact on an
//! interval `[0, τ]`.
//!
//! [`Analyzer`] caches the base solve and the strict-feasibility
//! certificates of one program; every operation works on the lowered
//! program (polyhedral blocks rewritten over orthants).

mod increments;
mod probes;
mod report;

use std::cell::OnceCell;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::extreal::ExtReal;
use crate::linalg::{self, dot, norm2};
use crate::problem::{ConicProgram, Lowered, ProblemError};
use crate::scalar::Scalar;
use crate::solver::{
    self, LevelSide, Scope, Sense, Settings, Solution, SolverError, Status, StrictFeasibilityCertificate,
};

pub use increments::{ExactIncrement, IncrementBounds};
pub use probes::{FdTable, LipschitzProbe};
pub use report::{Attainment, HypothesisSummary, Margins, SensitivityReport};

/// Relative residual below which `h` counts as a member of `range(Aᵀ)`.
pub const RANGE_TOL: f64 = 1e-8;

/// Premises of the sensitivity results, named by their report keys.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    PrimalStrictFeasibility,
    DualStrictFeasibility,
    FiniteValue,
    /// The base program attains its optimal value.
    PrimalSolutionExists,
    PrimalFeasibility,
}

impl Hypothesis {
    pub fn key(self) -> &'static str {
        match self {
            Self::PrimalStrictFeasibility => "primal_strict_feasibility",
            Self::DualStrictFeasibility => "dual_strict_feasibility",
            Self::FiniteValue => "finite_value",
            Self::PrimalSolutionExists => "primal_solution_exists",
            Self::PrimalFeasibility => "primal_feasibility",
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensitivityError {
    #[error("hypothesis violated: {hypothesis} ({detail})")]
    HypothesisViolation { hypothesis: Hypothesis, detail: String },
    #[error("block {block} ({kind}) is not polyhedral")]
    NotPolyhedral { block: usize, kind: &'static str },
    #[error("direction is not in the range of Aᵀ (residual {residual:e})")]
    RangeTestFailed { residual: f64 },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("dimension mismatch: {what} has {found}, expected {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("step must be positive and finite")]
    InvalidStep,
    #[error("step schedule must be strictly decreasing and positive")]
    InvalidSchedule,
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Solver(SolverError),
}

impl From<SolverError> for SensitivityError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::NumericalFailure => Self::NumericalFailure("solver did not converge".into()),
            other => Self::Solver(other),
        }
    }
}

impl From<crate::extreal::IndeterminateForm> for SensitivityError {
    fn from(e: crate::extreal::IndeterminateForm) -> Self {
        Self::NumericalFailure(e.to_string())
    }
}

fn violation(hypothesis: Hypothesis, detail: impl Into<String>) -> SensitivityError {
    SensitivityError::HypothesisViolation {
        hypothesis,
        detail: detail.into(),
    }
}

fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<(), SensitivityError> {
    if expected != found {
        return Err(SensitivityError::Dimension { what, expected, found });
    }
    Ok(())
}

/// Optimal value of a solve in the `inf ∅ = +∞` convention.
fn value_of<T: Scalar>(sol: &Solution<T>) -> Result<ExtReal<T>, SensitivityError> {
    match sol.status {
        Status::NumericalFailure => Err(SensitivityError::NumericalFailure("solver did not converge".into())),
        // −0 → 0 keeps reports stable
        _ => Ok(match sol.value {
            ExtReal::Finite(v) => ExtReal::Finite(v + T::zero()),
            other => other,
        }),
    }
}

/// `φ(b_new)`: optimal value with the right-hand side replaced.
pub fn phi<T: Scalar>(p: &ConicProgram<T>, b_new: &[T], st: &Settings<T>) -> Result<ExtReal<T>, SensitivityError> {
    check_dim("b_new", p.m(), b_new.len())?;
    let low = p.lower()?;
    let q = low.program.with_b(low.forward(b_new))?;
    value_of(&solver::solve(&q, st)?)
}

/// `ψ(c_new)`: optimal value with the cost replaced.
pub fn psi<T: Scalar>(p: &ConicProgram<T>, c_new: &[T], st: &Settings<T>) -> Result<ExtReal<T>, SensitivityError> {
    check_dim("c_new", p.n(), c_new.len())?;
    let low = p.lower()?;
    let q = low.program.with_c(c_new.to_vec())?;
    value_of(&solver::solve(&q, st)?)
}

/// Residual of the orthogonal projection of `h` onto `range(Aᵀ)`, relative
/// to `1 + ‖h‖`.
pub fn range_test_residual<T: Scalar>(p: &ConicProgram<T>, h: &[T]) -> T {
    let at = p.a().transpose();
    linalg::range_residual(&at, h, T::lit(1e-10)) / (T::one() + norm2(h))
}

/// Cached analysis of one primal-form program.
pub struct Analyzer<'a, T: Scalar> {
    program: &'a ConicProgram<T>,
    settings: Settings<T>,
    lowered: Lowered<T>,
    base: OnceCell<Solution<T>>,
    strict_primal: OnceCell<Result<StrictFeasibilityCertificate<T>, SolverError>>,
    strict_dual: OnceCell<Result<StrictFeasibilityCertificate<T>, SolverError>>,
}

impl<'a, T: Scalar> Analyzer<'a, T> {
    pub fn new(program: &'a ConicProgram<T>, settings: Settings<T>) -> Result<Self, SensitivityError> {
        let lowered = program.lower()?;
        Ok(Self {
            program,
            settings,
            lowered,
            base: OnceCell::new(),
            strict_primal: OnceCell::new(),
            strict_dual: OnceCell::new(),
        })
    }

    pub fn program(&self) -> &ConicProgram<T> {
        self.program
    }

    pub fn settings(&self) -> &Settings<T> {
        &self.settings
    }

    fn lowered(&self) -> &ConicProgram<T> {
        &self.lowered.program
    }

    /// Solution of the (lowered) base program.
    pub fn base(&self) -> Result<&Solution<T>, SensitivityError> {
        if let Some(s) = self.base.get() {
            return Ok(s);
        }
        let sol = solver::solve(self.lowered(), &self.settings)?;
        Ok(self.base.get_or_init(|| sol))
    }

    /// `v(P)`.
    pub fn base_value(&self) -> Result<ExtReal<T>, SensitivityError> {
        value_of(self.base()?)
    }

    pub fn strict_primal(&self) -> Result<&StrictFeasibilityCertificate<T>, SensitivityError> {
        self.strict_primal
            .get_or_init(|| solver::certify_strict_primal(self.program, &self.settings))
            .as_ref()
            .map_err(|e| e.clone().into())
    }

    pub fn strict_dual(&self) -> Result<&StrictFeasibilityCertificate<T>, SensitivityError> {
        self.strict_dual
            .get_or_init(|| solver::certify_strict_dual(self.program, &self.settings))
            .as_ref()
            .map_err(|e| e.clone().into())
    }

    fn require_strict_primal(&self) -> Result<&StrictFeasibilityCertificate<T>, SensitivityError> {
        match self.strict_primal() {
            Ok(c) if c.strictly_feasible => Ok(c),
            Ok(c) => Err(violation(
                Hypothesis::PrimalStrictFeasibility,
                format!("certified margin {}", c.t_star),
            )),
            Err(e) => Err(violation(Hypothesis::PrimalStrictFeasibility, e.to_string())),
        }
    }

    fn require_strict_dual(&self) -> Result<&StrictFeasibilityCertificate<T>, SensitivityError> {
        match self.strict_dual() {
            Ok(c) if c.strictly_feasible => Ok(c),
            Ok(c) => Err(violation(
                Hypothesis::DualStrictFeasibility,
                format!("certified margin {}", c.t_star),
            )),
            Err(e) => Err(violation(Hypothesis::DualStrictFeasibility, e.to_string())),
        }
    }

    fn require_finite_value(&self) -> Result<T, SensitivityError> {
        match self.base_value()? {
            ExtReal::Finite(v) => Ok(v),
            other => Err(violation(Hypothesis::FiniteValue, format!("v(P) = {other}"))),
        }
    }

    fn require_solution(&self) -> Result<T, SensitivityError> {
        let v = self.require_finite_value()?;
        if self.base()?.status != Status::Optimal {
            return Err(violation(
                Hypothesis::PrimalSolutionExists,
                "optimal value is not attained",
            ));
        }
        Ok(v)
    }

    /// `φ(b_new)`.
    pub fn phi(&self, b_new: &[T]) -> Result<ExtReal<T>, SensitivityError> {
        check_dim("b_new", self.program.m(), b_new.len())?;
        let q = self.lowered().with_b(self.lowered.forward(b_new))?;
        value_of(&solver::solve(&q, &self.settings)?)
    }

    /// `ψ(c_new)`.
    pub fn psi(&self, c_new: &[T]) -> Result<ExtReal<T>, SensitivityError> {
        check_dim("c_new", self.program.n(), c_new.len())?;
        let q = self.lowered().with_c(c_new.to_vec())?;
        value_of(&solver::solve(&q, &self.settings)?)
    }

    /// Optimizes `dᵀy` over `S(D)` or `F(D)`; `y` in the original dual space.
    fn dual_support(&self, d: &[T], scope: Scope) -> Result<(ExtReal<T>, bool), SensitivityError> {
        let w = self.lowered.forward(d);
        let base = self.base()?;
        let sol = solver::solve_level_set(
            self.lowered(),
            base,
            LevelSide::OverDualSolutions,
            &w,
            Sense::Max,
            scope,
            &self.settings,
        )?;
        Ok((value_of(&sol)?, sol.attained()))
    }

    /// Optimizes `hᵀx` (minimum) over `S(P)` or `F(P)`.
    fn primal_support(&self, h: &[T], scope: Scope) -> Result<(ExtReal<T>, bool), SensitivityError> {
        let base = self.base()?;
        let sol = solver::solve_level_set(
            self.lowered(),
            base,
            LevelSide::OverPrimalSolutions,
            h,
            Sense::Min,
            scope,
            &self.settings,
        )?;
        Ok((value_of(&sol)?, sol.attained()))
    }

    /// `φ′(b; d) = max{dᵀy : y ∈ S(D)}`.
    pub fn phi_dir_deriv(&self, d: &[T]) -> Result<ExtReal<T>, SensitivityError> {
        check_dim("d", self.program.m(), d.len())?;
        self.require_strict_primal()?;
        self.require_solution()?;
        Ok(self.dual_support(d, Scope::Solutions)?.0)
    }

    /// Whether `p ∈ ∂φ(b) = S(D)`: dual feasible and on the optimal level.
    pub fn phi_subdiff_contains(&self, p: &[T], tol: T) -> Result<bool, SensitivityError> {
        check_dim("p", self.program.m(), p.len())?;
        self.require_strict_primal()?;
        let v = self.require_solution()?;
        let prog = self.program;
        let in_cone = prog.cone().dual().contains(p, tol).map_err(ProblemError::from)?;
        let aty = prog.a().tr_matvec(p);
        let eq = norm2(&linalg::sub(&aty, prog.c())) <= tol * (T::one() + norm2(prog.c()));
        let level = (dot(prog.b(), p) - v).abs() <= tol * (T::one() + v.abs());
        Ok(in_cone && eq && level)
    }

    /// `ψ′(c; h)`: the infimum of `hᵀx` over `S(P)` when `h ∈ range(Aᵀ)`,
    /// `−∞` otherwise.
    pub fn psi_dir_deriv(&self, h: &[T]) -> Result<ExtReal<T>, SensitivityError> {
        check_dim("h", self.program.n(), h.len())?;
        self.require_strict_primal()?;
        self.require_strict_dual()?;
        if range_test_residual(self.program, h) > T::lit(RANGE_TOL) {
            return Ok(ExtReal::MinusInf);
        }
        Ok(self.primal_support(h, Scope::Solutions)?.0)
    }
}
