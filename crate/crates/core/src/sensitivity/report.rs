//! One-shot sensitivity reports along a right-hand side or cost direction.

use serde::Serialize;

use crate::extreal::ExtReal;
use crate::problem::{Perturbation, PerturbationKind};
use crate::scalar::Scalar;
use crate::solver::{Scope, Status, StrictFeasibilityCertificate};

use super::{range_test_residual, Analyzer, SensitivityError, RANGE_TOL};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct DirectionDoc<T> {
    /// `"rhs"` or `"objective"`
    pub kind: &'static str,
    pub vector: Vec<T>,
}

/// Whether the optimizations behind the two slopes reached their optimum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Attainment {
    pub lower: bool,
    pub upper: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct Margins<T> {
    pub primal: Option<ExtReal<T>>,
    pub dual: Option<ExtReal<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct HypothesisSummary<T> {
    pub primal_strict: bool,
    pub dual_strict: bool,
    pub margins: Margins<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct SensitivityReport<T> {
    pub base_value: ExtReal<T>,
    pub direction: DirectionDoc<T>,
    pub derivative: ExtReal<T>,
    pub lower_slope: ExtReal<T>,
    pub upper_slope: ExtReal<T>,
    /// Slope of the exact increment (polyhedral cones only).
    pub exact_slope: Option<ExtReal<T>>,
    /// Numerically certified horizon of the exact increment.
    pub tau: Option<T>,
    pub attained: Attainment,
    pub fd_table: Vec<(T, ExtReal<T>)>,
    pub hypotheses: HypothesisSummary<T>,
    pub notes: Vec<String>,
}

fn margin<T: Scalar>(c: &Result<&StrictFeasibilityCertificate<T>, SensitivityError>) -> (bool, Option<ExtReal<T>>) {
    match c {
        Ok(c) => (c.strictly_feasible, Some(c.t_star)),
        Err(_) => (false, None),
    }
}

const UNATTAINED_NOTE: &str = "a supremum/infimum was reported as not attained; attainment is detected by the iterate-norm heuristic";

impl<T: Scalar> Analyzer<'_, T> {
    pub fn hypothesis_summary(&self) -> HypothesisSummary<T> {
        let (primal_strict, primal) = margin(&self.strict_primal());
        let (dual_strict, dual) = margin(&self.strict_dual());
        HypothesisSummary {
            primal_strict,
            dual_strict,
            margins: Margins { primal, dual },
        }
    }

    fn fd_rows(&self, pert: &Perturbation<T>, t_grid: &[T]) -> Result<Vec<(T, ExtReal<T>)>, SensitivityError> {
        if t_grid.is_empty() {
            return Ok(Vec::new());
        }
        Ok(self.fd_verify(pert, t_grid)?.rows)
    }

    /// Derivative, two-sided slopes, exact polyhedral increment and
    /// difference quotients of `φ` along `d`.
    pub fn rhs_report(&self, d: &[T], t_grid: &[T]) -> Result<SensitivityReport<T>, SensitivityError> {
        let hypotheses = self.hypothesis_summary();
        let derivative = self.phi_dir_deriv(d)?;
        let (upper_slope, upper_attained) = self.dual_support(d, Scope::Feasible)?;
        let polyhedral = self.require_polyhedral().is_ok();
        let (exact_slope, tau) = if polyhedral {
            let ex = self.phi_increment_exact_polyhedral(d)?;
            (Some(ex.slope), ex.tau)
        } else {
            (None, None)
        };
        let pert = Perturbation::rhs(d.to_vec(), T::zero());
        let attained = Attainment {
            lower: true,
            upper: upper_attained,
        };
        Ok(SensitivityReport {
            base_value: self.base_value()?,
            direction: DirectionDoc {
                kind: "rhs",
                vector: d.to_vec(),
            },
            derivative,
            lower_slope: derivative,
            upper_slope,
            exact_slope,
            tau,
            attained,
            fd_table: self.fd_rows(&pert, t_grid)?,
            hypotheses,
            notes: notes(attained),
        })
    }

    /// Derivative, two-sided slopes, exact polyhedral increment and
    /// difference quotients of `ψ` along `h`.
    pub fn obj_report(&self, h: &[T], t_grid: &[T]) -> Result<SensitivityReport<T>, SensitivityError> {
        let hypotheses = self.hypothesis_summary();
        let derivative = self.psi_dir_deriv(h)?;
        let (lower_slope, lower_attained) = self.primal_support(h, Scope::Feasible)?;
        let (upper_slope, upper_attained) = if self.base()?.status == Status::Optimal {
            self.primal_support(h, Scope::Solutions)?
        } else {
            (ExtReal::PlusInf, false)
        };
        let in_range = range_test_residual(self.program, h) <= T::lit(RANGE_TOL);
        let (exact_slope, tau) = if self.require_polyhedral().is_ok() && in_range {
            let ex = self.psi_increment_exact_polyhedral(h)?;
            (Some(ex.slope), ex.tau)
        } else {
            (None, None)
        };
        let pert = Perturbation::objective(h.to_vec(), T::zero());
        let attained = Attainment {
            lower: lower_attained,
            upper: upper_attained,
        };
        let mut notes = notes(attained);
        if !in_range {
            notes.push("h is not in the range of Aᵀ: the derivative is −∞".into());
        }
        Ok(SensitivityReport {
            base_value: self.base_value()?,
            direction: DirectionDoc {
                kind: "objective",
                vector: h.to_vec(),
            },
            derivative,
            lower_slope,
            upper_slope,
            exact_slope,
            tau,
            attained,
            fd_table: self.fd_rows(&pert, t_grid)?,
            hypotheses,
            notes,
        })
    }

    /// Dispatches on the perturbation kind.
    pub fn report(&self, pert: &Perturbation<T>, t_grid: &[T]) -> Result<SensitivityReport<T>, SensitivityError> {
        match &pert.kind {
            PerturbationKind::Rhs(d) => self.rhs_report(d, t_grid),
            PerturbationKind::Objective(h) => self.obj_report(h, t_grid),
        }
    }
}

fn notes(attained: Attainment) -> Vec<String> {
    if attained.lower && attained.upper {
        Vec::new()
    } else {
        vec![UNATTAINED_NOTE.to_string()]
    }
}
