//! Conic linear programs and the sensitivity of their optimal values.
//!
//! For `min cᵀx s.t. Ax − b ∈ K` the optimal value is studied as a function
//! of the right-hand side (`φ(b)`) and of the cost vector (`ψ(c)`):
//! directional derivatives, subgradients, two-sided increment bounds and
//! exact increments for polyhedral cones.
//!
//! Everything is generic over the scalar type through [`Scalar`]; the
//! `*64` / `*32` aliases below fix it to `f64` / `f32`.

pub mod cones;
pub mod extreal;
pub mod io;
pub mod linalg;
pub mod problem;
pub mod scalar;
pub mod sensitivity;
pub mod solver;

pub use cones::{BarrierEval, Cone, ConeBlock, ConeError};
pub use extreal::{ExtReal, IndeterminateForm};
pub use linalg::Matrix;
pub use problem::{ConicProgram, Lowered, Perturbation, PerturbationKind, ProblemError, ProgramForm};
pub use scalar::Scalar;
pub use sensitivity::{SensitivityError, SensitivityReport};
pub use solver::{
    LevelSide, Scope, Sense, Settings, Side, Solution, SolverError, Status, StrictFeasibilityCertificate,
};

pub type Matrix64 = Matrix<f64>;
pub type Cone64 = Cone<f64>;
pub type ConicProgram64 = ConicProgram<f64>;
pub type Solution64 = Solution<f64>;
pub type Settings64 = Settings<f64>;
pub type SensitivityReport64 = SensitivityReport<f64>;

pub type Matrix32 = Matrix<f32>;
pub type Cone32 = Cone<f32>;
pub type ConicProgram32 = ConicProgram<f32>;
pub type Solution32 = Solution<f32>;
pub type Settings32 = Settings<f32>;
pub type SensitivityReport32 = SensitivityReport<f32>;
