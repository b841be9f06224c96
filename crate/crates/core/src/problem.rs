//! The primal/dual program pair and the transformations applied to it.
//!
//! A [`ConicProgram`] in primal form is
//!
//! ```text
//!     minimize cᵀx  subject to  A x − b ∈ K        (x ∈ ℝⁿ free)
//! ```
//!
//! and its dual is `maximize bᵀy  subject to  Aᵀy = c, y ∈ K*`.

use thiserror::Error;

use crate::cones::{Cone, ConeBlock, ConeError};
use crate::linalg::{self, dot, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("dimension mismatch: {what} has {found}, expected {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{0} contains non-finite entries")]
    NonFinite(&'static str),
    #[error("block {block} ({kind}) is not polyhedral")]
    NotPolyhedral { block: usize, kind: &'static str },
    #[error("block {block}: generated cones must be dualized before solving")]
    UnsupportedBlock { block: usize },
    #[error("operation needs a {expected}-form program")]
    WrongForm { expected: &'static str },
    #[error("schema error at line {line}, column {column}: {message}")]
    Schema {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Cone(#[from] ConeError),
}

/// Whether the stored data describe `(P)` or the dual `(D)` built from it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProgramForm {
    /// `min cᵀx s.t. Ax − b ∈ K`
    Primal,
    /// `max cᵀy s.t. Ay = b, y ∈ K` (the fields hold `Aᵀ`, the old `c` and
    /// the old `b`, and `K` holds the dual cone)
    Dual,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConicProgram<T> {
    a: Matrix<T>,
    b: Vec<T>,
    c: Vec<T>,
    cone: Cone<T>,
    form: ProgramForm,
}

impl<T: Scalar> ConicProgram<T> {
    /// Primal-form program `min cᵀx s.t. Ax − b ∈ K`.
    pub fn new(a: Matrix<T>, b: Vec<T>, c: Vec<T>, cone: Cone<T>) -> Result<Self, ProblemError> {
        let p = Self {
            a,
            b,
            c,
            cone,
            form: ProgramForm::Primal,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<(), ProblemError> {
        let (rows, cols) = (self.a.rows(), self.a.cols());
        let (b_len, c_len) = match self.form {
            ProgramForm::Primal => (rows, cols),
            ProgramForm::Dual => (rows, cols),
        };
        if self.b.len() != b_len {
            return Err(ProblemError::Dimension {
                what: "b",
                expected: b_len,
                found: self.b.len(),
            });
        }
        if self.c.len() != c_len {
            return Err(ProblemError::Dimension {
                what: "c",
                expected: c_len,
                found: self.c.len(),
            });
        }
        let cone_dim = match self.form {
            ProgramForm::Primal => rows,
            ProgramForm::Dual => cols,
        };
        if self.cone.dim() != cone_dim {
            return Err(ProblemError::Dimension {
                what: "cone",
                expected: cone_dim,
                found: self.cone.dim(),
            });
        }
        if !self.a.is_finite() {
            return Err(ProblemError::NonFinite("A"));
        }
        if !self.b.iter().all(|x| x.is_finite()) {
            return Err(ProblemError::NonFinite("b"));
        }
        if !self.c.iter().all(|x| x.is_finite()) {
            return Err(ProblemError::NonFinite("c"));
        }
        Ok(())
    }

    pub fn a(&self) -> &Matrix<T> {
        &self.a
    }

    pub fn b(&self) -> &[T] {
        &self.b
    }

    pub fn c(&self) -> &[T] {
        &self.c
    }

    pub fn cone(&self) -> &Cone<T> {
        &self.cone
    }

    pub fn form(&self) -> ProgramForm {
        self.form
    }

    /// Number of primal variables `n`.
    pub fn n(&self) -> usize {
        self.a.cols()
    }

    /// Number of conic constraint rows `m`.
    pub fn m(&self) -> usize {
        self.a.rows()
    }

    fn require_primal(&self) -> Result<(), ProblemError> {
        if self.form != ProgramForm::Primal {
            return Err(ProblemError::WrongForm { expected: "primal" });
        }
        Ok(())
    }

    /// Same `A`, `c`, `K` with a new right-hand side.
    pub fn with_b(&self, b: Vec<T>) -> Result<Self, ProblemError> {
        let mut p = self.clone();
        p.b = b;
        p.validate()?;
        Ok(p)
    }

    /// Same `A`, `b`, `K` with a new cost vector.
    pub fn with_c(&self, c: Vec<T>) -> Result<Self, ProblemError> {
        let mut p = self.clone();
        p.c = c;
        p.validate()?;
        Ok(p)
    }

    /// The dual `max bᵀy s.t. Aᵀy = c, y ∈ K*`, stored as
    /// `(Aᵀ, c, b, K*)` with the dual form tag.
    pub fn build_dual(&self) -> Result<Self, ProblemError> {
        self.require_primal()?;
        Ok(Self {
            a: self.a.transpose(),
            b: self.c.clone(),
            c: self.b.clone(),
            cone: self.cone.dual(),
            form: ProgramForm::Dual,
        })
    }

    /// Objective of the program at a point (`cᵀx`, or `bᵀy` read through
    /// the dual-form field layout).
    pub fn objective(&self, point: &[T]) -> T {
        dot(&self.c, point)
    }

    /// Residual measures of a candidate point: for the primal form the
    /// conic slack `Ax − b`, for the dual form the equality residual
    /// `‖Aᵀy − c‖` paired with `y` itself as the conic part.
    pub fn conic_slack(&self, point: &[T]) -> Vec<T> {
        match self.form {
            ProgramForm::Primal => linalg::sub(&self.a.matvec(point), &self.b),
            ProgramForm::Dual => point.to_vec(),
        }
    }

    /// Feasibility test up to `tol` for either form.
    pub fn is_feasible(&self, point: &[T], tol: T) -> Result<bool, ProblemError> {
        match self.form {
            ProgramForm::Primal => Ok(self.cone.contains(&self.conic_slack(point), tol)?),
            ProgramForm::Dual => {
                let eq = linalg::norm2(&linalg::sub(&self.a.matvec(point), &self.b));
                Ok(eq <= tol * (T::one() + linalg::norm2(&self.b)) && self.cone.contains(point, tol)?)
            }
        }
    }

    /// `b + t d` or `c + t h`; `A` and `K` stay as they are.
    pub fn perturb(&self, pert: &Perturbation<T>) -> Result<Self, ProblemError> {
        self.require_primal()?;
        match &pert.kind {
            PerturbationKind::Rhs(d) => {
                check_len("rhs direction", self.m(), d.len())?;
                let mut b = self.b.clone();
                linalg::axpy(pert.step, d, &mut b);
                self.with_b(b)
            }
            PerturbationKind::Objective(h) => {
                check_len("objective direction", self.n(), h.len())?;
                let mut c = self.c.clone();
                linalg::axpy(pert.step, h, &mut c);
                self.with_c(c)
            }
        }
    }

    /// Rewrites every `PolyhedralH(B)` block as `B(Ax − b) ≥ 0` over an
    /// orthant. Fails if any block is second-order or generated.
    pub fn reduce_polyhedral(&self) -> Result<Self, ProblemError> {
        self.require_primal()?;
        if let Some((i, blk)) = self
            .cone
            .blocks()
            .iter()
            .enumerate()
            .find(|(_, b)| !b.is_polyhedral())
        {
            return Err(ProblemError::NotPolyhedral {
                block: i,
                kind: blk.kind(),
            });
        }
        Ok(self.lower()?.program)
    }

    /// Blockwise rewrite into orthant / second-order blocks only, keeping
    /// the maps needed to move vectors between the two constraint spaces.
    pub fn lower(&self) -> Result<Lowered<T>, ProblemError> {
        self.require_primal()?;
        if self.cone.blocks().iter().all(|b| b.is_symmetric()) {
            let dim = self.m();
            return Ok(Lowered {
                program: self.clone(),
                maps: vec![BlockMap {
                    original: 0..dim,
                    lowered: 0..dim,
                    transform: None,
                }],
            });
        }
        let mut rows: Vec<Vec<T>> = Vec::new();
        let mut b_new = Vec::new();
        let mut blocks = Vec::new();
        let mut maps = Vec::new();
        for (i, (blk, range)) in self.cone.block_ranges().enumerate() {
            let start = rows.len();
            match blk {
                ConeBlock::Orthant { .. } | ConeBlock::SecondOrder { .. } => {
                    for r in range.clone() {
                        rows.push(self.a.row(r).to_vec());
                        b_new.push(self.b[r]);
                    }
                    blocks.push(blk.clone());
                    maps.push(BlockMap {
                        original: range.clone(),
                        lowered: start..rows.len(),
                        transform: None,
                    });
                }
                ConeBlock::PolyhedralH { b: bm } => {
                    let a_blk = self.a.select_rows(&range.clone().collect::<Vec<_>>());
                    let ba = bm.matmul(&a_blk);
                    let bb = bm.matvec(&self.b[range.clone()]);
                    rows.extend(ba.to_rows());
                    b_new.extend(bb);
                    blocks.push(ConeBlock::Orthant { dim: bm.rows() });
                    maps.push(BlockMap {
                        original: range.clone(),
                        lowered: start..rows.len(),
                        transform: Some(bm.clone()),
                    });
                }
                ConeBlock::GeneratedV { .. } => return Err(ProblemError::UnsupportedBlock { block: i }),
            }
        }
        let a = Matrix::from_vec(rows.len(), self.n(), rows.into_iter().flatten().collect());
        let program = Self::new(a, b_new, self.c.clone(), Cone::new(blocks)?)?;
        Ok(Lowered { program, maps })
    }

    pub fn cast<U: Scalar>(&self) -> ConicProgram<U> {
        let cv = |v: &[T]| v.iter().map(|x| U::lit(x.to_f64_lossy())).collect::<Vec<U>>();
        ConicProgram {
            a: self.a.cast(),
            b: cv(&self.b),
            c: cv(&self.c),
            cone: self.cone.cast(),
            form: self.form,
        }
    }
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<(), ProblemError> {
    if expected != found {
        return Err(ProblemError::Dimension { what, expected, found });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub enum PerturbationKind<T> {
    /// `b ↦ b + t d`
    Rhs(Vec<T>),
    /// `c ↦ c + t h`
    Objective(Vec<T>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Perturbation<T> {
    pub kind: PerturbationKind<T>,
    pub step: T,
}

impl<T: Scalar> Perturbation<T> {
    pub fn rhs(d: Vec<T>, step: T) -> Self {
        Self {
            kind: PerturbationKind::Rhs(d),
            step,
        }
    }

    pub fn objective(h: Vec<T>, step: T) -> Self {
        Self {
            kind: PerturbationKind::Objective(h),
            step,
        }
    }

    pub fn direction(&self) -> &[T] {
        match &self.kind {
            PerturbationKind::Rhs(d) | PerturbationKind::Objective(d) => d,
        }
    }

    pub fn with_step(&self, step: T) -> Self {
        Self {
            kind: self.kind.clone(),
            step,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct BlockMap<T> {
    original: std::ops::Range<usize>,
    lowered: std::ops::Range<usize>,
    transform: Option<Matrix<T>>,
}

/// A program rewritten over orthant and second-order blocks only.
///
/// An H-polyhedral block `{y : By ≥ 0}` becomes the orthant `ℝᵏ₊` on
/// `B(Ax − b)`; dual multipliers `ȳ ≥ 0` of that block correspond to
/// `y = Bᵀȳ ∈ K*`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lowered<T> {
    pub program: ConicProgram<T>,
    maps: Vec<BlockMap<T>>,
}

impl<T: Scalar> Lowered<T> {
    /// Whether any block was rewritten.
    pub fn is_identity(&self) -> bool {
        self.maps.iter().all(|m| m.transform.is_none())
    }

    /// Maps a vector of the original constraint space (a right-hand side or
    /// a direction `d`) into the lowered one.
    pub fn forward(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.program.m()];
        for map in &self.maps {
            let src = &v[map.original.clone()];
            let dst = &mut out[map.lowered.clone()];
            match &map.transform {
                None => dst.copy_from_slice(src),
                Some(bm) => dst.copy_from_slice(&bm.matvec(src)),
            }
        }
        out
    }

    /// Maps a lowered dual vector `ȳ` to `y` in the original dual space.
    pub fn lift_dual(&self, ybar: &[T]) -> Vec<T> {
        let dim = self.maps.last().map_or(0, |m| m.original.end);
        let mut out = vec![T::zero(); dim];
        for map in &self.maps {
            let src = &ybar[map.lowered.clone()];
            let dst = &mut out[map.original.clone()];
            match &map.transform {
                None => dst.copy_from_slice(src),
                Some(bm) => dst.copy_from_slice(&bm.tr_matvec(src)),
            }
        }
        out
    }
}
