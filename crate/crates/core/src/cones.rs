//! Closed convex cones: representation, duality, membership and barriers.
//!
//! A [`Cone`] is a finite product of blocks. Each block is one of
//!
//! * `Orthant(d)`: `ℝ^d₊`;
//! * `SecondOrder(d)`: `{y : y_d ≥ ‖(y_1, …, y_{d−1})‖₂}` (head is the last
//!   coordinate);
//! * `PolyhedralH(B)`: `{y : B y ≥ 0}`;
//! * `GeneratedV(G)`: `{G λ : λ ≥ 0}`.
//!
//! The dual of `PolyhedralH(B)` is `GeneratedV(Bᵀ)` and vice versa; the
//! orthant and the second-order cone are self-dual.

use thiserror::Error;

use crate::linalg::{self, dot, norm2, Matrix};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum ConeBlock<T> {
    Orthant { dim: usize },
    SecondOrder { dim: usize },
    PolyhedralH { b: Matrix<T> },
    GeneratedV { g: Matrix<T> },
}

impl<T: Scalar> ConeBlock<T> {
    pub fn dim(&self) -> usize {
        match self {
            Self::Orthant { dim } | Self::SecondOrder { dim } => *dim,
            Self::PolyhedralH { b } => b.cols(),
            Self::GeneratedV { g } => g.rows(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Orthant { .. } => "orthant",
            Self::SecondOrder { .. } => "soc",
            Self::PolyhedralH { .. } => "polyhedral",
            Self::GeneratedV { .. } => "generated",
        }
    }

    pub fn dual(&self) -> Self {
        match self {
            Self::Orthant { dim } => Self::Orthant { dim: *dim },
            Self::SecondOrder { dim } => Self::SecondOrder { dim: *dim },
            Self::PolyhedralH { b } => Self::GeneratedV { g: b.transpose() },
            Self::GeneratedV { g } => Self::PolyhedralH { b: g.transpose() },
        }
    }

    /// Orthant and second-order blocks, the ones the interior-point solver
    /// and the barrier understand.
    pub fn is_symmetric(&self) -> bool {
        matches!(self, Self::Orthant { .. } | Self::SecondOrder { .. })
    }

    /// Orthant and H-polyhedral blocks.
    pub fn is_polyhedral(&self) -> bool {
        matches!(self, Self::Orthant { .. } | Self::PolyhedralH { .. })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConeError {
    #[error("a cone needs at least one block of positive dimension")]
    Empty,
    #[error("block {block}: {reason}")]
    InvalidBlock { block: usize, reason: String },
    #[error("vector has length {found}, cone dimension is {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("block {block}: interior test needs an H-description of the generated cone")]
    InteriorTestUnsupported { block: usize },
    #[error("block {block}: the cone has empty interior")]
    EmptyInterior { block: usize },
    #[error("block {block}: barrier is only available for orthant and second-order blocks")]
    BarrierUnsupported { block: usize },
    #[error("block {block}: point is not in the interior")]
    NotInterior { block: usize },
    #[error("auxiliary interior-point program failed: {0}")]
    Auxiliary(String),
}

/// Product cone `K = K₁ × … × K_p ⊂ ℝ^m`. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Cone<T> {
    blocks: Vec<ConeBlock<T>>,
    offsets: Vec<usize>,
    dim: usize,
}

/// Value, gradient and Hessian of the logarithmic barrier at a point.
#[derive(Clone, Debug)]
pub struct BarrierEval<T> {
    pub value: T,
    pub grad: Vec<T>,
    pub hess: Matrix<T>,
}

impl<T: Scalar> Cone<T> {
    pub fn new(blocks: Vec<ConeBlock<T>>) -> Result<Self, ConeError> {
        if blocks.is_empty() {
            return Err(ConeError::Empty);
        }
        for (i, blk) in blocks.iter().enumerate() {
            let invalid = |reason: &str| ConeError::InvalidBlock {
                block: i,
                reason: reason.to_string(),
            };
            match blk {
                ConeBlock::Orthant { dim } if *dim == 0 => {
                    return Err(invalid("orthant dimension must be positive"))
                }
                ConeBlock::SecondOrder { dim } if *dim < 2 => {
                    return Err(invalid("second-order cone dimension must be at least 2"))
                }
                ConeBlock::PolyhedralH { b } => {
                    if b.rows() == 0 || b.cols() == 0 {
                        return Err(invalid("polyhedral matrix must be non-empty"));
                    }
                    if !b.is_finite() {
                        return Err(invalid("polyhedral matrix has non-finite entries"));
                    }
                    if let Some(r) = (0..b.rows()).find(|&r| b.row(r).iter().all(|x| *x == T::zero())) {
                        return Err(invalid(&format!("polyhedral matrix row {r} is zero")));
                    }
                }
                ConeBlock::GeneratedV { g } => {
                    if g.rows() == 0 || g.cols() == 0 {
                        return Err(invalid("generator matrix must be non-empty"));
                    }
                    if !g.is_finite() {
                        return Err(invalid("generator matrix has non-finite entries"));
                    }
                    if let Some(c) = (0..g.cols()).find(|&c| g.column(c).iter().all(|x| *x == T::zero())) {
                        return Err(invalid(&format!("generator column {c} is zero")));
                    }
                }
                _ => {}
            }
        }
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut dim = 0;
        for blk in &blocks {
            offsets.push(dim);
            dim += blk.dim();
        }
        Ok(Self { blocks, offsets, dim })
    }

    pub fn orthant(dim: usize) -> Result<Self, ConeError> {
        Self::new(vec![ConeBlock::Orthant { dim }])
    }

    pub fn second_order(dim: usize) -> Result<Self, ConeError> {
        Self::new(vec![ConeBlock::SecondOrder { dim }])
    }

    pub fn polyhedral(b: Matrix<T>) -> Result<Self, ConeError> {
        Self::new(vec![ConeBlock::PolyhedralH { b }])
    }

    pub fn generated(g: Matrix<T>) -> Result<Self, ConeError> {
        Self::new(vec![ConeBlock::GeneratedV { g }])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[ConeBlock<T>] {
        &self.blocks
    }

    /// Iterates over `(block, range of coordinates)`.
    pub fn block_ranges(&self) -> impl Iterator<Item = (&ConeBlock<T>, std::ops::Range<usize>)> {
        self.blocks
            .iter()
            .zip(&self.offsets)
            .map(|(b, &o)| (b, o..o + b.dim()))
    }

    pub fn is_symmetric(&self) -> bool {
        self.blocks.iter().all(ConeBlock::is_symmetric)
    }

    pub fn is_polyhedral(&self) -> bool {
        self.blocks.iter().all(ConeBlock::is_polyhedral)
    }

    /// Dual cone `K* = {v : vᵀy ≥ 0 ∀ y ∈ K}`, blockwise.
    pub fn dual(&self) -> Self {
        Self {
            blocks: self.blocks.iter().map(ConeBlock::dual).collect(),
            offsets: self.offsets.clone(),
            dim: self.dim,
        }
    }

    fn check_len(&self, y: &[T]) -> Result<(), ConeError> {
        if y.len() != self.dim {
            return Err(ConeError::DimensionMismatch {
                expected: self.dim,
                found: y.len(),
            });
        }
        Ok(())
    }

    /// Membership up to slack `tol`.
    ///
    /// Orthant: `min yᵢ ≥ −tol`; second-order: `y_d − ‖ȳ‖ ≥ −tol`;
    /// H-polyhedral: `(By)ᵢ ≥ −tol·(1 + ‖Bᵢ‖·‖y‖)`; generated: the NNLS
    /// residual `min_{λ≥0} ‖Gλ − y‖` is at most `tol·(1 + ‖y‖)`.
    pub fn contains(&self, y: &[T], tol: T) -> Result<bool, ConeError> {
        self.check_len(y)?;
        for (blk, range) in self.block_ranges() {
            let v = &y[range];
            let ok = match blk {
                ConeBlock::Orthant { .. } => v.iter().all(|&x| x >= -tol),
                ConeBlock::SecondOrder { .. } => soc_margin(v) >= -tol,
                ConeBlock::PolyhedralH { b } => {
                    let ny = norm2(v);
                    (0..b.rows()).all(|i| {
                        let row = b.row(i);
                        dot(row, v) >= -tol * (T::one() + norm2(row) * ny)
                    })
                }
                ConeBlock::GeneratedV { g } => {
                    let (_, res) = linalg::nnls(g, v);
                    res <= tol * (T::one() + norm2(v))
                }
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Smallest blockwise strict margin of `y`; positive iff `y ∈ int K`.
    pub fn interior_margin(&self, y: &[T]) -> Result<T, ConeError> {
        self.check_len(y)?;
        let mut margin = T::infinity();
        for (i, (blk, range)) in self.block_ranges().enumerate() {
            let v = &y[range];
            let m = match blk {
                ConeBlock::Orthant { .. } => v.iter().copied().fold(T::infinity(), T::min),
                ConeBlock::SecondOrder { .. } => soc_margin(v),
                ConeBlock::PolyhedralH { b } => min_entry(&b.matvec(v)),
                ConeBlock::GeneratedV { g } => {
                    let facets = generated_facets(g).ok_or(ConeError::InteriorTestUnsupported { block: i })?;
                    min_entry(&facets.matvec(v))
                }
            };
            margin = margin.min(m);
        }
        Ok(margin)
    }

    /// True iff every blockwise strict margin exceeds `margin`.
    pub fn interior_contains(&self, y: &[T], margin: T) -> Result<bool, ConeError> {
        Ok(self.interior_margin(y)? > margin)
    }

    /// Euclidean radius of the largest ball around `y` contained in `K`
    /// (negative when `y ∉ K`).
    pub fn interior_radius(&self, y: &[T]) -> Result<T, ConeError> {
        self.check_len(y)?;
        let mut radius = T::infinity();
        for (i, (blk, range)) in self.block_ranges().enumerate() {
            let v = &y[range];
            let r = match blk {
                ConeBlock::Orthant { .. } => v.iter().copied().fold(T::infinity(), T::min),
                ConeBlock::SecondOrder { .. } => soc_margin(v) / T::lit(2.0).sqrt(),
                ConeBlock::PolyhedralH { b } => facet_distance(b, v),
                ConeBlock::GeneratedV { g } => {
                    let facets = generated_facets(g).ok_or(ConeError::InteriorTestUnsupported { block: i })?;
                    facet_distance(&facets, v)
                }
            };
            radius = radius.min(r);
        }
        Ok(radius)
    }

    /// A point in the interior of `K`: all-ones on orthants, the unit axis
    /// point on second-order cones, and the maximizer of
    /// `{t : By ≥ t·1, ‖y‖∞ ≤ 1}` on H-polyhedral blocks.
    pub fn canonical_interior_point(&self) -> Result<Vec<T>, ConeError> {
        let mut u = Vec::with_capacity(self.dim);
        for (i, blk) in self.blocks.iter().enumerate() {
            match blk {
                ConeBlock::Orthant { dim } => u.extend(std::iter::repeat(T::one()).take(*dim)),
                ConeBlock::SecondOrder { dim } => {
                    u.extend(std::iter::repeat(T::zero()).take(dim - 1));
                    u.push(T::one());
                }
                ConeBlock::PolyhedralH { b } => u.extend(polyhedral_interior_point(b, i)?),
                ConeBlock::GeneratedV { g } => {
                    // λ = 1 gives an interior point whenever the facets are known
                    let facets = generated_facets(g).ok_or(ConeError::InteriorTestUnsupported { block: i })?;
                    let p = g.matvec(&vec![T::one(); g.cols()]);
                    if min_entry(&facets.matvec(&p)) <= T::zero() {
                        return Err(ConeError::EmptyInterior { block: i });
                    }
                    u.extend(p);
                }
            }
        }
        Ok(u)
    }

    /// Logarithmic barrier `−Σ log yᵢ` (orthant) and `−log(y_d² − ‖ȳ‖²)`
    /// (second-order), summed over blocks.
    pub fn barrier(&self, y: &[T]) -> Result<BarrierEval<T>, ConeError> {
        self.check_len(y)?;
        let mut value = T::zero();
        let mut grad = vec![T::zero(); self.dim];
        let mut hess = Matrix::zeros(self.dim, self.dim);
        for (i, (blk, range)) in self.block_ranges().enumerate() {
            let off = range.start;
            let v = &y[range];
            match blk {
                ConeBlock::Orthant { .. } => {
                    for (k, &x) in v.iter().enumerate() {
                        if !(x > T::zero()) {
                            return Err(ConeError::NotInterior { block: i });
                        }
                        value -= x.ln();
                        grad[off + k] = -x.recip();
                        hess[(off + k, off + k)] = (x * x).recip();
                    }
                }
                ConeBlock::SecondOrder { .. } => {
                    let d = v.len();
                    let head = v[d - 1];
                    let rho = head * head - dot(&v[..d - 1], &v[..d - 1]);
                    if !(head > T::zero()) || !(rho > T::zero()) {
                        return Err(ConeError::NotInterior { block: i });
                    }
                    value -= rho.ln();
                    // ρ = yᵀJy with J = diag(−1, …, −1, 1); ∇ρ = 2Jy, ∇²ρ = 2J
                    let jy: Vec<T> = (0..d)
                        .map(|k| if k == d - 1 { v[k] } else { -v[k] })
                        .collect();
                    let two = T::lit(2.0);
                    for k in 0..d {
                        grad[off + k] = -two * jy[k] / rho;
                    }
                    for r in 0..d {
                        for c in 0..d {
                            let j_rc = if r != c {
                                T::zero()
                            } else if r == d - 1 {
                                T::one()
                            } else {
                                -T::one()
                            };
                            hess[(off + r, off + c)] =
                                -two * j_rc / rho + T::lit(4.0) * jy[r] * jy[c] / (rho * rho);
                        }
                    }
                }
                _ => return Err(ConeError::BarrierUnsupported { block: i }),
            }
        }
        Ok(BarrierEval { value, grad, hess })
    }

    pub fn cast<U: Scalar>(&self) -> Cone<U> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| match b {
                ConeBlock::Orthant { dim } => ConeBlock::Orthant { dim: *dim },
                ConeBlock::SecondOrder { dim } => ConeBlock::SecondOrder { dim: *dim },
                ConeBlock::PolyhedralH { b } => ConeBlock::PolyhedralH { b: b.cast() },
                ConeBlock::GeneratedV { g } => ConeBlock::GeneratedV { g: g.cast() },
            })
            .collect();
        Cone {
            blocks,
            offsets: self.offsets.clone(),
            dim: self.dim,
        }
    }
}

/// `y_d − ‖(y_1, …, y_{d−1})‖` for a second-order block.
pub(crate) fn soc_margin<T: Scalar>(v: &[T]) -> T {
    let d = v.len();
    v[d - 1] - norm2(&v[..d - 1])
}

fn min_entry<T: Scalar>(v: &[T]) -> T {
    v.iter().copied().fold(T::infinity(), T::min)
}

fn facet_distance<T: Scalar>(facets: &Matrix<T>, v: &[T]) -> T {
    (0..facets.rows())
        .map(|i| {
            let row = facets.row(i);
            dot(row, v) / norm2(row)
        })
        .fold(T::infinity(), T::min)
}

/// H-description `{y : F y ≥ 0}` of `{Gλ : λ ≥ 0}`, available when `G` is
/// square and nonsingular (`F = G⁻¹`).
fn generated_facets<T: Scalar>(g: &Matrix<T>) -> Option<Matrix<T>> {
    if g.rows() == g.cols() {
        linalg::inverse(g)
    } else {
        None
    }
}

fn polyhedral_interior_point<T: Scalar>(b: &Matrix<T>, block: usize) -> Result<Vec<T>, ConeError> {
    use crate::problem::ConicProgram;
    use crate::solver::{solve, Settings, Status};

    // variables (y, t): B y − t·1 ≥ 0, 1 − y ≥ 0, 1 + y ≥ 0; maximize t
    let (k, d) = (b.rows(), b.cols());
    let rows = k + 2 * d;
    let mut a = Matrix::zeros(rows, d + 1);
    let mut rhs = vec![T::zero(); rows];
    for i in 0..k {
        for j in 0..d {
            a[(i, j)] = b[(i, j)];
        }
        a[(i, d)] = -T::one();
    }
    for j in 0..d {
        a[(k + j, j)] = -T::one();
        rhs[k + j] = -T::one();
        a[(k + d + j, j)] = T::one();
        rhs[k + d + j] = -T::one();
    }
    let mut cost = vec![T::zero(); d + 1];
    cost[d] = -T::one();
    let cone = Cone::orthant(rows)?;
    let aux = ConicProgram::new(a, rhs, cost, cone).map_err(|e| ConeError::Auxiliary(e.to_string()))?;
    let sol = solve(&aux, &Settings::default()).map_err(|e| ConeError::Auxiliary(e.to_string()))?;
    if sol.status != Status::Optimal {
        return Err(ConeError::Auxiliary(format!("status {:?}", sol.status)));
    }
    let x = sol.x_opt.unwrap_or_default();
    let t_star = x[d];
    // t* = 0 exactly when the interior is empty; allow for solver resolution
    if t_star <= T::lit(10.0 * T::DEFAULT_TOL) {
        return Err(ConeError::EmptyInterior { block });
    }
    Ok(x[..d].to_vec())
}
