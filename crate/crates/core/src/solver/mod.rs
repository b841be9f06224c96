//! Conic LP solving, level-set optimization over solution sets and
//! strict-feasibility certification.

mod affine;
mod ipm;

use serde::Serialize;
use thiserror::Error;

use crate::cones::{soc_margin, Cone, ConeBlock, ConeError};
use crate::extreal::ExtReal;
use crate::linalg::{dot, norm2, norm_inf, AffineSolutionSet, Matrix};
use crate::problem::{ConicProgram, ProblemError, ProgramForm};
use crate::scalar::Scalar;

use affine::{cone_distance, solve_affine, AffineProgram, Outcome, RANK_TOL};
use ipm::{BlockKind, SolverCone};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("block {block} ({kind}) has no barrier; reduce or lower the program first")]
    BarrierUnsupported { block: usize, kind: &'static str },
    #[error("level-set solve needs an optimal base solution, got {0:?}")]
    BaseNotOptimal(Status),
    #[error("dimension mismatch: {what} has {found}, expected {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("solver failed to converge")]
    NumericalFailure,
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Cone(#[from] ConeError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Settings<T> {
    pub tol_feas: T,
    pub tol_gap: T,
    pub max_iters: usize,
    pub step_fraction: T,
    /// Iterate norm beyond which a converged objective is reported as
    /// not attained.
    pub unattained_norm: T,
    /// Relative slack of the level constraint: `bᵀy ≥ v − eps_level·(1+|v|)`.
    pub eps_level: T,
    /// Smallest certified margin accepted as strict feasibility.
    pub strict_threshold: T,
}

impl<T: Scalar> Default for Settings<T> {
    fn default() -> Self {
        let tol = T::lit(T::DEFAULT_TOL);
        let coarse = T::lit(1e-6_f64.max(10.0 * T::DEFAULT_TOL));
        Self {
            tol_feas: tol,
            tol_gap: tol,
            max_iters: 200,
            step_fraction: T::lit(0.99),
            unattained_norm: T::lit(1e6),
            eps_level: coarse,
            strict_threshold: coarse,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    Optimal,
    PrimalInfeasible,
    Unbounded,
    /// Objective converged while the iterates diverged.
    NearOptimalUnattained,
    NumericalFailure,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct Solution<T> {
    pub status: Status,
    pub value: ExtReal<T>,
    pub x_opt: Option<Vec<T>>,
    pub y_opt: Option<Vec<T>>,
    pub primal_residual: T,
    pub dual_residual: T,
    pub gap: T,
    pub iterations: usize,
    /// `y ∈ K*` with `Aᵀy ≈ 0`, `bᵀy = 1`.
    pub infeasibility_certificate: Option<Vec<T>>,
    /// `A r ∈ K` with `cᵀr < 0`.
    pub unbounded_ray: Option<Vec<T>>,
}

impl<T: Scalar> Solution<T> {
    /// Optimal value reached by a feasible point.
    pub fn attained(&self) -> bool {
        self.status == Status::Optimal
    }

    fn from_outcome(out: Outcome<T>) -> Self {
        let nan = T::nan();
        Self {
            status: out.status,
            value: out.value,
            x_opt: out.x,
            y_opt: out.z,
            primal_residual: nan,
            dual_residual: nan,
            gap: nan,
            iterations: out.iterations,
            infeasibility_certificate: out.certificate,
            unbounded_ray: out.ray,
        }
    }
}

fn solver_cone<T: Scalar>(cone: &Cone<T>) -> Result<SolverCone, SolverError> {
    let mut blocks = Vec::with_capacity(cone.blocks().len());
    for (i, (blk, r)) in cone.block_ranges().enumerate() {
        let kind = match blk {
            ConeBlock::Orthant { .. } => BlockKind::Orthant,
            ConeBlock::SecondOrder { .. } => BlockKind::Soc,
            other => {
                return Err(SolverError::BarrierUnsupported {
                    block: i,
                    kind: other.kind(),
                })
            }
        };
        blocks.push((kind, r));
    }
    Ok(SolverCone { blocks, dim: cone.dim() })
}

fn cone_from_sizes(sizes: &[(BlockKind, usize)]) -> SolverCone {
    let mut blocks = Vec::with_capacity(sizes.len());
    let mut at = 0;
    for &(k, d) in sizes {
        blocks.push((k, at..at + d));
        at += d;
    }
    SolverCone { blocks, dim: at }
}

fn require_primal<T: Scalar>(p: &ConicProgram<T>) -> Result<(), SolverError> {
    if p.form() != ProgramForm::Primal {
        return Err(ProblemError::WrongForm { expected: "primal" }.into());
    }
    Ok(())
}

/// Solves `min cᵀx s.t. Ax − b ∈ K` over orthant and second-order blocks.
pub fn solve<T: Scalar>(p: &ConicProgram<T>, st: &Settings<T>) -> Result<Solution<T>, SolverError> {
    require_primal(p)?;
    let cone = solver_cone(p.cone())?;
    let prog = AffineProgram {
        objective: p.c().to_vec(),
        offset: T::zero(),
        eq: None,
        eq_slack: None,
        a: p.a().clone(),
        b: p.b().to_vec(),
        cone: cone.clone(),
    };
    let mut sol = Solution::from_outcome(solve_affine(&prog, st));
    if let Some(y) = sol.infeasibility_certificate.as_mut() {
        // scale so that bᵀy = 1 exactly
        let by = dot(p.b(), y);
        if by > T::zero() {
            y.iter_mut().for_each(|v| *v /= by);
        }
    }
    if let (Some(x), Some(y)) = (&sol.x_opt, &sol.y_opt) {
        let slack = p.conic_slack(x);
        sol.primal_residual = cone_distance(&cone, &slack) / (T::one() + norm2(p.b()));
        let aty = p.a().tr_matvec(y);
        let dres: Vec<T> = aty.iter().zip(p.c()).map(|(&u, &v)| u - v).collect();
        sol.dual_residual = (norm2(&dres) + cone_distance(&cone, y)) / (T::one() + norm2(p.c()));
        sol.gap = (dot(p.c(), x) - dot(p.b(), y)).abs();
    }
    Ok(sol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LevelSide {
    /// Optimize over `S(D)` (or `F(D)`): dual points.
    OverDualSolutions,
    /// Optimize over `S(P)` (or `F(P)`): primal points.
    OverPrimalSolutions,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sense {
    Max,
    Min,
}

/// Which set a level-set solve ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Scope {
    /// The optimal solution set, through the relaxed level constraint.
    Solutions,
    /// The whole feasible set (no level constraint).
    Feasible,
}

/// Optimizes `wᵀy` over dual or `wᵀx` over primal solutions of `p`.
///
/// `base` must come from [`solve`] on the same program. For the solution
/// sets the level constraint is relaxed by `eps_level·(1+|v|)`; when `base`
/// carries an optimal primal/dual pair the set is first restricted to the
/// face singled out by complementary slackness, which removes the
/// curvature error of the relaxation on second-order blocks. If the
/// restricted program fails, the unrestricted one is solved instead.
///
/// The returned solution holds the optimizer in `y_opt` (dual side) or
/// `x_opt` (primal side); `attained()` tells whether the optimum was
/// reached.
pub fn solve_level_set<T: Scalar>(
    p: &ConicProgram<T>,
    base: &Solution<T>,
    side: LevelSide,
    w: &[T],
    sense: Sense,
    scope: Scope,
    st: &Settings<T>,
) -> Result<Solution<T>, SolverError> {
    require_primal(p)?;
    let expected = match side {
        LevelSide::OverDualSolutions => p.m(),
        LevelSide::OverPrimalSolutions => p.n(),
    };
    if w.len() != expected {
        return Err(SolverError::Dimension {
            what: "objective",
            expected,
            found: w.len(),
        });
    }
    let cone = solver_cone(p.cone())?;
    let level = match scope {
        Scope::Feasible => None,
        Scope::Solutions => {
            let v = match (base.status, base.value) {
                (Status::Optimal | Status::NearOptimalUnattained, ExtReal::Finite(v)) => v,
                (s, _) => return Err(SolverError::BaseNotOptimal(s)),
            };
            Some((v, st.eps_level * (T::one() + v.abs())))
        }
    };
    let pair = match (scope, base.status, &base.x_opt, &base.y_opt) {
        (Scope::Solutions, Status::Optimal, Some(x), Some(y)) => Some((p.conic_slack(x), y.clone())),
        _ => None,
    };
    let build = |face: Option<(&(Vec<T>, Vec<T>), RaySource)>| match side {
        LevelSide::OverDualSolutions => dual_level_program(p, &cone, w, sense, level, face),
        LevelSide::OverPrimalSolutions => primal_level_program(p, &cone, w, sense, level, face),
    };

    let mut result = None;
    if let Some(face) = &pair {
        // both ray estimates; the more consistent restriction goes first
        let mut candidates: Vec<_> = [RaySource::Other, RaySource::Own]
            .into_iter()
            .filter_map(|src| build(Some((face, src))))
            .map(|(prog, lift)| {
                let res = prog
                    .eq
                    .as_ref()
                    .map_or(T::zero(), |(e, f)| AffineSolutionSet::new(e, f, T::lit(RANK_TOL)).residual);
                (res, prog, lift)
            })
            .collect();
        candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        for (_, prog, lift) in candidates {
            let out = solve_affine(&prog, st);
            if matches!(
                out.status,
                Status::Optimal | Status::Unbounded | Status::NearOptimalUnattained
            ) {
                result = Some((out, lift));
                break;
            }
        }
    }
    let (out, lift) = match result {
        Some(r) => r,
        None => {
            let (prog, lift) = build(None).expect("unrestricted level program always builds");
            (solve_affine(&prog, st), lift)
        }
    };
    Ok(level_solution(out, lift, side, sense))
}

/// Maps the variables of a level program back to `x` or `y`.
type Lift<T> = Matrix<T>;

fn level_solution<T: Scalar>(out: Outcome<T>, lift: Lift<T>, side: LevelSide, sense: Sense) -> Solution<T> {
    // level programs are minimizations; Max flips the sign
    let value = match (out.status, sense) {
        (Status::PrimalInfeasible, Sense::Max) => ExtReal::MinusInf,
        (Status::PrimalInfeasible, Sense::Min) => ExtReal::PlusInf,
        (Status::Unbounded, Sense::Max) => ExtReal::PlusInf,
        (Status::Unbounded, Sense::Min) => ExtReal::MinusInf,
        (_, Sense::Max) => out.value.neg(),
        (_, Sense::Min) => out.value,
    };
    let point = out.x.as_ref().map(|u| lift.matvec(u));
    let (x_opt, y_opt) = match side {
        LevelSide::OverDualSolutions => (None, point),
        LevelSide::OverPrimalSolutions => (point, None),
    };
    Solution {
        status: out.status,
        value,
        x_opt,
        y_opt,
        primal_residual: T::nan(),
        dual_residual: T::nan(),
        gap: T::nan(),
        iterations: out.iterations,
        infeasibility_certificate: None,
        unbounded_ray: out.ray.map(|r| lift.matvec(&r)),
    }
}

fn signed<T: Scalar>(w: &[T], sense: Sense) -> Vec<T> {
    match sense {
        Sense::Min => w.to_vec(),
        Sense::Max => w.iter().map(|&v| -v).collect(),
    }
}

/// How a block of one side is constrained, given the complementary point of
/// the other side.
#[derive(Clone, Debug)]
enum FaceKind<T> {
    /// No restriction.
    Full,
    /// The block vanishes.
    Zero,
    /// The block lies on the ray spanned by the given unit vector.
    Ray(Vec<T>),
}

/// Which optimum a second-order ray is read from: the complementary point
/// (reflected) or the block's own point.
#[derive(Clone, Copy, Debug)]
enum RaySource {
    Other,
    Own,
}

/// Complementary face of `K` for a block of one side, from the other
/// side's block `other` (and this side's own block `own`, used to detect
/// missing strict complementarity).
fn complementary_face<T: Scalar>(
    kind: BlockKind,
    other: &[T],
    own: &[T],
    scale: T,
    src: RaySource,
) -> Vec<FaceKind<T>> {
    let thr = T::lit(1e-6) * scale;
    match kind {
        BlockKind::Orthant => other
            .iter()
            .zip(own)
            .map(|(&o, &s)| {
                if o > thr && o > T::lit(100.0) * s.abs() {
                    FaceKind::Zero
                } else {
                    FaceKind::Full
                }
            })
            .collect(),
        BlockKind::Soc => {
            let margin = soc_margin(other);
            let on = norm2(other);
            let face = if margin > thr && margin > T::lit(100.0) * norm2(own) {
                FaceKind::Zero
            } else if matches!(src, RaySource::Own) && norm2(own) > T::lit(1e-3) * scale {
                let n = norm2(own);
                FaceKind::Ray(own.iter().map(|&v| v / n).collect())
            } else if on > T::lit(1e-3) * scale {
                // ⟨u, v⟩ = 0 with v on the boundary: u ∥ (−v̄, v₀)
                let h = other.len() - 1;
                let mut r: Vec<T> = other[..h].iter().map(|&v| -v).collect();
                r.push(other[h]);
                let nr = norm2(&r);
                FaceKind::Ray(r.into_iter().map(|v| v / nr).collect())
            } else {
                FaceKind::Full
            };
            vec![face]
        }
    }
}

/// Residual accepted in the equalities of a face-restricted program: the
/// face comes from a numerical optimum, so the restricted system is only
/// consistent up to the face threshold.
fn face_slack<T: Scalar>((s, y): &(Vec<T>, Vec<T>), f: &[T]) -> T {
    T::lit(1e-6) * (T::one() + norm_inf(s).max(norm_inf(y)) + norm2(f))
}

/// Dual level program over `y = R z`:
/// `min ±wᵀRz s.t. AᵀRz = c, z ∈ K_z, bᵀRz ≥ v − ε`.
fn dual_level_program<T: Scalar>(
    p: &ConicProgram<T>,
    cone: &SolverCone,
    w: &[T],
    sense: Sense,
    level: Option<(T, T)>,
    face: Option<(&(Vec<T>, Vec<T>), RaySource)>,
) -> Option<(AffineProgram<T>, Lift<T>)> {
    let m = p.m();
    // columns of R and the cone blocks of z
    let mut cols: Vec<Vec<T>> = Vec::new();
    let mut sizes: Vec<(BlockKind, usize)> = Vec::new();
    let push_unit = |cols: &mut Vec<Vec<T>>, i: usize| {
        let mut e = vec![T::zero(); m];
        e[i] = T::one();
        cols.push(e);
    };
    for (kind, r) in &cone.blocks {
        let faces = match face {
            None => match kind {
                BlockKind::Orthant => vec![FaceKind::Full; r.len()],
                BlockKind::Soc => vec![FaceKind::Full],
            },
            Some(((s, y), src)) => {
                let scale = T::one() + norm_inf(s).max(norm_inf(y));
                complementary_face(*kind, &s[r.clone()], &y[r.clone()], scale, src)
            }
        };
        match kind {
            BlockKind::Orthant => {
                for (i, f) in r.clone().zip(&faces) {
                    if matches!(f, FaceKind::Full) {
                        push_unit(&mut cols, i);
                        sizes.push((BlockKind::Orthant, 1));
                    }
                }
            }
            BlockKind::Soc => match &faces[0] {
                FaceKind::Zero => {}
                FaceKind::Ray(u) => {
                    let mut col = vec![T::zero(); m];
                    col[r.clone()].copy_from_slice(u);
                    cols.push(col);
                    sizes.push((BlockKind::Orthant, 1));
                }
                FaceKind::Full => {
                    for i in r.clone() {
                        push_unit(&mut cols, i);
                    }
                    sizes.push((BlockKind::Soc, r.len()));
                }
            },
        }
    }
    let k = cols.len();
    if k == 0 {
        return None;
    }
    let rmat = Matrix::from_fn(m, k, |i, j| cols[j][i]);
    let objective = rmat.tr_matvec(&signed(w, sense));
    let eq = (p.a().transpose().matmul(&rmat), p.c().to_vec());
    let eq_slack = face.map(|(f, _)| face_slack(f, p.c()));
    let mut a = Matrix::identity(k);
    let mut b = vec![T::zero(); k];
    if let Some((v, eps)) = level {
        a.push_row(&rmat.tr_matvec(p.b()));
        b.push(v - eps);
        sizes.push((BlockKind::Orthant, 1));
    }
    let prog = AffineProgram {
        objective,
        offset: T::zero(),
        eq: Some(eq),
        eq_slack,
        a,
        b,
        cone: cone_from_sizes(&sizes),
    };
    Some((prog, rmat))
}

/// Primal level program over `(x, β)`:
/// `min ±wᵀx s.t. Ax − b ∈ K` restricted to the face complementary to the
/// dual optimum, and `cᵀx ≤ v + ε`.
fn primal_level_program<T: Scalar>(
    p: &ConicProgram<T>,
    cone: &SolverCone,
    w: &[T],
    sense: Sense,
    level: Option<(T, T)>,
    face: Option<(&(Vec<T>, Vec<T>), RaySource)>,
) -> Option<(AffineProgram<T>, Lift<T>)> {
    let n = p.n();
    let (a0, b0) = (p.a(), p.b());
    // rays first, to know the number of β variables
    let mut faces: Vec<(BlockKind, std::ops::Range<usize>, Vec<FaceKind<T>>)> = Vec::new();
    for (kind, r) in &cone.blocks {
        let f = match face {
            None => match kind {
                BlockKind::Orthant => vec![FaceKind::Full; r.len()],
                BlockKind::Soc => vec![FaceKind::Full],
            },
            Some(((s, y), src)) => {
                let scale = T::one() + norm_inf(s).max(norm_inf(y));
                complementary_face(*kind, &y[r.clone()], &s[r.clone()], scale, src)
            }
        };
        faces.push((*kind, r.clone(), f));
    }
    let n_beta = faces
        .iter()
        .flat_map(|(_, _, f)| f.iter())
        .filter(|f| matches!(f, FaceKind::Ray(_)))
        .count();
    let nv = n + n_beta;
    let widen = |row: &[T]| {
        let mut v = row.to_vec();
        v.resize(nv, T::zero());
        v
    };

    let mut eq_rows: Vec<Vec<T>> = Vec::new();
    let mut eq_rhs = Vec::new();
    let mut cone_rows: Vec<Vec<T>> = Vec::new();
    let mut cone_rhs = Vec::new();
    let mut sizes = Vec::new();
    let mut beta = n;
    for (kind, r, f) in &faces {
        match kind {
            BlockKind::Orthant => {
                for (i, fi) in r.clone().zip(f) {
                    match fi {
                        FaceKind::Zero => {
                            eq_rows.push(widen(a0.row(i)));
                            eq_rhs.push(b0[i]);
                        }
                        _ => {
                            cone_rows.push(widen(a0.row(i)));
                            cone_rhs.push(b0[i]);
                            sizes.push((BlockKind::Orthant, 1));
                        }
                    }
                }
            }
            BlockKind::Soc => match &f[0] {
                FaceKind::Zero => {
                    for i in r.clone() {
                        eq_rows.push(widen(a0.row(i)));
                        eq_rhs.push(b0[i]);
                    }
                }
                FaceKind::Ray(u) => {
                    // A_blk x − b_blk = β u, β ≥ 0
                    for (k, i) in r.clone().enumerate() {
                        let mut row = widen(a0.row(i));
                        row[beta] = -u[k];
                        eq_rows.push(row);
                        eq_rhs.push(b0[i]);
                    }
                    let mut row = vec![T::zero(); nv];
                    row[beta] = T::one();
                    cone_rows.push(row);
                    cone_rhs.push(T::zero());
                    sizes.push((BlockKind::Orthant, 1));
                    beta += 1;
                }
                FaceKind::Full => {
                    for i in r.clone() {
                        cone_rows.push(widen(a0.row(i)));
                        cone_rhs.push(b0[i]);
                    }
                    sizes.push((BlockKind::Soc, r.len()));
                }
            },
        }
    }
    if let Some((v, eps)) = level {
        cone_rows.push(widen(&p.c().iter().map(|&ci| -ci).collect::<Vec<_>>()));
        cone_rhs.push(-(v + eps));
        sizes.push((BlockKind::Orthant, 1));
    }
    let eq_slack = face.map(|(f, _)| face_slack(f, &eq_rhs));
    let eq = (!eq_rows.is_empty()).then(|| {
        let rows = eq_rows.len();
        (Matrix::from_vec(rows, nv, eq_rows.concat()), eq_rhs)
    });
    let a = Matrix::from_vec(cone_rows.len(), nv, cone_rows.concat());
    let prog = AffineProgram {
        objective: widen(&signed(w, sense)),
        offset: T::zero(),
        eq,
        eq_slack,
        a,
        b: cone_rhs,
        cone: cone_from_sizes(&sizes),
    };
    let lift = Matrix::from_fn(n, nv, |i, j| if i == j { T::one() } else { T::zero() });
    Some((prog, lift))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    Primal,
    Dual,
}

/// Outcome of `max t` over the interior-shifted feasible set.
///
/// Primal: `A·witness − b − t_star·u ∈ K`. Dual: `Aᵀ·witness = c` and
/// `witness − t_star·u ∈ K*`. `t_star = −∞` when the set is empty.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct StrictFeasibilityCertificate<T> {
    pub side: Side,
    pub t_star: ExtReal<T>,
    pub witness: Option<Vec<T>>,
    pub interior_direction: Vec<T>,
    pub strictly_feasible: bool,
}

fn certificate<T: Scalar>(
    side: Side,
    out: Outcome<T>,
    dim: usize,
    u: Vec<T>,
    st: &Settings<T>,
    lift: impl Fn(&[T]) -> Vec<T>,
) -> Result<StrictFeasibilityCertificate<T>, SolverError> {
    match out.status {
        Status::Optimal | Status::NearOptimalUnattained => {
            let x = out.x.expect("optimal outcome carries a point");
            let t = x[dim];
            Ok(StrictFeasibilityCertificate {
                side,
                t_star: ExtReal::Finite(t),
                witness: Some(lift(&x[..dim])),
                interior_direction: u,
                strictly_feasible: t >= st.strict_threshold,
            })
        }
        Status::PrimalInfeasible => Ok(StrictFeasibilityCertificate {
            side,
            t_star: ExtReal::MinusInf,
            witness: None,
            interior_direction: u,
            strictly_feasible: false,
        }),
        // t ≤ 1 rules out unboundedness
        Status::Unbounded | Status::NumericalFailure => Err(SolverError::NumericalFailure),
    }
}

/// Certifies `Ax⁰ − b ∈ int K` by solving `max t s.t. Ax − b − t·u ∈ K,
/// t ≤ 1` with `u` the canonical interior point of `K`.
pub fn certify_strict_primal<T: Scalar>(
    p: &ConicProgram<T>,
    st: &Settings<T>,
) -> Result<StrictFeasibilityCertificate<T>, SolverError> {
    require_primal(p)?;
    let u = p.cone().canonical_interior_point()?;
    let low = p.lower()?;
    let lp = &low.program;
    let ubar = low.forward(&u);
    let (m, n) = (lp.m(), lp.n());
    let mut a = Matrix::zeros(m + 1, n + 1);
    for i in 0..m {
        a.row_mut(i)[..n].copy_from_slice(lp.a().row(i));
        a[(i, n)] = -ubar[i];
    }
    a[(m, n)] = -T::one();
    let mut b = lp.b().to_vec();
    b.push(-T::one());
    let mut sizes: Vec<(BlockKind, usize)> = solver_cone(lp.cone())?
        .blocks
        .iter()
        .map(|(k, r)| (*k, r.len()))
        .collect();
    sizes.push((BlockKind::Orthant, 1));
    let mut objective = vec![T::zero(); n + 1];
    objective[n] = -T::one();
    let prog = AffineProgram {
        objective,
        offset: T::zero(),
        eq: None,
        eq_slack: None,
        a,
        b,
        cone: cone_from_sizes(&sizes),
    };
    let out = solve_affine(&prog, st);
    certificate(Side::Primal, out, n, u, st, |x| x.to_vec())
}

/// Certifies `Aᵀy⁰ = c, y⁰ ∈ int K*` by solving `max t s.t. Aᵀy = c,
/// y − t·u* ∈ K*, t ≤ 1`.
///
/// H-polyhedral blocks are handled through the lowered program, where the
/// dual multipliers live in an orthant; the reported witness and direction
/// are mapped back to `K* = Bᵀ(ℝᵏ₊)`.
pub fn certify_strict_dual<T: Scalar>(
    p: &ConicProgram<T>,
    st: &Settings<T>,
) -> Result<StrictFeasibilityCertificate<T>, SolverError> {
    require_primal(p)?;
    let low = p.lower()?;
    let lp = &low.program;
    let ubar = lp.cone().canonical_interior_point()?;
    let (m, n) = (lp.m(), lp.n());
    // y − t·ū ∈ K̄ (self-dual), −t ≥ −1
    let mut a = Matrix::zeros(m + 1, m + 1);
    for i in 0..m {
        a[(i, i)] = T::one();
        a[(i, m)] = -ubar[i];
    }
    a[(m, m)] = -T::one();
    let mut b = vec![T::zero(); m];
    b.push(-T::one());
    let mut eq_a = Matrix::zeros(n, m + 1);
    let at = lp.a().transpose();
    for i in 0..n {
        eq_a.row_mut(i)[..m].copy_from_slice(at.row(i));
    }
    let mut sizes: Vec<(BlockKind, usize)> = solver_cone(lp.cone())?
        .blocks
        .iter()
        .map(|(k, r)| (*k, r.len()))
        .collect();
    sizes.push((BlockKind::Orthant, 1));
    let mut objective = vec![T::zero(); m + 1];
    objective[m] = -T::one();
    let prog = AffineProgram {
        objective,
        offset: T::zero(),
        eq: Some((eq_a, lp.c().to_vec())),
        eq_slack: None,
        a,
        b,
        cone: cone_from_sizes(&sizes),
    };
    let out = solve_affine(&prog, st);
    let u = low.lift_dual(&ubar);
    certificate(Side::Dual, out, m, u, st, |y| low.lift_dual(y))
}
