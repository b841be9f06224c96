//! Homogeneous self-dual embedding, primal-dual path following.
//!
//! Solves `min cᵀx s.t. Ax − b = s ∈ K` over orthant and second-order
//! blocks, with `A` of full column rank. The embedding
//!
//! ```text
//!   cτ − Aᵀz = 0,   s = Ax − bτ,   κ = bᵀz − cᵀx,   s, z ∈ K,  τ, κ ≥ 0
//! ```
//!
//! is followed with Mehrotra predictor–corrector steps under
//! Nesterov–Todd scaling. A strictly positive limit of `τ` gives an optimal
//! pair, a positive `κ` gives an infeasibility or unboundedness
//! certificate.

use crate::linalg::{axpy, dot, norm2, Cholesky, Matrix, PivotedQr};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum BlockKind {
    Orthant,
    Soc,
}

#[derive(Clone, Debug)]
pub(crate) struct SolverCone {
    pub blocks: Vec<(BlockKind, std::ops::Range<usize>)>,
    pub dim: usize,
}

impl SolverCone {
    pub fn degree(&self) -> usize {
        self.blocks
            .iter()
            .map(|(k, r)| match k {
                BlockKind::Orthant => r.len(),
                BlockKind::Soc => 1,
            })
            .sum()
    }

    /// Jordan identity `e`.
    pub fn identity<T: Scalar>(&self) -> Vec<T> {
        let mut e = vec![T::zero(); self.dim];
        for (k, r) in &self.blocks {
            match k {
                BlockKind::Orthant => e[r.clone()].iter_mut().for_each(|x| *x = T::one()),
                BlockKind::Soc => e[r.end - 1] = T::one(),
            }
        }
        e
    }

    /// Jordan product `u ∘ v`.
    pub fn jordan<T: Scalar>(&self, u: &[T], v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        for (k, r) in &self.blocks {
            let (u, v, o) = (&u[r.clone()], &v[r.clone()], &mut out[r.clone()]);
            match k {
                BlockKind::Orthant => {
                    for i in 0..u.len() {
                        o[i] = u[i] * v[i];
                    }
                }
                BlockKind::Soc => {
                    let h = u.len() - 1;
                    o[h] = dot(u, v);
                    for i in 0..h {
                        o[i] = u[h] * v[i] + v[h] * u[i];
                    }
                }
            }
        }
        out
    }

    /// Solves `λ ∘ u = ξ` for `u`.
    pub fn jordan_div<T: Scalar>(&self, lam: &[T], xi: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        for (k, r) in &self.blocks {
            let (l, x, o) = (&lam[r.clone()], &xi[r.clone()], &mut out[r.clone()]);
            match k {
                BlockKind::Orthant => {
                    for i in 0..l.len() {
                        o[i] = x[i] / l[i];
                    }
                }
                BlockKind::Soc => {
                    let h = l.len() - 1;
                    let rho = l[h] * l[h] - dot(&l[..h], &l[..h]);
                    let u0 = (l[h] * x[h] - dot(&l[..h], &x[..h])) / rho;
                    o[h] = u0;
                    for i in 0..h {
                        o[i] = (x[i] - u0 * l[i]) / l[h];
                    }
                }
            }
        }
        out
    }

    /// Largest `α ≥ 0` (capped at `cap`) keeping `v + α dv` in the cone.
    pub fn max_step<T: Scalar>(&self, v: &[T], dv: &[T], cap: T) -> T {
        let mut alpha = cap;
        for (k, r) in &self.blocks {
            let (v, d) = (&v[r.clone()], &dv[r.clone()]);
            match k {
                BlockKind::Orthant => {
                    for i in 0..v.len() {
                        if d[i] < T::zero() {
                            alpha = alpha.min(-v[i] / d[i]);
                        }
                    }
                }
                BlockKind::Soc => alpha = alpha.min(soc_step(v, d, cap)),
            }
        }
        alpha
    }
}

/// Largest step inside a second-order block (head last).
fn soc_step<T: Scalar>(v: &[T], d: &[T], cap: T) -> T {
    let h = v.len() - 1;
    // f(α) = (v_h + α d_h)² − ‖v̄ + α d̄‖² = a α² + 2 b α + c
    let a = d[h] * d[h] - dot(&d[..h], &d[..h]);
    let b = v[h] * d[h] - dot(&v[..h], &d[..h]);
    let c = v[h] * v[h] - dot(&v[..h], &v[..h]);
    let mut best = cap;
    let mut consider = |root: T| {
        if root > T::zero() && root < best {
            best = root;
        }
    };
    if a.abs() <= T::epsilon() * (d[h] * d[h]).max(T::min_positive_value()) {
        if b < T::zero() {
            consider(-c / (T::lit(2.0) * b));
        }
    } else {
        let disc = b * b - a * c;
        if disc >= T::zero() {
            let sq = disc.sqrt();
            // stable pair of roots of a α² + 2bα + c
            let q = -(b + b.signum() * sq);
            if q != T::zero() {
                consider(c / q);
            }
            consider(q / a);
        }
    }
    // the head must stay nonnegative as well
    if d[h] < T::zero() {
        consider(-v[h] / d[h]);
    }
    best
}

/// Nesterov–Todd scaling `W` with `W z = W⁻¹ s = λ`, blockwise.
#[derive(Clone, Debug)]
enum BlockScaling<T> {
    Orthant(Vec<T>),
    Soc { eta: T, wbar: Vec<T> },
}

#[derive(Clone, Debug)]
pub(crate) struct Scaling<T> {
    blocks: Vec<(BlockScaling<T>, std::ops::Range<usize>)>,
    pub lambda: Vec<T>,
}

impl<T: Scalar> Scaling<T> {
    pub fn new(cone: &SolverCone, s: &[T], z: &[T]) -> Self {
        let mut blocks = Vec::with_capacity(cone.blocks.len());
        for (k, r) in &cone.blocks {
            let (s, z) = (&s[r.clone()], &z[r.clone()]);
            let scal = match k {
                BlockKind::Orthant => BlockScaling::Orthant(s.iter().zip(z).map(|(&a, &b)| (a / b).sqrt()).collect()),
                BlockKind::Soc => {
                    let h = s.len() - 1;
                    let sres = (s[h] - norm2(&s[..h])) * (s[h] + norm2(&s[..h]));
                    let zres = (z[h] - norm2(&z[..h])) * (z[h] + norm2(&z[..h]));
                    let (sn, zn) = (sres.sqrt(), zres.sqrt());
                    let sbar: Vec<T> = s.iter().map(|&x| x / sn).collect();
                    let zbar: Vec<T> = z.iter().map(|&x| x / zn).collect();
                    let gamma = ((T::one() + dot(&sbar, &zbar)) / T::lit(2.0)).sqrt();
                    let mut wbar = vec![T::zero(); s.len()];
                    for i in 0..h {
                        wbar[i] = (sbar[i] - zbar[i]) / (T::lit(2.0) * gamma);
                    }
                    wbar[h] = (sbar[h] + zbar[h]) / (T::lit(2.0) * gamma);
                    BlockScaling::Soc {
                        eta: (sn / zn).sqrt(),
                        wbar,
                    }
                }
            };
            blocks.push((scal, r.clone()));
        }
        let mut out = Self {
            blocks,
            lambda: Vec::new(),
        };
        out.lambda = out.apply(z, false);
        out
    }

    /// `W v` (or `W⁻¹ v` when `inverse`).
    pub fn apply(&self, v: &[T], inverse: bool) -> Vec<T> {
        let mut out = vec![T::zero(); v.len()];
        for (scal, r) in &self.blocks {
            let (v, o) = (&v[r.clone()], &mut out[r.clone()]);
            match scal {
                BlockScaling::Orthant(w) => {
                    for i in 0..v.len() {
                        o[i] = if inverse { v[i] / w[i] } else { v[i] * w[i] };
                    }
                }
                BlockScaling::Soc { eta, wbar } => {
                    let h = v.len() - 1;
                    let (w0, w1) = (wbar[h], &wbar[..h]);
                    let (v0, v1) = (v[h], &v[..h]);
                    let w1v1 = dot(w1, v1);
                    let sign = if inverse { -T::one() } else { T::one() };
                    let factor = if inverse { eta.recip() } else { *eta };
                    o[h] = factor * (w0 * v0 + sign * w1v1);
                    let coef = sign * v0 + w1v1 / (T::one() + w0);
                    for i in 0..h {
                        o[i] = factor * (v1[i] + coef * w1[i]);
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum CoreStatus {
    Optimal,
    /// `bᵀz > 0`, `Aᵀz ≈ 0`: certificate of primal infeasibility.
    PrimalInfeasible,
    /// `cᵀx < 0`, `Ax ∈ K`: improving ray (dual infeasibility).
    DualInfeasible,
    /// Iteration limit or loss of progress.
    Stopped,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct CoreSettings<T> {
    pub tol_feas: T,
    pub tol_gap: T,
    pub max_iters: usize,
    pub step_fraction: T,
    pub unattained_norm: T,
}

#[derive(Clone, Debug)]
pub(crate) struct CoreResult<T> {
    pub status: CoreStatus,
    pub x: Vec<T>,
    pub z: Vec<T>,
    pub tau: T,
    pub iterations: usize,
    /// Relative residuals of the normalized iterate.
    pub pres: T,
    pub dres: T,
    pub gap: T,
    /// Set when the iterates diverge while the objective values settle.
    pub unattained: bool,
}

struct Residuals<T> {
    pres: T,
    dres: T,
    pcost: T,
    dcost: T,
    gap: T,
}

fn residuals<T: Scalar>(
    a: &Matrix<T>,
    b: &[T],
    c: &[T],
    x: &[T],
    s: &[T],
    z: &[T],
    tau: T,
) -> (Vec<T>, Vec<T>, Residuals<T>) {
    // r1 = cτ − Aᵀz, r2 = s − Ax + bτ
    let mut r1: Vec<T> = a.tr_matvec(z).iter().map(|&v| -v).collect();
    axpy(tau, c, &mut r1);
    let ax = a.matvec(x);
    let mut r2: Vec<T> = s.iter().zip(&ax).map(|(&si, &ai)| si - ai).collect();
    axpy(tau, b, &mut r2);
    let pcost = dot(c, x) / tau;
    let dcost = dot(b, z) / tau;
    let res = Residuals {
        pres: norm2(&r2) / tau / (T::one() + norm2(b)),
        dres: norm2(&r1) / tau / (T::one() + norm2(c)),
        pcost,
        dcost,
        gap: (pcost - dcost).abs(),
    };
    (r1, r2, res)
}

const REFINE_STEPS: usize = 2;

/// Solves `ÂᵀÂ v = r` from a QR factorization of `Â` (never forming the
/// product), with a regularized Cholesky fallback for rank-deficient `Â`.
enum NormalSolver<T> {
    Qr { r: Matrix<T>, perm: Vec<usize> },
    Chol(Cholesky<T>),
}

impl<T: Scalar> NormalSolver<T> {
    fn new(ahat: &Matrix<T>) -> Option<Self> {
        let n = ahat.cols();
        let qr = PivotedQr::new(ahat, T::epsilon() * T::lit(16.0));
        if qr.rank() == n {
            return Some(Self::Qr {
                r: qr.r().clone(),
                perm: qr.permutation().to_vec(),
            });
        }
        Cholesky::regularized(&ahat.gram()).map(Self::Chol)
    }

    fn solve(&self, rhs: &[T]) -> Vec<T> {
        match self {
            Self::Chol(c) => c.solve(rhs),
            Self::Qr { r, perm } => {
                let n = perm.len();
                // Rᵀ u = Pᵀ rhs, then R w = u, dx = P w
                let mut u: Vec<T> = perm.iter().map(|&p| rhs[p]).collect();
                for i in 0..n {
                    let mut s = u[i];
                    for k in 0..i {
                        s -= r[(k, i)] * u[k];
                    }
                    u[i] = s / r[(i, i)];
                }
                for i in (0..n).rev() {
                    let mut s = u[i];
                    for k in i + 1..n {
                        s -= r[(i, k)] * u[k];
                    }
                    u[i] = s / r[(i, i)];
                }
                let mut out = vec![T::zero(); n];
                for (k, &p) in perm.iter().enumerate() {
                    out[p] = u[k];
                }
                out
            }
        }
    }
}

pub(crate) fn solve_hsde<T: Scalar>(
    a: &Matrix<T>,
    b: &[T],
    c: &[T],
    cone: &SolverCone,
    st: &CoreSettings<T>,
) -> CoreResult<T> {
    let (m, n) = (a.rows(), a.cols());
    let nu = T::lit(cone.degree() as f64);
    let mut x = vec![T::zero(); n];
    let mut s = cone.identity::<T>();
    let mut z = cone.identity::<T>();
    let (mut tau, mut kappa) = (T::one(), T::one());

    let finish = |status, x: Vec<T>, _s: Vec<T>, z: Vec<T>, tau, _kappa: T, it, res: &Residuals<T>, unattained| CoreResult {
        status,
        x,
        z,
        tau,
        iterations: it,
        pres: res.pres,
        dres: res.dres,
        gap: res.gap,
        unattained,
    };

    let mut best: Option<(T, CoreResult<T>)> = None;
    for it in 0..=st.max_iters {
        let (r1, r2, res) = residuals(a, b, c, &x, &s, &z, tau);
        let r3 = kappa + dot(c, &x) - dot(b, &z);
        let xnorm = norm2(&x) / tau;
        let znorm = norm2(&z) / tau;

        let gap_ok = res.gap <= st.tol_gap * (T::one() + res.pcost.abs().min(res.dcost.abs()));
        if res.pres <= st.tol_feas && res.dres <= st.tol_feas && gap_ok {
            let unattained = xnorm.max(znorm) > st.unattained_norm;
            return finish(CoreStatus::Optimal, x, s, z, tau, kappa, it, &res, unattained);
        }
        let bz = dot(b, &z);
        if bz > T::zero() && norm2(&a.tr_matvec(&z)) <= st.tol_feas * bz {
            return finish(CoreStatus::PrimalInfeasible, x, s, z, tau, kappa, it, &res, false);
        }
        let cx = dot(c, &x);
        if cx < T::zero() {
            let ax = a.matvec(&x);
            let viol: Vec<T> = ax.iter().zip(&s).map(|(&p, &q)| p - q).collect();
            if norm2(&viol) <= st.tol_feas * (-cx) {
                return finish(CoreStatus::DualInfeasible, x, s, z, tau, kappa, it, &res, false);
            }
        }
        // keep the best near-converged iterate for the diverging case
        let merit = res.pres.max(res.dres).max(res.gap / (T::one() + res.pcost.abs()));
        if merit.is_finite() && best.as_ref().map_or(true, |(bm, _)| merit < *bm) {
            best = Some((
                merit,
                finish(CoreStatus::Stopped, x.clone(), s.clone(), z.clone(), tau, kappa, it, &res, false),
            ));
        }
        if it == st.max_iters {
            break;
        }

        let mu = (dot(&s, &z) + tau * kappa) / (nu + T::one());
        let scal = Scaling::new(cone, &s, &z);
        let lam = scal.lambda.clone();

        // Â = W⁻¹A, normal matrix ÂᵀÂ
        let mut ahat = Matrix::zeros(m, n);
        for j in 0..n {
            let col = scal.apply(&a.column(j), true);
            ahat.set_column(j, &col);
        }
        let Some(normal) = NormalSolver::new(&ahat) else {
            break;
        };
        // [0 −Âᵀ; −Â −I] [dx; W dz] = [p; W⁻¹q], refined against the
        // unfactored system
        let solve_scaled = |p: &[T], g: &[T]| -> (Vec<T>, Vec<T>) {
            let mut rhs = p.to_vec();
            axpy(-T::one(), &ahat.tr_matvec(g), &mut rhs);
            let dx = normal.solve(&rhs);
            let dzt: Vec<T> = ahat.matvec(&dx).iter().zip(g).map(|(&u, &v)| -u - v).collect();
            (dx, dzt)
        };
        let kkt = |p: &[T], q: &[T]| -> (Vec<T>, Vec<T>) {
            let g = scal.apply(q, true);
            let (mut dx, mut dzt) = solve_scaled(p, &g);
            for _ in 0..REFINE_STEPS {
                let mut ra = p.to_vec();
                axpy(T::one(), &ahat.tr_matvec(&dzt), &mut ra);
                let adx = ahat.matvec(&dx);
                let rb: Vec<T> = (0..m).map(|i| g[i] + adx[i] + dzt[i]).collect();
                let (ex, ez) = solve_scaled(&ra, &rb);
                axpy(T::one(), &ex, &mut dx);
                axpy(T::one(), &ez, &mut dzt);
            }
            (dx, scal.apply(&dzt, true))
        };
        let neg_b: Vec<T> = b.iter().map(|&v| -v).collect();
        let neg_c: Vec<T> = c.iter().map(|&v| -v).collect();
        let (x1, z1) = kkt(&neg_c, &neg_b);
        let denom = dot(c, &x1) - dot(b, &z1) - kappa / tau;

        // Direction for residual weight (1 − γ), complementarity target ξ
        let direction = |gamma: T, ds_tilde: &[T], xi_tau: T| {
            let w_ds = scal.apply(ds_tilde, false);
            let p: Vec<T> = r1.iter().map(|&v| -(T::one() - gamma) * v).collect();
            let q: Vec<T> = r2.iter().zip(&w_ds).map(|(&v, &w)| -(T::one() - gamma) * v - w).collect();
            let (x2, z2) = kkt(&p, &q);
            let num = -(T::one() - gamma) * r3 - dot(c, &x2) + dot(b, &z2) - xi_tau / tau;
            let dtau = num / denom;
            let mut dx = x2;
            axpy(dtau, &x1, &mut dx);
            let mut dz = z2;
            axpy(dtau, &z1, &mut dz);
            // Δs from the primal equation Δs − AΔx + bΔτ = −(1 − γ)r₂; the
            // complementarity form W(d̃ − WΔz) loses the residual reduction
            // once W is badly conditioned
            let adx = a.matvec(&dx);
            let ds: Vec<T> = (0..m)
                .map(|i| -(T::one() - gamma) * r2[i] + adx[i] - b[i] * dtau)
                .collect();
            let dkappa = (xi_tau - kappa * dtau) / tau;
            (dx, ds, dz, dtau, dkappa)
        };
        let step_len = |ds: &[T], dz: &[T], dtau: T, dkappa: T| {
            let mut alpha = cone.max_step(&s, ds, T::one());
            alpha = alpha.min(cone.max_step(&z, dz, T::one()));
            if dtau < T::zero() {
                alpha = alpha.min(-tau / dtau);
            }
            if dkappa < T::zero() {
                alpha = alpha.min(-kappa / dkappa);
            }
            alpha
        };

        // predictor
        let neg_lam: Vec<T> = lam.iter().map(|&v| -v).collect();
        let (_, ds_a, dz_a, dtau_a, dkappa_a) = direction(T::zero(), &neg_lam, -tau * kappa);
        let alpha_aff = step_len(&ds_a, &dz_a, dtau_a, dkappa_a);
        let sigma = (T::one() - alpha_aff).powi(3).max(T::zero()).min(T::one());

        // corrector
        let e = cone.identity::<T>();
        let lam_sq = cone.jordan(&lam, &lam);
        let corr = cone.jordan(&scal.apply(&ds_a, true), &scal.apply(&dz_a, false));
        let xi: Vec<T> = (0..m).map(|i| -lam_sq[i] + sigma * mu * e[i] - corr[i]).collect();
        let ds_tilde = cone.jordan_div(&lam, &xi);
        let xi_tau = -tau * kappa + sigma * mu - dtau_a * dkappa_a;
        let (dx, ds, dz, dtau, dkappa) = direction(sigma, &ds_tilde, xi_tau);
        let alpha = (st.step_fraction * step_len(&ds, &dz, dtau, dkappa)).min(T::one());
        if !(alpha > T::lit(1e-14)) || !alpha.is_finite() {
            break;
        }
        let nx: Vec<T> = x.iter().zip(&dx).map(|(&v, &d)| v + alpha * d).collect();
        let ns: Vec<T> = s.iter().zip(&ds).map(|(&v, &d)| v + alpha * d).collect();
        let nz: Vec<T> = z.iter().zip(&dz).map(|(&v, &d)| v + alpha * d).collect();
        let ntau = tau + alpha * dtau;
        let nkappa = kappa + alpha * dkappa;
        let all_finite = nx.iter().chain(&ns).chain(&nz).all(|v| v.is_finite()) && ntau.is_finite() && nkappa.is_finite();
        if !all_finite {
            break;
        }
        x = nx;
        s = ns;
        z = nz;
        tau = ntau;
        kappa = nkappa;
    }
    match best {
        Some((_, mut r)) => {
            r.status = CoreStatus::Stopped;
            r
        }
        None => {
            let (_, _, res) = residuals(a, b, c, &x, &s, &z, tau);
            finish(CoreStatus::Stopped, x, s, z, tau, kappa, st.max_iters, &res, false)
        }
    }
}
