//! Small dense linear algebra kernels.
//!
//! Problems handled by this crate are desk-scale (a few hundred rows at
//! most), so everything here is dense, row-major and allocation-friendly
//! rather than fast.

use std::ops::{Index, IndexMut};

use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from row vectors. Returns `None` on ragged input.
    pub fn from_rows(rows: &[Vec<T>]) -> Option<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return None;
        }
        Some(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    /// Wraps a row-major buffer. Panics if the length does not match.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix buffer length mismatch");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Single-column matrix.
    pub fn column_vector(v: &[T]) -> Self {
        Self::from_vec(v.len(), 1, v.to_vec())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[T]) {
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `A x`
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ y`
    pub fn tr_matvec(&self, y: &[T]) -> Vec<T> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi != T::zero() {
                axpy(yi, self.row(i), &mut out);
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let src = other.row(k);
                let dst = out.row_mut(i);
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    /// `AᵀA`
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..n {
                let ri = row[i];
                if ri == T::zero() {
                    continue;
                }
                for j in i..n {
                    g[(i, j)] += ri * row[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g[(i, j)] = g[(j, i)];
            }
        }
        g
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self::from_vec(idx.len(), self.cols, data)
    }

    pub fn select_columns(&self, idx: &[usize]) -> Self {
        Self::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])])
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols, "vstack column mismatch");
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Self::from_vec(self.rows + other.rows, self.cols, data)
    }

    /// Places `other` to the right of `self`.
    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "hstack row mismatch");
        Self::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self[(i, j)]
            } else {
                other[(i, j - self.cols)]
            }
        })
    }

    pub fn push_row(&mut self, row: &[T]) {
        assert_eq!(row.len(), self.cols, "row length mismatch");
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    pub fn scale(&self, a: T) -> Self {
        Self::from_vec(self.rows, self.cols, self.data.iter().map(|&x| x * a).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| U::lit(x.to_f64_lossy())).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[inline]
pub fn norm2<T: Scalar>(a: &[T]) -> T {
    // Scaled to avoid overflow on the huge iterates of diverging solves.
    let m = norm_inf(a);
    if m == T::zero() || !m.is_finite() {
        return m;
    }
    let s: T = a.iter().map(|&x| (x / m) * (x / m)).sum();
    m * s.sqrt()
}

#[inline]
pub fn norm_inf<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// `y += a x`
#[inline]
pub fn axpy<T: Scalar>(a: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn scaled<T: Scalar>(a: T, x: &[T]) -> Vec<T> {
    x.iter().map(|&v| a * v).collect()
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Factors `a`; `None` when a pivot is not strictly positive.
    pub fn new(a: &Matrix<T>) -> Option<Self> {
        let n = a.rows();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) || !d.is_finite() {
                return None;
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Some(Self { l })
    }

    /// Factors `a + δI`, growing δ from zero until the factorization succeeds.
    pub fn regularized(a: &Matrix<T>) -> Option<Self> {
        if let Some(f) = Self::new(a) {
            return Some(f);
        }
        let n = a.rows();
        let base = (0..n).fold(T::zero(), |m, i| m.max(a[(i, i)].abs())).max(T::one());
        let mut delta = base * T::epsilon() * T::lit(16.0);
        for _ in 0..12 {
            let mut shifted = a.clone();
            for i in 0..n {
                shifted[(i, i)] += delta;
            }
            if let Some(f) = Self::new(&shifted) {
                return Some(f);
            }
            delta *= T::lit(100.0);
        }
        None
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.l.rows();
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }
}

/// Householder QR with column pivoting, `A P = Q R`, with explicit `Q`.
#[derive(Clone, Debug)]
pub struct PivotedQr<T> {
    q: Matrix<T>,
    r: Matrix<T>,
    perm: Vec<usize>,
    rank: usize,
}

impl<T: Scalar> PivotedQr<T> {
    /// Factors `a`. Diagonal entries of `R` below `rel_tol · |R₀₀|` end the
    /// numerical rank.
    pub fn new(a: &Matrix<T>, rel_tol: T) -> Self {
        let (m, n) = (a.rows(), a.cols());
        let mut r = a.clone();
        let mut q = Matrix::<T>::identity(m);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut col_norms: Vec<T> = (0..n).map(|j| norm2(&r.column(j))).collect();
        let steps = m.min(n);
        let mut rank = 0;
        let mut first = T::zero();
        for k in 0..steps {
            // pivot on the largest remaining column
            let (p, _) = (k..n).fold((k, -T::one()), |(bi, bv), j| {
                if col_norms[j] > bv {
                    (j, col_norms[j])
                } else {
                    (bi, bv)
                }
            });
            if p != k {
                for i in 0..m {
                    let tmp = r[(i, k)];
                    r[(i, k)] = r[(i, p)];
                    r[(i, p)] = tmp;
                }
                perm.swap(k, p);
                col_norms.swap(k, p);
            }
            let x: Vec<T> = (k..m).map(|i| r[(i, k)]).collect();
            let alpha = norm2(&x);
            if k == 0 {
                first = alpha;
            }
            if alpha == T::zero() || alpha <= rel_tol * first {
                break;
            }
            rank += 1;
            let sign = if x[0] >= T::zero() { T::one() } else { -T::one() };
            let mut v = x;
            v[0] += sign * alpha;
            let vnorm = norm2(&v);
            if vnorm == T::zero() {
                continue;
            }
            for vi in v.iter_mut() {
                *vi /= vnorm;
            }
            let two = T::lit(2.0);
            // R <- H R on the trailing block
            for j in k..n {
                let s: T = (k..m).map(|i| v[i - k] * r[(i, j)]).sum();
                for i in k..m {
                    r[(i, j)] -= two * s * v[i - k];
                }
            }
            // Q <- Q H
            for i in 0..m {
                let s: T = (k..m).map(|l| q[(i, l)] * v[l - k]).sum();
                for l in k..m {
                    q[(i, l)] -= two * s * v[l - k];
                }
            }
            for j in k + 1..n {
                let tail: Vec<T> = (k + 1..m).map(|i| r[(i, j)]).collect();
                col_norms[j] = norm2(&tail);
            }
        }
        Self { q, r, perm, rank }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn q(&self) -> &Matrix<T> {
        &self.q
    }

    pub fn r(&self) -> &Matrix<T> {
        &self.r
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Orthonormal basis of the numerical column space of `A`.
    pub fn range_basis(&self) -> Matrix<T> {
        let idx: Vec<usize> = (0..self.rank).collect();
        self.q.select_columns(&idx)
    }

    /// Orthonormal basis of the orthogonal complement of the column space.
    pub fn complement_basis(&self) -> Matrix<T> {
        let idx: Vec<usize> = (self.rank..self.q.rows()).collect();
        self.q.select_columns(&idx)
    }
}

/// Minimum-norm least-squares solution of `E x = f` together with an
/// orthonormal basis of `null(E)`, so that every solution is `x_p + N u`.
#[derive(Clone, Debug)]
pub struct AffineSolutionSet<T> {
    pub particular: Vec<T>,
    pub null_basis: Matrix<T>,
    /// `‖E x_p − f‖`
    pub residual: T,
}

impl<T: Scalar> AffineSolutionSet<T> {
    pub fn new(e: &Matrix<T>, f: &[T], rank_tol: T) -> Self {
        let n = e.cols();
        let qr = PivotedQr::new(&e.transpose(), rank_tol);
        let range = qr.range_basis();
        let null_basis = qr.complement_basis();
        let r = qr.rank();
        let particular = if r == 0 {
            vec![T::zero(); n]
        } else {
            let m = e.matmul(&range);
            let normal = m.gram();
            let rhs = m.tr_matvec(f);
            let w = Cholesky::regularized(&normal)
                .map(|c| c.solve(&rhs))
                .unwrap_or_else(|| vec![T::zero(); r]);
            range.matvec(&w)
        };
        let residual = norm2(&sub(&e.matvec(&particular), f));
        Self {
            particular,
            null_basis,
            residual,
        }
    }
}

/// Residual of projecting `h` onto the column space of `m`,
/// i.e. `min_v ‖M v − h‖`.
pub fn range_residual<T: Scalar>(m: &Matrix<T>, h: &[T], rank_tol: T) -> T {
    let qr = PivotedQr::new(m, rank_tol);
    let basis = qr.range_basis();
    let coeffs = basis.tr_matvec(h);
    let proj = basis.matvec(&coeffs);
    norm2(&sub(h, &proj))
}

/// Nonnegative least squares `min_{λ ≥ 0} ‖G λ − y‖` by the Lawson–Hanson
/// active-set method. Returns `(λ, residual norm)`.
pub fn nnls<T: Scalar>(g: &Matrix<T>, y: &[T]) -> (Vec<T>, T) {
    let n = g.cols();
    let mut lambda = vec![T::zero(); n];
    let mut passive = vec![false; n];
    let tol = T::lit(10.0) * T::epsilon() * g.max_abs().max(T::one()) * T::lit(n.max(1) as f64);
    let max_outer = 3 * n + 10;

    let residual_of = |lam: &[T]| sub(y, &g.matvec(lam));

    for _ in 0..max_outer {
        let resid = residual_of(&lambda);
        let grad = g.tr_matvec(&resid);
        let candidate = (0..n)
            .filter(|&j| !passive[j])
            .fold(None, |best: Option<(usize, T)>, j| match best {
                Some((_, b)) if grad[j] <= b => best,
                _ => Some((j, grad[j])),
            });
        match candidate {
            Some((j, gj)) if gj > tol => passive[j] = true,
            _ => break,
        }
        // inner loop: keep the passive least-squares solution feasible
        for _ in 0..max_outer {
            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let sub_g = g.select_columns(&idx);
            let z_p = least_squares(&sub_g, y);
            if z_p.iter().all(|&v| v > T::zero()) {
                for (k, &j) in idx.iter().enumerate() {
                    lambda[j] = z_p[k];
                }
                break;
            }
            let mut alpha = T::one();
            for (k, &j) in idx.iter().enumerate() {
                if z_p[k] <= T::zero() {
                    let denom = lambda[j] - z_p[k];
                    if denom > T::zero() {
                        alpha = alpha.min(lambda[j] / denom);
                    }
                }
            }
            for (k, &j) in idx.iter().enumerate() {
                let lj = lambda[j];
                lambda[j] = lj + alpha * (z_p[k] - lj);
                if lambda[j] <= tol {
                    lambda[j] = T::zero();
                    passive[j] = false;
                }
            }
        }
    }
    let res = norm2(&residual_of(&lambda));
    (lambda, res)
}

/// Least squares `min ‖G x − y‖` via the normal equations (small systems).
pub fn least_squares<T: Scalar>(g: &Matrix<T>, y: &[T]) -> Vec<T> {
    if g.cols() == 0 {
        return Vec::new();
    }
    let normal = g.gram();
    let rhs = g.tr_matvec(y);
    Cholesky::regularized(&normal)
        .map(|c| c.solve(&rhs))
        .unwrap_or_else(|| vec![T::zero(); g.cols()])
}

/// Inverse of a square matrix via QR; `None` when numerically singular.
pub fn inverse<T: Scalar>(a: &Matrix<T>) -> Option<Matrix<T>> {
    let n = a.rows();
    if n != a.cols() {
        return None;
    }
    let qr = PivotedQr::new(a, T::lit(1e-12));
    if qr.rank() < n {
        return None;
    }
    // A P = Q R  =>  A⁻¹ = P R⁻¹ Qᵀ
    let r = qr.r();
    let mut rinv = Matrix::<T>::zeros(n, n);
    for col in 0..n {
        for i in (0..n).rev() {
            let mut s = if i == col { T::one() } else { T::zero() };
            for k in i + 1..n {
                s -= r[(i, k)] * rinv[(k, col)];
            }
            rinv[(i, col)] = s / r[(i, i)];
        }
    }
    let rq = rinv.matmul(&qr.q().transpose());
    let mut out = Matrix::zeros(n, n);
    for (k, &p) in qr.permutation().iter().enumerate() {
        out.row_mut(p).copy_from_slice(rq.row(k));
    }
    Some(out)
}
