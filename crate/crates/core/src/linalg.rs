//! Dense row-major matrices and the handful of factorizations the encoding
//! models need: Cholesky, Householder QR and a one-sided Jacobi SVD.
//!
//! Everything here is written against `alloc` only. The SVD is the work
//! horse of the ridge solvers: it is computed once per design and then
//! reused for every penalty on the grid.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::math;

/// Row-major `f64` matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(8) {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        if self.rows > 8 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Wraps a row-major buffer. Fails when the length does not match.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape {
                op: "Matrix::from_vec",
                expected: (rows, cols),
                found: (data.len(), 1),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from equally long rows. An empty slice gives a 0x0 matrix.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Shape {
                    op: "Matrix::from_rows",
                    expected: (i, cols),
                    found: (i, r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix { rows: rows.len(), cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    /// A single column built from a slice.
    pub fn column(values: &[f64]) -> Self {
        Matrix { rows: values.len(), cols: 1, data: values.to_vec() }
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
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col_to_vec(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    /// `self · rhs`
    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::Shape {
                op: "matmul",
                expected: (self.cols, rhs.cols),
                found: rhs.shape(),
            });
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · rhs` without materializing the transpose.
    pub fn tr_matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.rows != rhs.rows {
            return Err(Error::Shape {
                op: "tr_matmul",
                expected: (self.rows, rhs.cols),
                found: rhs.shape(),
            });
        }
        let mut out = Matrix::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            let b_row = rhs.row(k);
            for (i, &a) in self.row(k).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self · rhsᵀ`
    pub fn matmul_tr(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.cols {
            return Err(Error::Shape {
                op: "matmul_tr",
                expected: (rhs.rows, self.cols),
                found: rhs.shape(),
            });
        }
        let mut out = Matrix::zeros(self.rows, rhs.rows);
        for i in 0..self.rows {
            let a = self.row(i);
            for j in 0..rhs.rows {
                out[(i, j)] = dot(a, rhs.row(j));
            }
        }
        Ok(out)
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: idx.len(), cols: self.cols, data }
    }

    pub fn select_cols(&self, idx: &[usize]) -> Matrix {
        Matrix::from_fn(self.rows, idx.len(), |r, c| self[(r, idx[c])])
    }

    /// Horizontal concatenation of blocks sharing a row count.
    pub fn hcat(blocks: &[&Matrix]) -> Result<Matrix> {
        let rows = blocks.first().map_or(0, |b| b.rows);
        if let Some(bad) = blocks.iter().find(|b| b.rows != rows) {
            return Err(Error::Shape { op: "hcat", expected: (rows, bad.cols), found: bad.shape() });
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for b in blocks {
                data.extend_from_slice(b.row(r));
            }
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn sub(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.shape() != rhs.shape() {
            return Err(Error::Shape { op: "sub", expected: self.shape(), found: rhs.shape() });
        }
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    /// Adds `alpha` to every diagonal entry of a square matrix.
    pub fn add_diagonal(&mut self, alpha: f64) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            self[(i, i)] += alpha;
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    pub fn factor(a: &Matrix) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::Shape { op: "cholesky", expected: (n, n), found: a.shape() });
        }
        let mut l = Matrix::zeros(n, n);
        let mut diag_max = 0.0f64;
        for i in 0..n {
            diag_max = diag_max.max(a[(i, i)].abs());
        }
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            // pivots at rounding level of the original diagonal count as zero
            let floor = f64::EPSILON * (n as f64) * a[(j, j)].abs();
            if !(d > floor) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: j, value: d, diag_max });
            }
            let djj = math::sqrt(d);
            l[(j, j)] = djj;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Cholesky { l })
    }

    /// Ratio of the largest to the smallest squared pivot, a cheap
    /// lower bound on the condition number of the factored matrix.
    pub fn pivot_condition(&self) -> f64 {
        let n = self.l.rows();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let p = self.l[(i, i)] * self.l[(i, i)];
            lo = lo.min(p);
            hi = hi.max(p);
        }
        hi / lo
    }

    /// Solves `A X = B` for every column of `B`.
    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        let n = self.l.rows();
        if b.rows() != n {
            return Err(Error::Shape { op: "cholesky solve", expected: (n, b.cols()), found: b.shape() });
        }
        let mut x = b.clone();
        for c in 0..b.cols() {
            // forward: L y = b
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s -= self.l[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s / self.l[(i, i)];
            }
            // backward: Lᵀ x = y
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in i + 1..n {
                    s -= self.l[(k, i)] * x[(k, c)];
                }
                x[(i, c)] = s / self.l[(i, i)];
            }
        }
        Ok(x)
    }
}

/// Thin singular value decomposition `X = U diag(s) Vᵀ`.
///
/// For an `n x d` input with `k = min(n, d)`: `u` is `n x k`, `v` is `d x k`,
/// `s` has length `k` and is sorted in decreasing order. Columns of `u`
/// belonging to an exactly zero singular value are zero.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

const JACOBI_MAX_SWEEPS: usize = 80;

impl Svd {
    pub fn compute(x: &Matrix) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::NonFinite { what: "svd input" });
        }
        let (n, d) = x.shape();
        if n >= d {
            let (left, s, right) = tall_svd(n, d, |r, c| x[(r, c)])?;
            Ok(Svd { u: left, s, v: right })
        } else {
            // Work on Xᵀ (d x n): Xᵀ = A S Bᵀ  =>  X = B S Aᵀ
            let (left, s, right) = tall_svd(d, n, |r, c| x[(c, r)])?;
            Ok(Svd { u: right, s, v: left })
        }
    }

    pub fn rank(&self) -> usize {
        self.s.len()
    }
}

/// Column-major scratch matrix used by the QR and Jacobi kernels.
struct Columns {
    m: usize,
    data: Vec<Vec<f64>>,
}

/// SVD of an `m x k` matrix with `m >= k`, given by element accessor.
/// Returns `(U m x k, s, V k x k)`.
fn tall_svd(m: usize, k: usize, at: impl Fn(usize, usize) -> f64) -> Result<(Matrix, Vec<f64>, Matrix)> {
    if k == 0 {
        return Ok((Matrix::zeros(m, 0), Vec::new(), Matrix::zeros(0, 0)));
    }
    let mut a = Columns { m, data: (0..k).map(|c| (0..m).map(|r| at(r, c)).collect()).collect() };

    // QR preconditioning: Jacobi then only has to rotate a k x k triangle.
    let qr = if m > k { Some(householder_qr(&mut a)) } else { None };

    let (w, s, v) = one_sided_jacobi(a)?;

    let u = match qr {
        Some(reflectors) => apply_q(&reflectors, m, &w),
        None => w,
    };

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    let s_sorted = order.iter().map(|&i| s[i]).collect();
    let u_sorted = Matrix::from_fn(m, k, |r, c| u.data[order[c]][r]);
    let v_sorted = Matrix::from_fn(k, k, |r, c| v.data[order[c]][r]);
    Ok((u_sorted, s_sorted, v_sorted))
}

/// In-place Householder QR of a tall column-major matrix. On return `a`
/// holds `R` (k x k, upper triangular, `a.m == k`) and the reflectors are
/// returned for later application of `Q`.
fn householder_qr(a: &mut Columns) -> Vec<Vec<f64>> {
    let k = a.data.len();
    let mut reflectors = Vec::with_capacity(k);
    for j in 0..k {
        let col = &a.data[j];
        let norm = math::sqrt(col[j..].iter().map(|v| v * v).sum());
        let mut v: Vec<f64> = col[j..].to_vec();
        if norm == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        let alpha = if v[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        for c in j..k {
            let target = &mut a.data[c][j..];
            let proj = 2.0 * dot(&v, target) / vnorm2;
            for (t, vi) in target.iter_mut().zip(&v) {
                *t -= proj * vi;
            }
        }
        let scale = math::sqrt(2.0 / vnorm2);
        v.iter_mut().for_each(|x| *x *= scale);
        reflectors.push(v);
    }
    for col in a.data.iter_mut() {
        col.truncate(k);
    }
    // zero out the strictly lower part left over from rounding
    for (c, col) in a.data.iter_mut().enumerate() {
        for r in c + 1..k {
            col[r] = 0.0;
        }
    }
    a.m = k;
    reflectors
}

/// Computes `Q · W` where `W` is `k x k` (column-major) and `Q` is the thin
/// `m x k` factor encoded by the reflectors.
fn apply_q(reflectors: &[Vec<f64>], m: usize, w: &Columns) -> Columns {
    let mut out: Vec<Vec<f64>> = w
        .data
        .iter()
        .map(|col| {
            let mut full = vec![0.0; m];
            full[..col.len()].copy_from_slice(col);
            full
        })
        .collect();
    for (j, v) in reflectors.iter().enumerate().rev() {
        if v.is_empty() {
            continue;
        }
        for col in out.iter_mut() {
            let target = &mut col[j..];
            let proj = dot(v, target);
            for (t, vi) in target.iter_mut().zip(v) {
                *t -= proj * vi;
            }
        }
    }
    Columns { m, data: out }
}

/// Hestenes one-sided Jacobi: rotates column pairs until all columns are
/// mutually orthogonal. Returns `(U, s, V)` unsorted.
fn one_sided_jacobi(mut a: Columns) -> Result<(Columns, Vec<f64>, Columns)> {
    let k = a.data.len();
    let mut v: Vec<Vec<f64>> = (0..k)
        .map(|c| {
            let mut e = vec![0.0; k];
            e[c] = 1.0;
            e
        })
        .collect();
    let tol = f64::EPSILON * (a.m.max(1) as f64);
    let mut norms: Vec<f64> = a.data.iter().map(|c| dot(c, c)).collect();

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(&a.data[p], &a.data[q]);
                if gamma.abs() <= tol * math::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + math::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / math::sqrt(1.0 + t * t);
                let s = c * t;
                rotate(&mut a.data, p, q, c, s);
                rotate(&mut v, p, q, c, s);
                norms[p] = dot(&a.data[p], &a.data[p]);
                norms[q] = dot(&a.data[q], &a.data[q]);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { what: "jacobi svd", iterations: JACOBI_MAX_SWEEPS });
    }

    let mut s = Vec::with_capacity(k);
    for col in a.data.iter_mut() {
        let norm = math::sqrt(dot(col, col));
        s.push(norm);
        if norm > 0.0 {
            col.iter_mut().for_each(|x| *x /= norm);
        }
    }
    Ok((a, s, Columns { m: k, data: v }))
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let cp = &mut lo[p];
    let cq = &mut hi[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let xq = *y;
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(svd: &Svd) -> Matrix {
        let mut us = svd.u.clone();
        for r in 0..us.rows() {
            for c in 0..us.cols() {
                us[(r, c)] *= svd.s[c];
            }
        }
        us.matmul_tr(&svd.v).unwrap()
    }

    fn pseudo_random(n: usize, d: usize, seed: u64) -> Matrix {
        let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        Matrix::from_fn(n, d, |_, _| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
    }

    #[test]
    fn svd_reconstructs_tall_wide_and_square() {
        for &(n, d) in &[(7, 3), (3, 7), (5, 5), (1, 4), (4, 1), (40, 12)] {
            let x = pseudo_random(n, d, (n * 31 + d) as u64);
            let svd = Svd::compute(&x).unwrap();
            let err = reconstruct(&svd).sub(&x).unwrap().frobenius_norm();
            assert!(err < 1e-12 * (1.0 + x.frobenius_norm()), "{n}x{d}: {err}");
            assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
            // orthonormal columns
            let utu = svd.u.tr_matmul(&svd.u).unwrap();
            let vtv = svd.v.tr_matmul(&svd.v).unwrap();
            let k = n.min(d);
            assert!(utu.sub(&Matrix::identity(k)).unwrap().frobenius_norm() < 1e-12);
            assert!(vtv.sub(&Matrix::identity(k)).unwrap().frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn svd_handles_rank_deficiency() {
        // two identical columns and a zero column
        let x = Matrix::from_rows(&[[1.0, 1.0, 0.0], [2.0, 2.0, 0.0], [3.0, 3.0, 0.0], [4.0, 4.0, 0.0]]).unwrap();
        let svd = Svd::compute(&x).unwrap();
        assert!(svd.s[1].abs() < 1e-12 && svd.s[2] == 0.0);
        assert!(reconstruct(&svd).sub(&x).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn cholesky_solves_and_rejects_indefinite() {
        let a = Matrix::from_rows(&[[4.0, 2.0], [2.0, 3.0]]).unwrap();
        let b = Matrix::column(&[2.0, 1.0]);
        let x = Cholesky::factor(&a).unwrap().solve(&b).unwrap();
        let back = a.matmul(&x).unwrap();
        assert!(back.sub(&b).unwrap().frobenius_norm() < 1e-14);

        let bad = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(matches!(Cholesky::factor(&bad), Err(Error::NotPositiveDefinite { pivot: 1, .. })));
    }

    #[test]
    fn products_agree() {
        let a = pseudo_random(4, 3, 1);
        let b = pseudo_random(4, 2, 2);
        let via_t = a.transpose().matmul(&b).unwrap();
        assert!(via_t.sub(&a.tr_matmul(&b).unwrap()).unwrap().frobenius_norm() < 1e-15);
        let c = pseudo_random(5, 3, 3);
        let via_t = a.matmul(&c.transpose()).unwrap();
        assert!(via_t.sub(&a.matmul_tr(&c).unwrap()).unwrap().frobenius_norm() < 1e-15);
    }

    #[test]
    fn shape_errors() {
        let a = Matrix::zeros(2, 3);
        assert!(a.matmul(&Matrix::zeros(2, 3)).is_err());
        assert!(Matrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(Matrix::hcat(&[&Matrix::zeros(2, 1), &Matrix::zeros(3, 1)]).is_err());
    }
}
