//! Small dense linear algebra over [`Scalar`].
//!
//! Problem sizes here are tiny (tens to low hundreds of rows), so a
//! column-major `Vec` with straightforward factorizations is all we need.

use std::ops::{Index, IndexMut};

use crate::scalar::{dot, Scalar};

/// Dense column-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from equally sized columns.
    pub fn from_columns(rows: usize, columns: &[Vec<T>]) -> Self {
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            assert_eq!(c.len(), rows, "column length mismatch");
            data.extend_from_slice(c);
        }
        Self { rows, cols: columns.len(), data }
    }

    /// Builds a matrix from row slices.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        Self::from_fn(r, c, |i, j| rows[i][j])
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
    pub fn column(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn column_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn row(&self, i: usize) -> Vec<T> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    pub fn set_row(&mut self, i: usize, values: &[T]) {
        for (j, &v) in values.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    /// Raw column-major storage.
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `self * v`
    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols);
        let mut out = vec![T::zero(); self.rows];
        for (j, &vj) in v.iter().enumerate() {
            if vj == T::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.column(j)) {
                *o += a * vj;
            }
        }
        out
    }

    /// `selfᵀ * v`
    pub fn tr_mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.rows);
        (0..self.cols).map(|j| dot(self.column(j), v)).collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let col = self.mul_vec(other.column(j));
            out.column_mut(j).copy_from_slice(&col);
        }
        out
    }

    /// `selfᵀ * self`
    pub fn gram(&self) -> Self {
        let k = self.cols;
        let mut g = Self::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let v = dot(self.column(i), self.column(j));
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> T {
        (0..self.cols)
            .map(|j| self.column(j).iter().map(|v| v.abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Converts to another scalar type.
    pub fn map_into<U: Scalar>(&self) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| U::lit(v.to_f64_lossy())).collect() }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

/// LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    /// Returns `None` when a pivot is exactly zero.
    pub fn new(a: &Matrix<T>) -> Option<Self> {
        assert_eq!(a.rows(), a.cols(), "LU needs a square matrix");
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].abs();
            for i in k + 1..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == T::zero() || !best.is_finite() {
                return None;
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != T::zero() {
                    for j in k + 1..n {
                        let u = lu[(k, j)];
                        lu[(i, j)] -= f * u;
                    }
                }
            }
        }
        Some(Self { lu, perm })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.rows();
        assert_eq!(b.len(), n);
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.lu.rows();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = T::zero());
            e[j] = T::one();
            let col = self.solve(&e);
            inv.column_mut(j).copy_from_slice(&col);
        }
        inv
    }
}

/// 1-norm condition number `‖A‖₁‖A⁻¹‖₁`; infinite when `A` is singular.
pub fn condition_number_1<T: Scalar>(a: &Matrix<T>) -> T {
    match Lu::new(a) {
        Some(lu) => {
            let c = a.norm_1() * lu.inverse().norm_1();
            if c.is_finite() {
                c
            } else {
                T::infinity()
            }
        }
        None => T::infinity(),
    }
}

/// Cholesky factor that can grow one row/column at a time.
///
/// Used by the active-set solvers: appending a variable costs `O(k²)`.
#[derive(Debug, Clone, Default)]
pub struct GrowingCholesky<T> {
    // Row-major lower triangle, row i has i + 1 entries.
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> GrowingCholesky<T> {
    pub fn new() -> Self {
        Self { rows: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Appends a variable given its cross products with the current set
    /// (`cross[i] = G[active_i, new]`) and its own squared norm.
    ///
    /// Returns `false` (leaving the factor unchanged) when the new column is
    /// numerically dependent on the existing ones.
    pub fn push(&mut self, cross: &[T], diag: T) -> bool {
        let k = self.rows.len();
        assert_eq!(cross.len(), k);
        let w = self.forward(cross);
        let rest = diag - dot(&w, &w);
        if !(rest > diag.abs() * T::lit(1e-12)) || !rest.is_finite() {
            return false;
        }
        let mut row = w;
        row.push(rest.sqrt());
        self.rows.push(row);
        true
    }

    fn forward(&self, b: &[T]) -> Vec<T> {
        let k = self.rows.len();
        let mut y = Vec::with_capacity(k + 1);
        for i in 0..k {
            let r = &self.rows[i];
            let mut s = b[i];
            for j in 0..i {
                s -= r[j] * y[j];
            }
            y.push(s / r[i]);
        }
        y
    }

    /// Solves `L Lᵀ x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let k = self.rows.len();
        let mut x = self.forward(b);
        for i in (0..k).rev() {
            let mut s = x[i];
            for j in i + 1..k {
                s -= self.rows[j][i] * x[j];
            }
            x[i] = s / self.rows[i][i];
        }
        x
    }

    /// Refactors from scratch for a Gram sub-matrix; `false` if not positive definite.
    pub fn rebuild(&mut self, gram: &Matrix<T>, active: &[usize]) -> bool {
        self.rows.clear();
        for (pos, &j) in active.iter().enumerate() {
            let cross: Vec<T> = active[..pos].iter().map(|&i| gram[(i, j)]).collect();
            if !self.push(&cross, gram[(j, j)]) {
                return false;
            }
        }
        true
    }
}

/// Least-squares solution of `min ‖A x − b‖₂` via Householder QR.
///
/// Requires `rows ≥ cols`; returns `None` when `A` is rank deficient.
pub fn least_squares<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Option<Vec<T>> {
    let (m, n) = (a.rows(), a.cols());
    assert_eq!(b.len(), m);
    if m < n {
        return None;
    }
    let mut r = a.clone();
    let mut y = b.to_vec();
    let scale = a.norm_1().max(T::min_positive_value());
    for k in 0..n {
        let col = &r.column(k)[k..];
        let alpha_norm = col.iter().map(|&v| v * v).sum::<T>().sqrt();
        if alpha_norm <= scale * T::epsilon() * T::lit(16.0) {
            return None;
        }
        let x0 = r[(k, k)];
        let alpha = if x0 >= T::zero() { -alpha_norm } else { alpha_norm };
        let mut v: Vec<T> = col.to_vec();
        v[0] -= alpha;
        let vnorm2: T = v.iter().map(|&t| t * t).sum();
        if vnorm2 == T::zero() {
            continue;
        }
        for j in k..n {
            let c = &mut r.column_mut(j)[k..];
            let f = T::lit(2.0) * dot(&v, c) / vnorm2;
            for (ci, &vi) in c.iter_mut().zip(&v) {
                *ci -= f * vi;
            }
        }
        let f = T::lit(2.0) * dot(&v, &y[k..]) / vnorm2;
        for (yi, &vi) in y[k..].iter_mut().zip(&v) {
            *yi -= f * vi;
        }
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for j in i + 1..n {
            s -= r[(i, j)] * x[j];
        }
        x[i] = s / r[(i, i)];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_small_system() {
        let a = Matrix::<f64>::from_rows(&[vec![0.0, 2.0, 1.0], vec![1.0, 1.0, 0.0], vec![3.0, 0.0, 1.0]]);
        let x_true = [1.0, -2.0, 0.5];
        let b = a.mul_vec(&x_true);
        let x = Lu::new(&a).unwrap().solve(&b);
        for (u, v) in x.iter().zip(x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_has_infinite_condition() {
        let a = Matrix::<f64>::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(condition_number_1(&a).is_infinite());
        assert!((condition_number_1(&Matrix::<f64>::identity(3)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn growing_cholesky_matches_direct_solve() {
        let d = Matrix::<f64>::from_rows(&[
            vec![1.0, 0.5, 0.1],
            vec![0.0, 1.0, 0.3],
            vec![0.2, 0.0, 1.0],
            vec![0.4, 0.1, 0.0],
        ]);
        let g = d.gram();
        let mut ch = GrowingCholesky::new();
        assert!(ch.rebuild(&g, &[0, 1, 2]));
        let b = [1.0, -1.0, 2.0];
        let x = ch.solve(&b);
        let x_lu = Lu::new(&g).unwrap().solve(&b);
        for (u, v) in x.iter().zip(&x_lu) {
            assert!((u - v).abs() < 1e-12);
        }
        // dependent column is rejected
        assert!(!ch.push(&[g[(0, 0)], g[(1, 0)], g[(2, 0)]], g[(0, 0)]));
        assert_eq!(ch.dim(), 3);
    }

    #[test]
    fn least_squares_recovers_exact_fit() {
        let a = Matrix::<f64>::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0], vec![1.0, 3.0]]);
        let b = [1.0, 3.0, 5.0, 7.0];
        let x = least_squares(&a, &b).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
        let rank_def = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]);
        assert!(least_squares(&rank_def, &b[..3]).is_none());
    }

    #[test]
    fn works_in_single_precision() {
        let a = Matrix::<f32>::from_rows(&[vec![4.0, 1.0], vec![1.0, 3.0]]);
        let x = Lu::new(&a).unwrap().solve(&[1.0, 2.0]);
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-6);
    }
}
