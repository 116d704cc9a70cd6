//! Dense double-precision matrix kernel.
//!
//! Row-major `f64` storage with the handful of products and reductions the
//! layer math needs, seeded Glorot initialization, and a cyclic-Jacobi
//! symmetric eigensolver in [`eigen`]. Not a BLAS replacement: sizes here
//! are desk scale and clarity wins.

pub mod eigen;
pub mod prng;

pub use eigen::{sym_eig, SymEig};
pub use prng::Prng;

use crate::error::{Error, Result};

/// Row-major dense matrix of `f64`.
///
/// Entries are finite after construction and after every public operation;
/// operations that could produce NaN/Inf check their output and fail with a
/// numerical error instead of propagating poison values.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds from a row-major buffer; rejects length mismatches and
    /// non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "buffer of length {} cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        let m = DenseMatrix { rows, cols, data };
        m.ensure_finite("from_vec")?;
        Ok(m)
    }

    /// Convenience constructor from nested rows (used heavily by tests).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged row lengths".into()));
        }
        DenseMatrix::from_vec(r, c, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// Standard matrix product.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        let n = other.cols;
        for i in 0..self.rows {
            let arow = self.row(i);
            let orow = &mut out.data[i * n..(i + 1) * n];
            for (k, &a) in arow.iter().enumerate() {
                let brow = &other.data[k * n..(k + 1) * n];
                for j in 0..n {
                    orow[j] += a * brow[j];
                }
            }
        }
        out.ensure_finite("matmul")?;
        Ok(out)
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &DenseMatrix, scale: f64) -> Result<()> {
        self.check_same_shape(other, "add_scaled")?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        for a in &mut self.data {
            *a *= s;
        }
    }

    /// Returns a copy with row `i` multiplied by `scales[i]`.
    pub fn scale_rows(&self, scales: &[f64]) -> Result<DenseMatrix> {
        if scales.len() != self.rows {
            return Err(Error::Shape(format!(
                "scale_rows: {} scales for {} rows",
                scales.len(),
                self.rows
            )));
        }
        let mut out = self.clone();
        for (i, &s) in scales.iter().enumerate() {
            for v in out.row_mut(i) {
                *v *= s;
            }
        }
        Ok(out)
    }

    /// Sum of entrywise products.
    pub fn frobenius_inner(&self, other: &DenseMatrix) -> Result<f64> {
        self.check_same_shape(other, "frobenius_inner")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a * b)
            .sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|&a| a * a).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &a| m.max(a.abs()))
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (&a, &b)| m.max((a - b).abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.all_finite() {
            Ok(())
        } else {
            Err(Error::Numerical(format!("{what} produced non-finite entries")))
        }
    }

    fn check_same_shape(&self, other: &DenseMatrix, what: &str) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "{what}: {}x{} versus {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

/// Free-function form of the product, matching the rest of the kernel API.
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    a.matmul(b)
}

/// Glorot/Xavier uniform initialization: i.i.d. uniform on
/// `±sqrt(6 / (rows + cols))`, filled row-major so the draw order is part of
/// the reproducibility contract.
pub fn glorot_uniform(rows: usize, cols: usize, prng: &mut Prng) -> DenseMatrix {
    assert!(rows >= 1 && cols >= 1, "glorot_uniform needs positive dims");
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let mut m = DenseMatrix::zeros(rows, cols);
    for v in m.data_mut() {
        *v = (2.0 * prng.next_f64() - 1.0) * limit;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_identity_passthrough() {
        let m = DenseMatrix::from_rows(&[vec![1.0, -2.5, 3.0], vec![0.5, 4.0, -1.0]]).unwrap();
        let i3 = DenseMatrix::identity(3);
        let out = m.matmul(&i3).unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn matmul_zero_annihilates() {
        let z = DenseMatrix::zeros(2, 2);
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let out = z.matmul(&m).unwrap();
        assert_eq!(out, DenseMatrix::zeros(2, 2));
    }

    #[test]
    fn matmul_hand_expanded_two_by_two() {
        // [[1,2],[3,4]] * [[5,6],[7,8]] = [[19,22],[43,50]]
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[vec![5.0, 6.0], vec![7.0, 8.0]]).unwrap();
        let c = a.matmul(&b).unwrap();
        let want = DenseMatrix::from_rows(&[vec![19.0, 22.0], vec![43.0, 50.0]]).unwrap();
        assert_eq!(c, want);
    }

    #[test]
    fn matmul_shape_mismatch_is_error() {
        let a = DenseMatrix::zeros(2, 3);
        let b = DenseMatrix::zeros(2, 3);
        assert!(matches!(a.matmul(&b), Err(Error::Shape(_))));
    }

    #[test]
    fn matmul_associativity_on_random_triples() {
        let mut p = Prng::new(42);
        for _ in 0..20 {
            let a = glorot_uniform(5, 4, &mut p);
            let b = glorot_uniform(4, 6, &mut p);
            let c = glorot_uniform(6, 3, &mut p);
            let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
            let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
            let scale = left.max_abs().max(1.0);
            assert!(left.max_abs_diff(&right) / scale < 1e-9);
        }
    }

    #[test]
    fn from_vec_rejects_non_finite() {
        assert!(DenseMatrix::from_vec(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(DenseMatrix::from_vec(1, 2, vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn glorot_deterministic_per_seed() {
        let a = glorot_uniform(17, 9, &mut Prng::new(7));
        let b = glorot_uniform(17, 9, &mut Prng::new(7));
        assert_eq!(a, b);
    }

    #[test]
    fn glorot_bound_holds() {
        let m = glorot_uniform(1000, 1000, &mut Prng::new(1));
        let limit = (6.0 / 2000.0f64).sqrt();
        assert!(m.max_abs() <= limit);
    }

    #[test]
    fn glorot_mean_near_zero() {
        // 10^6 draws; uniform on ±limit has sd = limit/sqrt(3), so the mean
        // of n draws has sd = limit/sqrt(3 n).
        let m = glorot_uniform(1000, 1000, &mut Prng::new(9));
        let limit = (6.0 / 2000.0f64).sqrt();
        let mean = m.data().iter().sum::<f64>() / 1e6;
        let sigma = limit / (3.0f64 * 1e6).sqrt();
        assert!(mean.abs() < 3.0 * sigma, "mean {mean} vs 3sigma {}", 3.0 * sigma);
    }

    #[test]
    fn scale_rows_and_transpose() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let s = m.scale_rows(&[2.0, 0.5]).unwrap();
        assert_eq!(s.row(0), &[2.0, 4.0]);
        assert_eq!(s.row(1), &[1.5, 2.0]);
        let t = m.transpose();
        assert_eq!(t.get(0, 1), 3.0);
        assert_eq!(t.get(1, 0), 2.0);
    }
}
