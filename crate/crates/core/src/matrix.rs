//! Dense row-major matrices and vectors over `f64`.
//!
//! Only what the filter needs: products, transposes, elementwise sums,
//! block tiling and a Cholesky-based symmetric positive definite solve.
//! Every value is finite; operations that would produce NaN or infinity
//! return [`Error::NonFinite`] instead.

use std::fmt;
use std::ops::Index;

use crate::error::{Error, Result};

/// Absolute tolerance on `max |s[i][j] - s[j][i]|` accepted by [`Matrix::solve_spd`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

fn check_finite(values: &[f64], op: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(op))
    }
}

/// A finite real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    entries: Vec<f64>,
}

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        check_finite(&entries, "Vector::new")?;
        Ok(Self { entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&v| v == 0.0)
    }

    pub fn dot(&self, other: &Vector) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::dims(
                "dot",
                format!("{} vs {}", self.dim(), other.dim()),
            ));
        }
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        self.zip_with(other, "vector add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        self.zip_with(other, "vector sub", |a, b| a - b)
    }

    /// Copies `self` into a column matrix.
    pub fn to_column(&self) -> Matrix {
        Matrix {
            rows: self.dim(),
            cols: 1,
            data: self.entries.clone(),
        }
    }

    fn zip_with(
        &self,
        other: &Vector,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Vector> {
        if self.dim() != other.dim() {
            return Err(Error::dims(op, format!("{} vs {}", self.dim(), other.dim())));
        }
        let entries: Vec<f64> = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(&a, &b)| f(a, b))
            .collect();
        check_finite(&entries, op)?;
        Ok(Vector { entries })
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.entries[i]
    }
}

/// A finite real matrix stored in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims(
                "from_row_major",
                format!("{} entries for a {rows}x{cols} matrix", data.len()),
            ));
        }
        check_finite(&data, "Matrix::from_row_major")?;
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::dims("from_rows", "ragged rows"));
        }
        Self::from_row_major(rows.len(), cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::dims(
                "matmul",
                format!(
                    "{}x{} times {}x{}",
                    self.rows, self.cols, other.rows, other.cols
                ),
            ));
        }
        let n = other.cols;
        let mut out = Matrix::zeros(self.rows, n);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for (k, &a) in self.row(i).iter().enumerate() {
                // Transition and measurement matrices are mostly zeros.
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        check_finite(&out.data, "matmul")?;
        Ok(out)
    }

    pub fn mul_vec(&self, v: &Vector) -> Result<Vector> {
        if self.cols != v.dim() {
            return Err(Error::dims(
                "mul_vec",
                format!("{}x{} times vector of dim {}", self.rows, self.cols, v.dim()),
            ));
        }
        let entries: Vec<f64> = (0..self.rows)
            .map(|i| self.row(i).iter().zip(v.as_slice()).map(|(a, b)| a * b).sum())
            .collect();
        check_finite(&entries, "mul_vec")?;
        Ok(Vector { entries })
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Result<Matrix> {
        let data: Vec<f64> = self.data.iter().map(|v| v * c).collect();
        check_finite(&data, "scale")?;
        Ok(Matrix { data, ..*self })
    }

    /// Tiles nine equally sized square blocks, given row by row, into a 3x3 block matrix.
    pub fn block3x3(blocks: [&Matrix; 9]) -> Result<Matrix> {
        let d = blocks[0].rows;
        if blocks.iter().any(|b| b.rows != d || b.cols != d) {
            return Err(Error::dims(
                "block3x3",
                "all nine blocks must be square with the same dimension",
            ));
        }
        let n = 3 * d;
        let mut out = Matrix::zeros(n, n);
        for (idx, block) in blocks.iter().enumerate() {
            let (bi, bj) = (idx / 3, idx % 3);
            for i in 0..d {
                let dst = (bi * d + i) * n + bj * d;
                out.data[dst..dst + d].copy_from_slice(block.row(i));
            }
        }
        Ok(out)
    }

    /// Largest `|m[i][j] - m[j][i]|`; infinite for non-square input.
    pub fn max_asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Returns `(M + M^T) / 2`.
    pub fn symmetrized(&self) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::dims(
                "symmetrized",
                format!("{}x{} is not square", self.rows, self.cols),
            ));
        }
        let n = self.rows;
        let mut out = self.clone();
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (self.get(i, j) + self.get(j, i));
                out.data[i * n + j] = avg;
                out.data[j * n + i] = avg;
            }
        }
        Ok(out)
    }

    /// Lower-triangular Cholesky factor `L` with `L L^T = self`.
    pub fn cholesky(&self) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::dims(
                "cholesky",
                format!("{}x{} is not square", self.rows, self.cols),
            ));
        }
        let n = self.rows;
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut diag = self.get(j, j);
            for k in 0..j {
                diag -= l.data[j * n + k] * l.data[j * n + k];
            }
            if diag.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || !diag.is_finite() {
                return Err(Error::NotPositiveDefinite {
                    pivot: j,
                    value: diag,
                });
            }
            let ljj = diag.sqrt();
            l.data[j * n + j] = ljj;
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l.data[i * n + k] * l.data[j * n + k];
                }
                l.data[i * n + j] = s / ljj;
            }
        }
        Ok(l)
    }

    /// Solves `self * X = b` for symmetric positive definite `self`.
    ///
    /// The inverse is never formed: `self` is factored as `L L^T` and each
    /// column of `b` goes through a forward and a backward substitution.
    pub fn solve_spd(&self, b: &Matrix) -> Result<Matrix> {
        if !self.is_square() || self.rows != b.rows {
            return Err(Error::dims(
                "solve_spd",
                format!(
                    "{}x{} system with {}x{} right-hand side",
                    self.rows, self.cols, b.rows, b.cols
                ),
            ));
        }
        let max_asymmetry = self.max_asymmetry();
        if max_asymmetry > SYMMETRY_TOLERANCE {
            return Err(Error::NotSymmetric { max_asymmetry });
        }
        let l = self.cholesky()?;
        let n = self.rows;
        let m = b.cols;
        let mut x = b.clone();
        for c in 0..m {
            // L y = b
            for i in 0..n {
                let mut s = x.data[i * m + c];
                for k in 0..i {
                    s -= l.data[i * n + k] * x.data[k * m + c];
                }
                x.data[i * m + c] = s / l.data[i * n + i];
            }
            // L^T x = y
            for i in (0..n).rev() {
                let mut s = x.data[i * m + c];
                for k in (i + 1)..n {
                    s -= l.data[k * n + i] * x.data[k * m + c];
                }
                x.data[i * m + c] = s / l.data[i * n + i];
            }
        }
        check_finite(&x.data, "solve_spd")?;
        Ok(x)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Column `j` as a vector.
    pub fn column(&self, j: usize) -> Vector {
        Vector {
            entries: (0..self.rows).map(|i| self.get(i, j)).collect(),
        }
    }

    fn zip_with(&self, other: &Matrix, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dims(
                op,
                format!(
                    "{}x{} vs {}x{}",
                    self.rows, self.cols, other.rows, other.cols
                ),
            ));
        }
        let data: Vec<f64> = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        check_finite(&data, op)?;
        Ok(Matrix { data, ..*self })
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let cells: Vec<String> = self.row(i).iter().map(|v| format!("{v:.6}")).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}
