//! Small dense matrices and the nonnegative-matrix predicates the
//! consensus analysis relies on.

mod eigen;

use std::fmt::Write as _;
use std::ops::{Index, IndexMut};

use crate::error::{invalid, Error, Result};
use crate::graph::WeightedDigraph;

pub use eigen::{dominant_left_eigenvector, eigenvalues, second_eigenvalue_modulus, EigenPair};

/// Row-major dense real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, actual: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, actual: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (acc, v) in s.iter_mut().zip(self.row(i)) {
                *acc += v;
            }
        }
        s
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, actual: other.rows });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, actual: x.len() });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `w' A`, returned as a plain vector.
    pub fn left_mul_vec(&self, w: &[f64]) -> Result<Vec<f64>> {
        if w.len() != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, actual: w.len() });
        }
        let mut out = vec![0.0; self.cols];
        for (i, &wi) in w.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += wi * a;
            }
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::DimensionMismatch { expected: self.data.len(), actual: other.data.len() });
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// Row-major CSV, one matrix row per line, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for i in 0..self.rows {
            for (j, v) in self.row(i).iter().enumerate() {
                if j > 0 {
                    s.push(',');
                }
                write!(s, "{v:.16e}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    fn require_square(&self) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(invalid(format!("expected a square matrix, got {}x{}", self.rows, self.cols)))
        }
    }

    fn require_nonnegative(&self) -> Result<()> {
        match self.data.iter().position(|&v| v < 0.0 || v.is_nan()) {
            None => Ok(()),
            Some(k) => {
                Err(invalid(format!("entry ({}, {}) = {} is negative", k / self.cols, k % self.cols, self.data[k])))
            }
        }
    }

    /// Zero pattern as a boolean matrix (`true` where the entry is positive).
    fn pattern(&self) -> Vec<bool> {
        self.data.iter().map(|&v| v > 0.0).collect()
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// All entries ≥ −tol and every row sum within tol of 1.
pub fn is_row_stochastic(a: &DenseMatrix, tol: f64) -> Result<bool> {
    a.require_square()?;
    let nonneg = a.data.iter().all(|&v| v >= -tol);
    Ok(nonneg && a.row_sums().iter().all(|s| (s - 1.0).abs() <= tol))
}

/// Whether some power of `a` is entrywise positive.
///
/// Works on the boolean zero pattern by repeated squaring until the
/// exponent reaches the Wielandt bound `(n−1)² + 1`.
pub fn is_primitive(a: &DenseMatrix) -> Result<bool> {
    a.require_square()?;
    a.require_nonnegative()?;
    let n = a.rows;
    if n == 0 {
        return Err(invalid("empty matrix"));
    }
    let wielandt = (n - 1) * (n - 1) + 1;
    let mut p = a.pattern();
    let mut exponent = 1;
    // A^k > 0 for some k ≤ bound implies A^m > 0 for every m ≥ k, so it is
    // enough to test the first power of two at or above the bound.
    while exponent < wielandt {
        p = bool_square(&p, n);
        exponent *= 2;
        if p.iter().all(|&b| b) {
            return Ok(true);
        }
    }
    Ok(p.iter().all(|&b| b))
}

fn bool_square(p: &[bool], n: usize) -> Vec<bool> {
    let mut out = vec![false; n * n];
    for i in 0..n {
        for k in 0..n {
            if p[i * n + k] {
                for j in 0..n {
                    out[i * n + j] |= p[k * n + j];
                }
            }
        }
    }
    out
}

/// Whether `a` and `b` have zero entries in exactly the same places.
pub fn same_type(a: &DenseMatrix, b: &DenseMatrix) -> Result<bool> {
    if (a.rows, a.cols) != (b.rows, b.cols) {
        return Err(Error::DimensionMismatch { expected: a.data.len(), actual: b.data.len() });
    }
    a.require_nonnegative()?;
    b.require_nonnegative()?;
    Ok(a.pattern() == b.pattern())
}

/// Perron matrix `I − ε L(g)`; requires `0 < ε < Δ(g)`.
pub fn perron_matrix(g: &WeightedDigraph, eps: f64) -> Result<DenseMatrix> {
    let bound = g.epsilon_bound()?;
    if !(eps > 0.0 && eps < bound) {
        return Err(invalid(format!("step size {eps} outside (0, {bound})")));
    }
    let n = g.n();
    let mut p = DenseMatrix::identity(n);
    for i in 0..n {
        for arc in g.in_arcs(i) {
            p[(i, arc.from)] = eps * arc.weight;
            p[(i, i)] -= eps * arc.weight;
        }
    }
    Ok(p)
}

/// Recovers the graph whose Perron matrix with parameter `eps` is `p`:
/// every positive off-diagonal entry `[P]_ij` becomes arc `(j, i)` with
/// weight `[P]_ij / eps`.
pub fn graph_from_stochastic(p: &DenseMatrix, eps: f64) -> Result<WeightedDigraph> {
    p.require_square()?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid(format!("step size must be positive, got {eps}")));
    }
    if !is_row_stochastic(p, 1e-12)? {
        return Err(invalid("matrix is not row-stochastic"));
    }
    let n = p.rows;
    if let Some(i) = (0..n).find(|&i| p[(i, i)] <= 0.0) {
        return Err(invalid(format!("diagonal entry ({i}, {i}) is not positive")));
    }
    let mut arcs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && p[(i, j)] > 0.0 {
                arcs.push((j, i, p[(i, j)] / eps));
            }
        }
    }
    WeightedDigraph::new(n, arcs)
}
