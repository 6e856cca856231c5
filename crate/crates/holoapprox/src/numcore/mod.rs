//! Small dense linear algebra, norms, exact trigonometric integration and
//! forward-mode dual numbers shared by every other module.
//!
//! Everything here works on `f64` slices and tiny owned matrices; dimensions
//! are at desk scale (at most 8 per axis) and are checked on every operation.

mod dual;
mod feasibility;
mod trig;

pub use dual::{Dual, Scalar};
pub use feasibility::point_in_hull;
pub use trig::{integrate_trigpoly, simpson, TrigPoly, DEFAULT_QUADRATURE_NODES};

use crate::error::{Error, Result};

/// Sup norm on the target space. The empty vector has norm 0, which is the
/// convention needed for 0-dimensional targets.
pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Euclidean norm on the source space.
pub fn euclid_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

// `+ 0.0` keeps the empty sum at positive zero (an empty f64 sum is -0.0).
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() + 0.0
}

/// Evaluates `mᵀ (I + y yᵀ)⁻¹ m` through the rank-one inverse identity
/// `(I + y yᵀ)⁻¹ = I − y yᵀ / (1 + ‖y‖²)`, i.e. returns
/// `‖m‖² − ⟨m, y⟩² / (1 + ‖y‖²)`.
///
/// This is the square of the norm of the linear form `u ↦ ⟨m, u⟩` restricted
/// to the graph `{(u, ⟨y, u⟩)}`, the quantity behind the restricted first
/// order clause of the approximation relation; it is always nonnegative.
pub fn rank_one_inverse_quadratic(m: &[f64], y: &[f64]) -> Result<f64> {
    if m.len() != y.len() {
        return Err(Error::DimMismatch {
            context: "rank_one_inverse_quadratic",
            expected: m.len(),
            got: y.len(),
        });
    }
    let mm = dot(m, m);
    let my = dot(m, y);
    let yy = dot(y, y);
    // Cauchy-Schwarz keeps this nonnegative; clamp the roundoff tail.
    Ok((mm - my * my / (1.0 + yy)).max(0.0))
}

/// Dense row-major matrix of small dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        for row in &rows {
            if row.len() != c {
                return Err(Error::DimMismatch {
                    context: "Matrix::from_rows",
                    expected: c,
                    got: row.len(),
                });
            }
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.rows && j < self.cols, "matrix index out of range");
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.rows && j < self.cols, "matrix index out of range");
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        assert!(i < self.rows);
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        assert!(j < self.cols);
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimMismatch {
                context: "Matrix::mul_vec",
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// Drops column `j`, returning an `rows × (cols−1)` matrix.
    pub fn drop_col(&self, j: usize) -> Matrix {
        assert!(j < self.cols);
        let mut out = Matrix::zeros(self.rows, self.cols - 1);
        for i in 0..self.rows {
            let mut q = 0;
            for c in 0..self.cols {
                if c != j {
                    out.set(i, q, self.get(i, c));
                    q += 1;
                }
            }
        }
        out
    }
}
