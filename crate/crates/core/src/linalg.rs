//! Minimal dense linear algebra: a column-major matrix and Householder QR
//! least squares. Column-major layout keeps coordinate descent and column
//! standardization cache-friendly.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense column-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Scalar> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn from_columns(columns: Vec<Vec<F>>) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map(Vec::len).unwrap_or(0);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::InvalidArgument(
                "columns have unequal lengths".into(),
            ));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for col in columns {
            data.extend(col);
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> F {
        self.data[c * self.rows + r]
    }

    pub fn set(&mut self, r: usize, c: usize, v: F) {
        self.data[c * self.rows + r] = v;
    }

    pub fn column(&self, c: usize) -> &[F] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn column_mut(&mut self, c: usize) -> &mut [F] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    /// Row-vector product `x_row . w`.
    pub fn row_dot(&self, r: usize, w: &[F]) -> F {
        debug_assert_eq!(w.len(), self.cols);
        let mut acc = F::zero();
        for (c, wc) in w.iter().enumerate() {
            acc = acc + self.get(r, c) * *wc;
        }
        acc
    }
}

/// Solve `min ||A beta - b||_2` by Householder QR. No normal equations are
/// formed. A near-zero diagonal of R reports the offending column by name.
pub fn least_squares<F: Scalar>(
    a: &Matrix<F>,
    b: &[F],
    column_names: &[&str],
) -> Result<Vec<F>> {
    let n = a.rows();
    let p = a.cols();
    if b.len() != n {
        return Err(Error::InvalidArgument(format!(
            "rhs length {} does not match {} rows",
            b.len(),
            n
        )));
    }
    if n < p {
        return Err(Error::InvalidArgument(format!(
            "underdetermined system: {n} rows, {p} columns"
        )));
    }
    let mut r = a.clone();
    let mut qtb = b.to_vec();

    let mut scale = F::zero();
    for v in &r.data {
        scale = scale.max(v.abs());
    }
    let tol = F::from_f64c(1e-12) * scale.max(F::one());

    for j in 0..p {
        // Householder reflection for column j, rows j..n.
        let mut norm = F::zero();
        for i in j..n {
            let v = r.get(i, j);
            norm = norm + v * v;
        }
        let norm = norm.sqrt();
        if norm <= tol {
            let name = column_names.get(j).copied().unwrap_or("?");
            return Err(Error::RankDeficient {
                column: name.to_string(),
            });
        }
        let alpha = if r.get(j, j) >= F::zero() { -norm } else { norm };
        let mut v = vec![F::zero(); n - j];
        v[0] = r.get(j, j) - alpha;
        for i in j + 1..n {
            v[i - j] = r.get(i, j);
        }
        let vtv: F = v.iter().map(|x| *x * *x).sum();
        if vtv > F::zero() {
            for c in j..p {
                let mut dot = F::zero();
                for i in j..n {
                    dot = dot + v[i - j] * r.get(i, c);
                }
                let coef = (F::one() + F::one()) * dot / vtv;
                for i in j..n {
                    let val = r.get(i, c) - coef * v[i - j];
                    r.set(i, c, val);
                }
            }
            let mut dot = F::zero();
            for i in j..n {
                dot = dot + v[i - j] * qtb[i];
            }
            let coef = (F::one() + F::one()) * dot / vtv;
            for i in j..n {
                qtb[i] = qtb[i] - coef * v[i - j];
            }
        }
        r.set(j, j, alpha);
        // Diagonal degeneracy after reflection means collinearity.
        if r.get(j, j).abs() <= tol {
            let name = column_names.get(j).copied().unwrap_or("?");
            return Err(Error::RankDeficient {
                column: name.to_string(),
            });
        }
    }

    // Back substitution on the p x p upper triangle.
    let mut beta = vec![F::zero(); p];
    for j in (0..p).rev() {
        let mut acc = qtb[j];
        for c in j + 1..p {
            acc = acc - r.get(j, c) * beta[c];
        }
        beta[j] = acc / r.get(j, j);
    }
    Ok(beta)
}
