//! Dense real square matrices and the JSON matrix file format.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::path::Path;

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense `n x n` real matrix stored row-major, `n >= 2`, all entries finite.
#[derive(Clone, PartialEq)]
pub struct RealSquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl RealSquareMatrix {
    pub fn zeros(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self {
            n,
            data: vec![0.0; n * n],
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n)?;
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        Ok(m)
    }

    /// Builds a matrix from row-major entries, validating shape and finiteness.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        check_dim(n)?;
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        if let Some(k) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                row: k / n,
                col: k % n,
            });
        }
        Ok(Self { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        Self::from_row_major(n, rows.concat())
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        check_dim(n)?;
        let data = (0..n * n).map(|k| f(k / n, k % n)).collect();
        Self::from_row_major(n, data)
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::from_fn(diag.len(), |i, j| if i == j { diag[i] } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        Self {
            n,
            data: (0..n * n).map(|k| self.data[(k % n) * n + k / n]).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Self, s: f64) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + s * b)
                .collect(),
        })
    }

    /// `a * self + b * other`.
    pub fn lincomb(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                for (o, b) in out[i * n..(i + 1) * n].iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        Ok(Self { n, data: out })
    }

    /// `self * other - other * self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        let ab = self.matmul(other)?;
        let ba = other.matmul(self)?;
        ab.add_scaled(&ba, -1.0)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Spectral norm: the largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        let sv = self
            .to_faer()
            .singular_values()
            .expect("singular value iteration converges for finite input");
        sv.into_iter().fold(0.0, f64::max)
    }

    /// Rescales to unit spectral norm. The zero matrix is returned unchanged.
    pub fn normalized(&self) -> Self {
        let s = self.spectral_norm();
        if s > 0.0 {
            self.scaled(1.0 / s)
        } else {
            self.clone()
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.n;
        (0..n).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    /// Checks that entry `(i, j)` depends only on `(j - i) mod n`; returns the
    /// first offending entry otherwise.
    pub fn circulant_violation(&self, tol: f64) -> Option<(usize, usize)> {
        let n = self.n;
        for i in 1..n {
            for j in 0..n {
                let reference = self[(0, (j + n - i) % n)];
                if (self[(i, j)] - reference).abs() > tol {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// First row of a circulant matrix: `c[m]` is the coefficient of shift `m`.
    pub fn circulant_symbol(&self) -> Vec<f64> {
        self.data[..self.n].to_vec()
    }

    pub fn to_faer(&self) -> Mat<f64> {
        Mat::from_fn(self.n, self.n, |i, j| self[(i, j)])
    }

    pub fn to_complex(&self) -> Mat<c64> {
        Mat::from_fn(self.n, self.n, |i, j| c64::new(self[(i, j)], 0.0))
    }

    pub fn from_faer(m: MatRef<'_, f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        Self::from_fn(m.nrows(), |i, j| m[(i, j)])
    }

    pub fn check_same(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }

    pub fn to_file_format(&self) -> MatrixFile {
        MatrixFile {
            n: self.n,
            rows: self.rows(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file_format()).expect("matrix serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MatrixFile =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        file.into_matrix()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json())
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidDimension {
            n,
            reason: "matrices must be at least 2x2",
        });
    }
    Ok(())
}

impl Index<(usize, usize)> for RealSquareMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for RealSquareMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl fmt::Debug for RealSquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RealSquareMatrix({}x{})", self.n, self.n)?;
        for row in self.data.chunks(self.n) {
            writeln!(f, "  {row:?}")?;
        }
        Ok(())
    }
}

/// On-disk matrix representation: `{"n": 3, "rows": [[...], [...], [...]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFile {
    pub n: usize,
    pub rows: Vec<Vec<f64>>,
}

impl MatrixFile {
    pub fn into_matrix(self) -> Result<RealSquareMatrix> {
        if self.rows.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: self.rows.len(),
            });
        }
        RealSquareMatrix::from_rows(&self.rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_and_non_finite() {
        assert!(matches!(
            RealSquareMatrix::zeros(1),
            Err(Error::InvalidDimension { n: 1, .. })
        ));
        let err = RealSquareMatrix::from_row_major(2, vec![0.0, f64::NAN, 0.0, 0.0]).unwrap_err();
        assert_eq!(err, Error::NonFinite { row: 0, col: 1 });
    }

    #[test]
    fn json_round_trip() {
        let m = RealSquareMatrix::from_rows(&[vec![1.0, -2.5], vec![0.125, 3.0]]).unwrap();
        let text = m.to_json();
        assert_eq!(text, r#"{"n":2,"rows":[[1.0,-2.5],[0.125,3.0]]}"#);
        assert_eq!(RealSquareMatrix::from_json(&text).unwrap(), m);
    }

    #[test]
    fn json_shape_is_checked() {
        let bad = r#"{"n":3,"rows":[[1,2],[3,4]]}"#;
        assert!(RealSquareMatrix::from_json(bad).is_err());
        let ragged = r#"{"n":2,"rows":[[1,2],[3]]}"#;
        assert!(RealSquareMatrix::from_json(ragged).is_err());
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = RealSquareMatrix::from_diagonal(&[1.0, -3.0, 2.0]).unwrap();
        assert!((m.spectral_norm() - 3.0).abs() < 1e-14);
        assert!((m.normalized().spectral_norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn commutator_of_diagonals_vanishes() {
        let a = RealSquareMatrix::from_diagonal(&[1.0, 2.0, 3.0]).unwrap();
        let b = RealSquareMatrix::from_diagonal(&[4.0, -1.0, 0.5]).unwrap();
        assert_eq!(a.commutator(&b).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn circulant_detection() {
        let c = RealSquareMatrix::from_fn(4, |i, j| [1.0, 2.0, 3.0, 4.0][(j + 4 - i) % 4]).unwrap();
        assert_eq!(c.circulant_violation(0.0), None);
        let mut d = c.clone();
        d[(2, 1)] += 1.0;
        assert_eq!(d.circulant_violation(0.0), Some((2, 1)));
    }
}
