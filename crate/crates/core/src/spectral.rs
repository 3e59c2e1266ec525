//! Dense non-symmetric eigendecomposition with biorthogonal left/right
//! eigenvectors.
//!
//! The right eigenvectors `v_i` come from the eigensolver, normalized to unit
//! 2-norm with the largest-magnitude component made real and positive. The
//! left eigenvectors are the rows `u_i^*` of `V^{-1}`, so `u_j^* v_i = δ_ij`
//! holds up to the accuracy of one LU inversion.

use std::cmp::Ordering;

use faer::linalg::solvers::DenseSolveCore;
use faer::{c64, ColRef, Mat, MatRef, RowRef};

use crate::error::{Error, Result};
use crate::matrix::RealSquareMatrix;

/// Relative tolerances, each multiplied by `‖M‖₂` at decomposition time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// `|Im λ| <= real * ‖M‖₂` classifies an eigenvalue as real.
    pub real: f64,
    /// Largest admissible `|λ_j - conj(λ_i)|` when pairing.
    pub pair: f64,
    /// Smallest admissible eigenvalue gap.
    pub degeneracy: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            real: 1e-9,
            pair: 1e-8,
            degeneracy: 1e-10,
        }
    }
}

/// Eigenvalues with biorthogonally normalized right and left eigenvectors.
#[derive(Debug, Clone)]
pub struct BiorthogonalEigenSystem {
    eigenvalues: Vec<c64>,
    /// Column `i` is `v_i`.
    right: Mat<c64>,
    /// Row `i` is `u_i^*`.
    left: Mat<c64>,
    pairing: Vec<usize>,
    condition: Vec<f64>,
    norm: f64,
    real_tolerance: f64,
    pair_tolerance: f64,
    degeneracy_tolerance: f64,
}

/// Largest condition number of the right-eigenvector matrix for which the
/// inverted left vectors are trusted: `1/sqrt(ulp)`.
pub fn max_basis_condition() -> f64 {
    1.0 / f64::EPSILON.sqrt()
}

/// Orders eigenvalues ascending by real part, ties by imaginary part.
pub fn spectral_order(a: &c64, b: &c64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Eigenvalues only, in spectral order. No simplicity requirement.
pub fn eigenvalues(m: &RealSquareMatrix) -> Result<Vec<c64>> {
    let mut values = m
        .to_faer()
        .eigenvalues()
        .map_err(|_| Error::SolverFailure)?;
    values.sort_by(spectral_order);
    Ok(values)
}

/// Decomposes `m` with default tolerances. `real_tolerance` overrides the
/// absolute threshold for classifying an eigenvalue as real.
pub fn decompose(m: &RealSquareMatrix, real_tolerance: Option<f64>) -> Result<BiorthogonalEigenSystem> {
    decompose_with(m, Tolerances::default(), real_tolerance)
}

pub fn decompose_with(
    m: &RealSquareMatrix,
    tol: Tolerances,
    real_tolerance: Option<f64>,
) -> Result<BiorthogonalEigenSystem> {
    let n = m.dim();
    let norm = m.spectral_norm();
    let scale = if norm > 0.0 { norm } else { f64::MIN_POSITIVE };
    let real_tolerance = real_tolerance.unwrap_or(tol.real * scale);
    let pair_tolerance = tol.pair * scale;
    let degeneracy_tolerance = tol.degeneracy * scale;

    let evd = m.to_faer().eigen().map_err(|_| Error::SolverFailure)?;
    let raw_values: Vec<c64> = (0..n).map(|i| evd.S()[i]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| spectral_order(&raw_values[a], &raw_values[b]));
    let eigenvalues: Vec<c64> = order.iter().map(|&k| raw_values[k]).collect();

    if let Some((i, j, gap)) = min_gap(&eigenvalues) {
        if gap <= degeneracy_tolerance {
            return Err(Error::DegenerateSpectrum {
                i,
                j,
                gap,
                tolerance: degeneracy_tolerance,
            });
        }
    }

    let raw_vectors = evd.U();
    let mut right = Mat::<c64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = normalize_gauge(raw_vectors.col(src));
        for r in 0..n {
            right[(r, dst)] = col[r];
        }
    }

    let condition_of_basis = matrix_condition(right.as_ref());
    if condition_of_basis.is_nan() || condition_of_basis > max_basis_condition() {
        return Err(Error::IllConditionedBasis {
            condition: condition_of_basis,
        });
    }
    let left = right.partial_piv_lu().inverse();

    let pairing = conjugate_pairing(&eigenvalues, real_tolerance, pair_tolerance)?;
    let condition = (0..n).map(|i| row_norm(left.row(i))).collect();

    Ok(BiorthogonalEigenSystem {
        eigenvalues,
        right,
        left,
        pairing,
        condition,
        norm,
        real_tolerance,
        pair_tolerance,
        degeneracy_tolerance,
    })
}

fn min_gap(values: &[c64]) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            let gap = (values[i] - values[j]).norm();
            if best.is_none_or(|(_, _, g)| gap < g) {
                best = Some((i, j, gap));
            }
        }
    }
    best
}

/// Unit 2-norm, largest-magnitude component real and positive.
fn normalize_gauge(v: ColRef<'_, c64>) -> Vec<c64> {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut pivot = 0;
    let mut largest = -1.0;
    for (k, z) in v.iter().enumerate() {
        let a = z.norm();
        if a > largest {
            largest = a;
            pivot = k;
        }
    }
    let phase = v[pivot].conj() / v[pivot].norm();
    v.iter()
        .enumerate()
        .map(|(k, z)| {
            let w = z * phase / norm;
            if k == pivot {
                c64::new(w.norm(), 0.0)
            } else {
                w
            }
        })
        .collect()
}

fn matrix_condition(m: MatRef<'_, c64>) -> f64 {
    match m.singular_values() {
        Ok(sv) => {
            let hi = sv.iter().cloned().fold(0.0, f64::max);
            let lo = sv.iter().cloned().fold(f64::INFINITY, f64::min);
            if lo > 0.0 {
                hi / lo
            } else {
                f64::INFINITY
            }
        }
        Err(_) => f64::INFINITY,
    }
}

fn row_norm(r: RowRef<'_, c64>) -> f64 {
    r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Greedy nearest-conjugate matching over eigenvalues in spectral order.
fn conjugate_pairing(values: &[c64], real_tol: f64, pair_tol: f64) -> Result<Vec<usize>> {
    let n = values.len();
    let mut pairing: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        if values[i].im.abs() <= real_tol {
            pairing[i] = Some(i);
        }
    }
    for i in 0..n {
        if pairing[i].is_some() {
            continue;
        }
        let target = values[i].conj();
        let best = (0..n)
            .filter(|&j| j != i && pairing[j].is_none())
            .map(|j| (j, (values[j] - target).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((j, d)) if d <= pair_tol => {
                pairing[i] = Some(j);
                pairing[j] = Some(i);
            }
            Some((_, d)) => return Err(Error::UnpairedEigenvalue { index: i, mismatch: d }),
            None => {
                return Err(Error::UnpairedEigenvalue {
                    index: i,
                    mismatch: f64::INFINITY,
                })
            }
        }
    }
    Ok(pairing.into_iter().map(|p| p.expect("all indices paired")).collect())
}

impl BiorthogonalEigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[c64] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, i: usize) -> c64 {
        self.eigenvalues[i]
    }

    /// Matrix whose columns are the right eigenvectors.
    pub fn right(&self) -> MatRef<'_, c64> {
        self.right.as_ref()
    }

    /// Matrix whose rows are the conjugate-transposed left eigenvectors `u_i^*`.
    pub fn left(&self) -> MatRef<'_, c64> {
        self.left.as_ref()
    }

    pub fn right_vector(&self, i: usize) -> ColRef<'_, c64> {
        self.right.col(i)
    }

    /// The left eigenvector `u_i` itself (column form, i.e. the conjugate of
    /// row `i` of `V^{-1}`).
    pub fn left_vector(&self, i: usize) -> Vec<c64> {
        self.left.row(i).iter().map(|z| z.conj()).collect()
    }

    /// The conjugation involution π as a full permutation.
    pub fn pairing(&self) -> &[usize] {
        &self.pairing
    }

    /// Index of the conjugate partner of a non-real eigenvalue; `None` when
    /// `λ_i` is real.
    pub fn conjugate_partner(&self, i: usize) -> Option<usize> {
        let p = self.pairing[i];
        (p != i).then_some(p)
    }

    pub fn is_real(&self, i: usize) -> bool {
        self.pairing[i] == i
    }

    /// `κ_i = ‖u_i‖₂`.
    pub fn condition_number(&self, i: usize) -> f64 {
        self.condition[i]
    }

    pub fn condition_numbers(&self) -> &[f64] {
        &self.condition
    }

    /// Spectral norm of the decomposed matrix.
    pub fn matrix_norm(&self) -> f64 {
        self.norm
    }

    pub fn real_tolerance(&self) -> f64 {
        self.real_tolerance
    }

    pub fn pair_tolerance(&self) -> f64 {
        self.pair_tolerance
    }

    pub fn degeneracy_tolerance(&self) -> f64 {
        self.degeneracy_tolerance
    }

    pub fn real_count(&self) -> usize {
        (0..self.dim()).filter(|&i| self.is_real(i)).count()
    }

    /// `max_{i,j} |u_j^* v_i - δ_ij|`.
    pub fn biorthogonality_residual(&self) -> f64 {
        let prod = &self.left * &self.right;
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[(i, j)] - c64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// `max_i ‖M v_i - λ_i v_i‖₂`.
    pub fn eigen_residual(&self, m: &RealSquareMatrix) -> f64 {
        let mv = &m.to_complex() * &self.right;
        let n = self.dim();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|r| (mv[(r, i)] - self.eigenvalues[i] * self.right[(r, i)]).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// `max_i ‖u_i^* M - λ_i u_i^*‖₂`.
    pub fn left_residual(&self, m: &RealSquareMatrix) -> f64 {
        let um = &self.left * &m.to_complex();
        let n = self.dim();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|c| (um[(i, c)] - self.eigenvalues[i] * self.left[(i, c)]).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}
