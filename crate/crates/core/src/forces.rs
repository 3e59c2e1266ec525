//! Eigenvalue velocities, accelerations and their force decomposition.
//!
//! Everything here is expressed through the coupling matrix
//! `c_ij = u_i^* Ṁ v_j`. The acceleration of a simple eigenvalue is
//!
//! ```text
//! λ̈_i = u_i^* M̈ v_i + 2 Σ_{j≠i} c_ij c_ji / (λ_i - λ_j)
//! ```
//!
//! and the sum splits into the term from the conjugate partner `ī` (the
//! conjugate force) and the remaining eigenvalues.

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::RealSquareMatrix;
use crate::spectral::BiorthogonalEigenSystem;

/// Pairwise terms with `|λ_i - λ_j|` below this multiple of `‖M‖₂` are
/// flagged as singular in a [`ForceReport`].
pub const COLLISION_TOLERANCE: f64 = 1e-8;

/// Relative imaginary part below which an interaction factor counts as real.
pub const CENTRAL_TOLERANCE: f64 = 1e-10;

/// The matrix `c_ij = u_i^* Ṁ v_j`.
#[derive(Debug, Clone)]
pub struct CouplingCoefficients {
    c: Mat<c64>,
}

impl CouplingCoefficients {
    pub fn dim(&self) -> usize {
        self.c.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.c[(i, j)]
    }

    pub fn as_mat(&self) -> MatRef<'_, c64> {
        self.c.as_ref()
    }

    /// The eigenvalue velocities `c_ii`.
    pub fn diagonal(&self) -> Vec<c64> {
        (0..self.dim()).map(|i| self.c[(i, i)]).collect()
    }
}

fn check_dim(sys: &BiorthogonalEigenSystem, m: &RealSquareMatrix) -> Result<()> {
    if m.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: m.dim(),
        });
    }
    Ok(())
}

fn check_gaps(sys: &BiorthogonalEigenSystem) -> Result<()> {
    let l = sys.eigenvalues();
    for i in 0..l.len() {
        for j in i + 1..l.len() {
            let gap = (l[i] - l[j]).norm();
            if gap <= sys.degeneracy_tolerance() {
                return Err(Error::DegenerateSpectrum {
                    i,
                    j,
                    gap,
                    tolerance: sys.degeneracy_tolerance(),
                });
            }
        }
    }
    Ok(())
}

/// `U Ṁ V` for a real `Ṁ`.
fn sandwich(sys: &BiorthogonalEigenSystem, m: &RealSquareMatrix) -> Mat<c64> {
    let mv = &m.to_complex() * sys.right();
    sys.left() * &mv
}

pub fn couplings(sys: &BiorthogonalEigenSystem, mdot: &RealSquareMatrix) -> Result<CouplingCoefficients> {
    check_dim(sys, mdot)?;
    Ok(CouplingCoefficients {
        c: sandwich(sys, mdot),
    })
}

/// `λ̇_i = u_i^* Ṁ v_i`.
pub fn velocity(sys: &BiorthogonalEigenSystem, mdot: &RealSquareMatrix) -> Result<Vec<c64>> {
    check_dim(sys, mdot)?;
    let n = sys.dim();
    let mv = &mdot.to_complex() * sys.right();
    Ok((0..n)
        .map(|i| (0..n).map(|k| sys.left()[(i, k)] * mv[(k, i)]).sum())
        .collect())
}

/// First derivatives of the eigenvectors in the gauge `u_i^* v̇_i = 0`.
#[derive(Debug, Clone)]
pub struct EigvecDerivatives {
    /// Column `i` is `v̇_i`.
    pub right: Mat<c64>,
    /// Row `i` is `u̇_i^*`.
    pub left: Mat<c64>,
}

pub fn eigvec_derivatives(sys: &BiorthogonalEigenSystem, mdot: &RealSquareMatrix) -> Result<EigvecDerivatives> {
    check_gaps(sys)?;
    let c = couplings(sys, mdot)?;
    let n = sys.dim();
    let l = sys.eigenvalues();
    // Coefficients in the eigenbasis: v̇_i = Σ_j a_ji v_j, u̇_i^* = Σ_j b_ij u_j^*.
    let a = Mat::<c64>::from_fn(n, n, |j, i| {
        if i == j {
            c64::new(0.0, 0.0)
        } else {
            c.get(j, i) / (l[i] - l[j])
        }
    });
    let b = Mat::<c64>::from_fn(n, n, |i, j| {
        if i == j {
            c64::new(0.0, 0.0)
        } else {
            c.get(i, j) / (l[i] - l[j])
        }
    });
    Ok(EigvecDerivatives {
        right: sys.right() * &a,
        left: &b * sys.left(),
    })
}

/// `λ̈_i = u_i^* M̈ v_i + 2 Σ_{j≠i} c_ij c_ji / (λ_i - λ_j)`.
pub fn acceleration(
    sys: &BiorthogonalEigenSystem,
    mdot: &RealSquareMatrix,
    mddot: &RealSquareMatrix,
) -> Result<Vec<c64>> {
    check_gaps(sys)?;
    let c = couplings(sys, mdot)?;
    let inertial = velocity(sys, mddot)?;
    let l = sys.eigenvalues();
    let n = sys.dim();
    Ok((0..n)
        .map(|i| {
            let sum: c64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| c.get(i, j) * c.get(j, i) / (l[i] - l[j]))
                .sum();
            inertial[i] + 2.0 * sum
        })
        .collect())
}

/// Decomposition of one eigenvalue's acceleration.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenForce {
    pub index: usize,
    pub lambda: c64,
    pub velocity: c64,
    /// `u_i^* M̈ v_i`.
    pub inertial: c64,
    /// `2 c_iī c_īi / (λ_i - λ_ī)`; zero for a real eigenvalue.
    pub cc: c64,
    /// `2 Σ_{j∉{i,ī}} c_ij c_ji / (λ_i - λ_j)`.
    pub other: c64,
    pub total: c64,
    /// Indices `j` with `|λ_i - λ_j|` below the collision tolerance.
    pub singular_pairs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForceReport {
    pub forces: Vec<EigenForce>,
}

impl ForceReport {
    pub fn len(&self) -> usize {
        self.forces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forces.is_empty()
    }

    pub fn has_singularity(&self) -> bool {
        self.forces.iter().any(|f| !f.singular_pairs.is_empty())
    }

    pub fn records(&self) -> Vec<ForceRecord> {
        self.forces.iter().map(ForceRecord::from).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.records()).expect("report serializes")
    }
}

/// Flat serialized form of an [`EigenForce`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceRecord {
    pub index: usize,
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub velocity_re: f64,
    pub velocity_im: f64,
    pub inertial_re: f64,
    pub inertial_im: f64,
    pub cc_re: f64,
    pub cc_im: f64,
    pub other_re: f64,
    pub other_im: f64,
    pub total_re: f64,
    pub total_im: f64,
    pub singular_pairs: Vec<usize>,
}

impl From<&EigenForce> for ForceRecord {
    fn from(f: &EigenForce) -> Self {
        Self {
            index: f.index,
            lambda_re: f.lambda.re,
            lambda_im: f.lambda.im,
            velocity_re: f.velocity.re,
            velocity_im: f.velocity.im,
            inertial_re: f.inertial.re,
            inertial_im: f.inertial.im,
            cc_re: f.cc.re,
            cc_im: f.cc.im,
            other_re: f.other.re,
            other_im: f.other.im,
            total_re: f.total.re,
            total_im: f.total.im,
            singular_pairs: f.singular_pairs.clone(),
        }
    }
}

pub fn force_decomposition(
    sys: &BiorthogonalEigenSystem,
    mdot: &RealSquareMatrix,
    mddot: &RealSquareMatrix,
) -> Result<ForceReport> {
    check_gaps(sys)?;
    let c = couplings(sys, mdot)?;
    let inertial = velocity(sys, mddot)?;
    Ok(decompose_couplings(sys, &c, &inertial))
}

/// Force decomposition from precomputed couplings and inertial terms.
pub fn decompose_couplings(
    sys: &BiorthogonalEigenSystem,
    c: &CouplingCoefficients,
    inertial: &[c64],
) -> ForceReport {
    let n = sys.dim();
    let l = sys.eigenvalues();
    let collision = COLLISION_TOLERANCE * sys.matrix_norm();
    let forces = (0..n)
        .map(|i| {
            let partner = sys.conjugate_partner(i);
            let cc = match partner {
                Some(p) => 2.0 * c.get(i, p) * c.get(p, i) / (l[i] - l[p]),
                None => c64::new(0.0, 0.0),
            };
            let mut other = c64::new(0.0, 0.0);
            let mut singular_pairs = Vec::new();
            for j in 0..n {
                if j == i {
                    continue;
                }
                if (l[i] - l[j]).norm() < collision {
                    singular_pairs.push(j);
                }
                if Some(j) != partner {
                    other += c.get(i, j) * c.get(j, i) / (l[i] - l[j]);
                }
            }
            other *= 2.0;
            EigenForce {
                index: i,
                lambda: l[i],
                velocity: c.get(i, i),
                inertial: inertial[i],
                cc,
                other,
                total: inertial[i] + cc + other,
                singular_pairs,
            }
        })
        .collect();
    ForceReport { forces }
}

/// Unit vector `r̂_ij = (λ_i - λ_j)/|λ_i - λ_j|` pointing from `λ_j` to `λ_i`.
pub fn pair_direction(lambda_i: c64, lambda_j: c64) -> Result<c64> {
    let d = lambda_i - lambda_j;
    let r = d.norm();
    if r == 0.0 {
        return Err(Error::DivisionByZero);
    }
    Ok(d / r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interaction {
    CentralAttractive,
    CentralRepulsive,
    NonCentral,
}

/// Classifies the pair term `c_ij c_ji / (λ_i - λ_j) = f (λ_i - λ_j)` by the
/// factor `f`.
pub fn classify_interaction(
    sys: &BiorthogonalEigenSystem,
    mdot: &RealSquareMatrix,
    i: usize,
    j: usize,
) -> Result<Interaction> {
    let n = sys.dim();
    if i >= n || j >= n || i == j {
        return Err(Error::InvalidParams(format!(
            "interaction needs two distinct indices below {n}, got ({i}, {j})"
        )));
    }
    let c = couplings(sys, mdot)?;
    let d = sys.eigenvalue(i) - sys.eigenvalue(j);
    let f = c.get(i, j) * c.get(j, i) / (d * d);
    Ok(classify_factor(f))
}

pub fn classify_factor(f: c64) -> Interaction {
    if f.im.abs() > CENTRAL_TOLERANCE * f.norm() {
        Interaction::NonCentral
    } else if f.re < 0.0 {
        Interaction::CentralAttractive
    } else if f.re > 0.0 {
        Interaction::CentralRepulsive
    } else {
        Interaction::NonCentral
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::decompose;

    fn sample(n: usize) -> RealSquareMatrix {
        RealSquareMatrix::from_fn(n, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0 + 0.1 * i as f64).unwrap()
    }

    #[test]
    fn identity_velocity_is_one_and_couplings_are_identity() {
        let m = sample(5);
        let sys = decompose(&m, None).unwrap();
        let id = RealSquareMatrix::identity(5).unwrap();
        let c = couplings(&sys, &id).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((c.get(i, j) - c64::new(e, 0.0)).norm() < 1e-12);
            }
        }
        let report = force_decomposition(&sys, &id, &RealSquareMatrix::zeros(5).unwrap()).unwrap();
        for f in &report.forces {
            assert!(f.cc.norm() < 1e-12);
            assert!(f.total.norm() < 1e-10);
        }
    }

    #[test]
    fn dimension_is_checked() {
        let sys = decompose(&sample(4), None).unwrap();
        let err = couplings(&sys, &sample(3)).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 4, found: 3 });
    }

    #[test]
    fn factor_classification() {
        assert_eq!(classify_factor(c64::new(-2.0, 0.0)), Interaction::CentralAttractive);
        assert_eq!(classify_factor(c64::new(0.5, 1e-12)), Interaction::CentralRepulsive);
        assert_eq!(classify_factor(c64::new(0.5, 0.1)), Interaction::NonCentral);
    }

    #[test]
    fn json_keys() {
        let m = sample(3);
        let sys = decompose(&m, None).unwrap();
        let report = force_decomposition(&sys, &m, &m).unwrap();
        let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        let obj = v[0].as_object().unwrap();
        for key in [
            "index", "lambda_re", "lambda_im", "velocity_re", "velocity_im", "inertial_re", "inertial_im",
            "cc_re", "cc_im", "other_re", "other_im", "total_re", "total_im", "singular_pairs",
        ] {
            assert!(obj.contains_key(key), "{key}");
        }
    }
}
