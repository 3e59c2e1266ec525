//! Expectations and variances of eigenvalue motion under random impulses,
//! closed forms for circulant and Hatano-Nelson matrices, and Monte-Carlo
//! estimators used to check them.

use std::f64::consts::PI;

use faer::{c64, Mat};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::RealSquareMatrix;
use crate::paths::{hatano_nelson, tags, HatanoNelsonParams};
use crate::rng;
use crate::spectral::BiorthogonalEigenSystem;
use crate::stochastic::{ImpulseDistribution, Moments};

/// `κ_i` within this distance of 1 for every `i` counts as normal.
pub const NORMAL_TOLERANCE: f64 = 1e-8;

/// Matrix class declared by the caller and verified before a class-specific
/// formula is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MatrixClass {
    General,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PerturbationKind {
    /// Every entry independent with the same moments.
    DenseIid,
    /// Independent diagonal entries, zero elsewhere.
    DiagonalIid,
}

impl From<ImpulseDistribution> for PerturbationKind {
    fn from(d: ImpulseDistribution) -> Self {
        if d.is_diagonal() {
            Self::DiagonalIid
        } else {
            Self::DenseIid
        }
    }
}

/// Fails unless every condition number is 1 within [`NORMAL_TOLERANCE`].
pub fn verify_class(sys: &BiorthogonalEigenSystem, class: MatrixClass) -> Result<()> {
    if class == MatrixClass::Normal {
        for (index, &kappa) in sys.condition_numbers().iter().enumerate() {
            if (kappa - 1.0).abs() > NORMAL_TOLERANCE {
                return Err(Error::NotNormal { index, kappa });
            }
        }
    }
    Ok(())
}

/// Variance `E|λ̇_i|²` of the first variation.
///
/// Dense iid impulses give `E[p²] ‖u_i‖²` (which is `E[p²]` for a normal
/// matrix). Diagonal impulses give `E[p²] Σ_a |u_i^a|² |v_i^a|²`, which
/// depends on the eigenvector components.
pub fn first_variation_variance(
    sys: &BiorthogonalEigenSystem,
    class: MatrixClass,
    kind: PerturbationKind,
    p2: f64,
) -> Result<Vec<f64>> {
    verify_class(sys, class)?;
    let n = sys.dim();
    Ok((0..n)
        .map(|i| match (class, kind) {
            (MatrixClass::Normal, PerturbationKind::DenseIid) => p2,
            (MatrixClass::General, PerturbationKind::DenseIid) => p2 * sys.condition_number(i).powi(2),
            (_, PerturbationKind::DiagonalIid) => {
                p2 * (0..n)
                    .map(|a| sys.left()[(i, a)].norm_sqr() * sys.right()[(a, i)].norm_sqr())
                    .sum::<f64>()
            }
        })
        .collect())
}

/// Weights `w_j = 1/(λ_i - λ_j)` for `j ∉ {i, ī}`, zero otherwise.
fn other_weights(sys: &BiorthogonalEigenSystem, i: usize) -> Vec<c64> {
    let l = sys.eigenvalues();
    let partner = sys.pairing()[i];
    (0..sys.dim())
        .map(|j| {
            if j == i || j == partner {
                c64::new(0.0, 0.0)
            } else {
                1.0 / (l[i] - l[j])
            }
        })
        .collect()
}

/// `E[S_i]` for `S_i = Σ_{j∉{i,ī}} c_ij c_ji / (λ_i - λ_j)` under dense iid
/// impulses: `E[p²] Σ_{j∉{i,ī}} (v_iᵀ v_j)(u_i^* ū_j)/(λ_i - λ_j)`.
///
/// The other-eigenvalue force in the acceleration is `2 S_i`.
pub fn expected_other_force(sys: &BiorthogonalEigenSystem, p2: f64) -> Vec<c64> {
    let e = crate::stochastic::pair_moment_matrix_iid(sys);
    (0..sys.dim())
        .map(|i| {
            let w = other_weights(sys, i);
            p2 * (0..sys.dim()).map(|j| w[j] * e[(i, j)]).sum::<c64>()
        })
        .collect()
}

/// Decomposition of `Var(S_i) = E|S_i|² - |E S_i|²` under dense iid impulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceBreakdown {
    /// `|E S_i|²`; present in `E|S_i|²` and cancelled by the squared mean.
    pub type1: f64,
    /// `E[p²]² ‖u_i‖² Σ_{j,l} (v_l^* v_j)(u_j^* u_l) w_j w̄_l`.
    pub type2: f64,
    /// `E[p²]² |Σ_l w_l (u_l^* u_i)(v_i^* v_l)|²`.
    pub type3: f64,
    /// `(E[p⁴] - 3E[p²]²) T4`, the fourth-cumulant correction.
    pub type4: f64,
    /// `T4 = Σ_{a,b} |u_i^a|² |v_i^b|² |Σ_j w_j ū_j^a v_j^b|²`.
    pub fourth_order_sum: f64,
    /// `type2 + type3 + type4`.
    pub total: f64,
    pub moments: Moments,
}

impl VarianceBreakdown {
    /// The total when the fourth-order sum is weighted by `E[p⁴]` in place
    /// of the fourth cumulant.
    pub fn total_with_raw_fourth_moment(&self) -> f64 {
        self.type2 + self.type3 + self.moments.p4 * self.fourth_order_sum
    }
}

pub fn other_force_variance(sys: &BiorthogonalEigenSystem, moments: Moments) -> Vec<VarianceBreakdown> {
    let n = sys.dim();
    let u = sys.left(); // row j is u_j^*
    let v = sys.right(); // column j is v_j
    let gu = u * u.adjoint(); // (j, l) -> u_j^* u_l
    let gv = v.adjoint() * v; // (l, j) -> v_l^* v_j
    let e = crate::stochastic::pair_moment_matrix_iid(sys);
    let (p2, p4) = (moments.p2, moments.p4);
    (0..n)
        .map(|i| {
            let w = other_weights(sys, i);
            let kappa2 = sys.condition_number(i).powi(2);
            let mean: c64 = (0..n).map(|j| w[j] * e[(i, j)]).sum::<c64>() * p2;

            let mut t2 = c64::new(0.0, 0.0);
            for j in 0..n {
                if w[j].norm_sqr() == 0.0 {
                    continue;
                }
                for l in 0..n {
                    t2 += gv[(l, j)] * gu[(j, l)] * w[j] * w[l].conj();
                }
            }
            let t3: c64 = (0..n).map(|l| w[l] * gu[(l, i)] * gv[(i, l)]).sum();

            // K = Σ_j w_j v_j u_j^*, so K[b, a] = Σ_j w_j v_j^b ū_j^a.
            let wu = Mat::<c64>::from_fn(n, n, |j, a| w[j] * u[(j, a)]);
            let k = v * &wu;
            let mut t4 = 0.0;
            for a in 0..n {
                let ua = u[(i, a)].norm_sqr();
                for b in 0..n {
                    t4 += ua * v[(b, i)].norm_sqr() * k[(b, a)].norm_sqr();
                }
            }
            let type2 = p2 * p2 * kappa2 * t2.re;
            let type3 = p2 * p2 * t3.norm_sqr();
            let type4 = (p4 - 3.0 * p2 * p2) * t4;
            VarianceBreakdown {
                type1: mean.norm_sqr(),
                type2,
                type3,
                type4,
                fourth_order_sum: t4,
                total: type2 + type3 + type4,
                moments,
            }
        })
        .collect()
}

/// `E[p²]² Σ_l 1/|λ_i - λ_l|² + E[p⁴] |Σ_l 1/(λ_i - λ_l)|²` over
/// `l ∉ {i, ī}`; bounds the variance of `S_i` for a normal matrix.
pub fn normal_variance_bound(sys: &BiorthogonalEigenSystem, moments: Moments) -> Vec<f64> {
    (0..sys.dim())
        .map(|i| {
            let w = other_weights(sys, i);
            let sq: f64 = w.iter().map(|z| z.norm_sqr()).sum();
            let lin: c64 = w.iter().sum();
            moments.p2 * moments.p2 * sq + moments.p4 * lin.norm_sqr()
        })
        .collect()
}

/// `p̂(f) = (1/n) Σ_a p_a ω^{f a}`, `ω = e^{2πi/n}`, for `f = 0..n`.
pub fn fourier_coefficients(p: &[f64]) -> Vec<c64> {
    let n = p.len();
    (0..n)
        .map(|f| {
            p.iter()
                .enumerate()
                .map(|(a, &x)| c64::from_polar(x, 2.0 * PI * ((f * a) % n) as f64 / n as f64))
                .sum::<c64>()
                / n as f64
        })
        .collect()
}

/// `|p̂(f)|²` for `f = 0..n`.
pub fn power_spectrum(p: &[f64]) -> Vec<f64> {
    fourier_coefficients(p).iter().map(|z| z.norm_sqr()).collect()
}

/// Eigenvalue of a circulant matrix with first row `c` on Fourier mode `k`:
/// `λ_k = Σ_m c_m ω^{k m}`.
pub fn circulant_eigenvalues(first_row: &[f64]) -> Vec<c64> {
    let n = first_row.len();
    fourier_coefficients(first_row)
        .into_iter()
        .map(|z| z * n as f64)
        .collect()
}

/// Motion of Fourier mode `k` of a circulant matrix under a diagonal impulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CirculantForce {
    pub k: usize,
    pub lambda: c64,
    pub velocity: c64,
    /// Conjugate-partner term; zero for a real mode.
    pub cc: c64,
    pub other: c64,
    pub total: c64,
}

/// Index of the conjugate mode, `n - k mod n`.
pub fn conjugate_mode(n: usize, k: usize) -> usize {
    (n - k) % n
}

fn check_circulant(base: &RealSquareMatrix) -> Result<()> {
    let tol = 1e-12 * base.max_abs().max(f64::MIN_POSITIVE);
    match base.circulant_violation(tol) {
        Some((row, col)) => Err(Error::NotCirculant { row, col }),
        None => Ok(()),
    }
}

fn check_mode_gaps(lambda: &[c64], scale: f64) -> Result<()> {
    let tol = 1e-10 * scale.max(f64::MIN_POSITIVE);
    for i in 0..lambda.len() {
        for j in i + 1..lambda.len() {
            let gap = (lambda[i] - lambda[j]).norm();
            if gap <= tol {
                return Err(Error::DegenerateSpectrum { i, j, gap, tolerance: tol });
            }
        }
    }
    Ok(())
}

fn is_real_mode(lambda: &[c64], k: usize, scale: f64) -> bool {
    lambda[k].im.abs() <= 1e-9 * scale
}

/// Closed-form velocity and acceleration of every mode of the circulant
/// `base` under `Ṁ = diag(p)`, `M̈ = 0`:
/// `λ̇_k = mean(p)`, `λ̈_k = 2 Σ_{j≠k} |p̂(j-k)|² / (λ_k - λ_j)`.
pub fn circulant_forces(p: &[f64], base: &RealSquareMatrix) -> Result<Vec<CirculantForce>> {
    let n = base.dim();
    if p.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: p.len() });
    }
    check_circulant(base)?;
    let lambda = circulant_eigenvalues(&base.circulant_symbol());
    let scale = lambda.iter().map(|z| z.norm()).fold(0.0, f64::max);
    check_mode_gaps(&lambda, scale)?;
    let power = power_spectrum(p);
    let mean = p.iter().sum::<f64>() / n as f64;
    Ok((0..n)
        .map(|k| {
            let partner = conjugate_mode(n, k);
            let real = is_real_mode(&lambda, k, scale);
            let term = |j: usize| 2.0 * power[(j + n - k) % n] / (lambda[k] - lambda[j]);
            let cc = if real { c64::new(0.0, 0.0) } else { term(partner) };
            let other: c64 = (0..n)
                .filter(|&j| j != k && (real || j != partner))
                .map(term)
                .sum();
            CirculantForce {
                k,
                lambda: lambda[k],
                velocity: c64::new(mean, 0.0),
                cc,
                other,
                total: cc + other,
            }
        })
        .collect())
}

/// `κ²` for iid diagonal entries: the expected power `E|p̂(f)|² = E[p²]/n`.
pub fn white_noise_kappa2(p2: f64, n: usize) -> f64 {
    p2 / n as f64
}

/// Expected force on a circulant mode under white-noise diagonal impulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeForce {
    pub k: usize,
    pub lambda: c64,
    /// `-i κ²/Im λ_k`; `None` for a real mode.
    pub cc: Option<c64>,
    /// `2κ² Σ_{j∉{k,k̄}} 1/(λ_k - λ_j)`.
    pub other: c64,
}

impl ModeForce {
    pub fn total(&self) -> c64 {
        self.cc.unwrap_or_default() + self.other
    }
}

/// `λ̈_k = κ² {-i/Im λ_k + Σ_{j∉{k,k̄}} 2/(λ_k - λ_j)}` on every mode of the
/// circulant `base`.
pub fn white_noise_force_field(base: &RealSquareMatrix, kappa2: f64) -> Result<Vec<ModeForce>> {
    check_circulant(base)?;
    mode_forces(&circulant_eigenvalues(&base.circulant_symbol()), kappa2)
}

/// [`white_noise_force_field`] for a Hatano-Nelson matrix from its
/// closed-form eigenvalues.
pub fn hn_white_noise_force_field(params: HatanoNelsonParams, kappa2: f64) -> Result<Vec<ModeForce>> {
    let (lambda, _) = crate::paths::hn_eigenpairs(params)?;
    mode_forces(&lambda, kappa2)
}

fn mode_forces(lambda: &[c64], kappa2: f64) -> Result<Vec<ModeForce>> {
    let n = lambda.len();
    let scale = lambda.iter().map(|z| z.norm()).fold(0.0, f64::max);
    check_mode_gaps(lambda, scale)?;
    Ok((0..n)
        .map(|k| {
            let real = is_real_mode(lambda, k, scale);
            let partner = conjugate_mode(n, k);
            let other: c64 = (0..n)
                .filter(|&j| j != k && (real || j != partner))
                .map(|j| 2.0 / (lambda[k] - lambda[j]))
                .sum();
            ModeForce {
                k,
                lambda: lambda[k],
                cc: (!real).then(|| c64::new(0.0, -kappa2 / lambda[k].im)),
                other: other * kappa2,
            }
        })
        .collect())
}

/// Combined pull of the conjugate pair `{λ_j, λ̄_j}` on `λ_k`, i.e.
/// `1/(λ_k - λ_j) + 1/(λ_k - λ̄_j)` split into real and imaginary parts.
///
/// With `x = Re(λ_k - λ_j)`, `y = Im λ_j - Im λ_k`, `b = Im λ_k`:
/// real part `x {1/(x²+y²) + 1/(x²+(y+2b)²)}`, imaginary part
/// `y/(x²+y²) - (y+2b)/(x²+(y+2b)²)`.
pub fn pair_force_components(lambda_k: c64, lambda_j: c64) -> Result<(f64, f64)> {
    if lambda_j.im == 0.0 {
        return Err(Error::InvalidParams("the pair partner must be non-real".into()));
    }
    let x = lambda_k.re - lambda_j.re;
    let y = lambda_j.im - lambda_k.im;
    let b = lambda_k.im;
    let y2 = y + 2.0 * b;
    let d1 = x * x + y * y;
    let d2 = x * x + y2 * y2;
    if d1 == 0.0 || d2 == 0.0 {
        return Err(Error::DivisionByZero);
    }
    Ok((x * (1.0 / d1 + 1.0 / d2), y / d1 - y2 / d2))
}

/// Leading-order small-`g` expansion of the white-noise force on mode `k` of
/// the Hatano-Nelson matrix:
///
/// ```text
/// F/κ² ≈ -i/Im λ_k + Σ_{pairs j, Im λ_j > 0} [2/Δ_j - i Im λ_k/Δ_j²]
///                  + Σ_{real j}              [1/Δ_j - i Im λ_k/(2Δ_j²)]
/// ```
///
/// with `Δ_j = cos θ_k - cos θ_j`; the partner `k̄` is excluded. Pairs are
/// identified by mode index (`j ↔ n - j`), never by the sign of a computed
/// imaginary part.
pub fn hn_small_g_force(params: HatanoNelsonParams, k: usize, kappa2: f64) -> Result<c64> {
    let HatanoNelsonParams { n, g } = HatanoNelsonParams::new(params.n, params.g)?;
    if k >= n {
        return Err(Error::InvalidParams(format!("mode {k} out of range for n = {n}")));
    }
    let theta = |j: usize| 2.0 * PI * j as f64 / n as f64;
    let real_mode = |j: usize| conjugate_mode(n, j) == j;
    if real_mode(k) || g == 0.0 {
        return Err(Error::RealEigenvalue { index: k });
    }
    let im_k = 2.0 * g.sinh() * theta(k).sin();
    let cos_k = theta(k).cos();
    let partner = conjugate_mode(n, k);
    let mut force = c64::new(0.0, -1.0 / im_k);
    for j in 0..n {
        if j == k || j == partner {
            continue;
        }
        let delta = cos_k - theta(j).cos();
        if real_mode(j) {
            force += c64::new(1.0 / delta, -im_k / (2.0 * delta * delta));
        } else if j < conjugate_mode(n, j) {
            // Representative with Im λ_j > 0 (0 < θ_j < π).
            force += c64::new(2.0 / delta, -im_k / (delta * delta));
        }
    }
    Ok(force * kappa2)
}

/// Non-normality of `H(t) = H + t diag(p)` for a Hatano-Nelson `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct HnNonNormality {
    /// `[H(t), H(t)ᵀ]`.
    pub commutator: RealSquareMatrix,
    /// `‖[H(t), H(t)ᵀ]‖_F / ‖H‖_F²`.
    pub frobenius_ratio: f64,
    /// `‖H‖_F² = 2n cosh 2g`.
    pub base_frobenius_sq: f64,
}

/// Commutator of `H(t) = H + t diag(p)` with its transpose. It equals
/// `2t sinh g A`, where `A` is symmetric with `A_{r,r+1} = p_{r+1} - p_r`
/// (indices cyclic).
pub fn hn_non_normality(params: HatanoNelsonParams, t: f64, p: &[f64]) -> Result<HnNonNormality> {
    let h = hatano_nelson(params)?;
    if p.len() != params.n {
        return Err(Error::DimensionMismatch {
            expected: params.n,
            found: p.len(),
        });
    }
    let ht = h.add_scaled(&RealSquareMatrix::from_diagonal(p)?, t)?;
    let commutator = ht.commutator(&ht.transpose())?;
    let base_frobenius_sq = h.frobenius_norm().powi(2);
    Ok(HnNonNormality {
        frobenius_ratio: commutator.frobenius_norm() / base_frobenius_sq,
        commutator,
        base_frobenius_sq,
    })
}

/// The closed-form structure `2t sinh g A` of the commutator.
pub fn hn_commutator_pattern(params: HatanoNelsonParams, t: f64, p: &[f64]) -> Result<RealSquareMatrix> {
    let n = params.n;
    if p.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: p.len() });
    }
    let s = 2.0 * t * params.g.sinh();
    RealSquareMatrix::from_fn(n, |r, c| {
        if c == (r + 1) % n {
            s * (p[c] - p[r])
        } else if r == (c + 1) % n {
            s * (p[r] - p[c])
        } else {
            0.0
        }
    })
}

/// `2σ sqrt(t sinh g) / (sqrt(n) cosh 2g)`: the square-root law for the
/// expected Frobenius ratio. Requires `g > 0`.
pub fn frobenius_ratio_sqrt_law(params: HatanoNelsonParams, t: f64, sigma: f64) -> Result<f64> {
    check_non_normality_params(params, t, sigma)?;
    if params.g <= 0.0 {
        return Err(Error::InvalidParams(format!("the square-root law needs g > 0, got {}", params.g)));
    }
    let n = params.n as f64;
    Ok(2.0 * sigma * (t * params.g.sinh()).sqrt() / (n.sqrt() * (2.0 * params.g).cosh()))
}

/// Expected Frobenius ratio from the commutator structure:
/// `2√2 t |sinh g| E‖d‖ / (2n cosh 2g)`, where `d_r = p_{r+1} - p_r` and
/// `E‖d‖ ≈ σ sqrt(2n) (1 - 3/(8n))` by a second-order expansion of the
/// square root around `E‖d‖² = 2nσ²`.
pub fn frobenius_ratio_expectation(params: HatanoNelsonParams, t: f64, sigma: f64) -> Result<f64> {
    check_non_normality_params(params, t, sigma)?;
    let n = params.n as f64;
    let mean_norm = sigma * (2.0 * n).sqrt() * (1.0 - 3.0 / (8.0 * n));
    Ok(2.0 * 2f64.sqrt() * t * params.g.sinh().abs() * mean_norm / (2.0 * n * (2.0 * params.g).cosh()))
}

fn check_non_normality_params(params: HatanoNelsonParams, t: f64, sigma: f64) -> Result<()> {
    HatanoNelsonParams::new(params.n, params.g)?;
    if !(t >= 0.0 && sigma > 0.0) {
        return Err(Error::InvalidParams(format!("need t >= 0 and sigma > 0, got t = {t}, sigma = {sigma}")));
    }
    Ok(())
}

/// Running mean and spread of a complex sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexStats {
    pub count: u64,
    pub mean: c64,
    /// Sum of `|x - mean|²`.
    m2: f64,
}

impl Default for ComplexStats {
    fn default() -> Self {
        Self {
            count: 0,
            mean: c64::new(0.0, 0.0),
            m2: 0.0,
        }
    }
}

impl ComplexStats {
    pub fn push(&mut self, x: c64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += (delta.conj() * (x - self.mean)).re;
    }

    /// Combines two disjoint samples (Chan et al. update).
    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let w = other.count as f64 / count as f64;
        Self {
            count,
            mean: self.mean + delta * w,
            m2: self.m2 + other.m2 + delta.norm_sqr() * self.count as f64 * w,
        }
    }

    /// Unbiased `E|X - E X|²`.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean, `sqrt(variance / count)`.
    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            f64::INFINITY
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }

    /// `|mean - expected|` in units of the standard error.
    pub fn z_score(&self, expected: c64) -> f64 {
        (self.mean - expected).norm() / self.stderr()
    }
}

/// Monte-Carlo statistics of the motion of every eigenvalue under random
/// impulses `Ṁ = P`, `M̈ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForceSamples {
    /// `λ̇_i = c_ii`.
    pub velocity: Vec<ComplexStats>,
    /// Conjugate term `2 c_iī c_īi/(λ_i - λ_ī)`; zero for real eigenvalues.
    pub cc: Vec<ComplexStats>,
    /// `S_i = Σ_{j∉{i,ī}} c_ij c_ji/(λ_i - λ_j)`.
    pub other_sum: Vec<ComplexStats>,
    /// `λ̈_i`.
    pub acceleration: Vec<ComplexStats>,
}

impl ForceSamples {
    fn empty(n: usize) -> Self {
        Self {
            velocity: vec![ComplexStats::default(); n],
            cc: vec![ComplexStats::default(); n],
            other_sum: vec![ComplexStats::default(); n],
            acceleration: vec![ComplexStats::default(); n],
        }
    }

    fn merge(&self, other: &Self) -> Self {
        let zip = |a: &[ComplexStats], b: &[ComplexStats]| a.iter().zip(b).map(|(x, y)| x.merge(y)).collect();
        Self {
            velocity: zip(&self.velocity, &other.velocity),
            cc: zip(&self.cc, &other.cc),
            other_sum: zip(&self.other_sum, &other.other_sum),
            acceleration: zip(&self.acceleration, &other.acceleration),
        }
    }

    pub fn count(&self) -> u64 {
        self.velocity.first().map_or(0, |s| s.count)
    }
}

/// Draws per independent random stream in the Monte-Carlo estimators.
const CHUNK: usize = 1000;

/// Samples `draws` impulses from `dist` and accumulates the force statistics.
///
/// Draws are split into fixed chunks, each with its own random stream, and
/// the chunk results are merged in chunk order, so the result does not
/// depend on the number of worker threads.
pub fn sample_forces(
    sys: &BiorthogonalEigenSystem,
    dist: ImpulseDistribution,
    draws: usize,
    seed: u64,
) -> Result<ForceSamples> {
    let n = sys.dim();
    let chunks = draws.div_ceil(CHUNK);
    let l = sys.eigenvalues().to_vec();
    let pairing = sys.pairing().to_vec();
    let partial: Vec<Result<ForceSamples>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = rng::tagged_stream(seed, tags::MONTE_CARLO, chunk as u64);
            let mut acc = ForceSamples::empty(n);
            let count = CHUNK.min(draws - chunk * CHUNK);
            for _ in 0..count {
                let p = dist.sample(n, &mut rng)?;
                let pv = &p.to_complex() * sys.right();
                let c = sys.left() * &pv;
                for i in 0..n {
                    let partner = pairing[i];
                    let mut other = c64::new(0.0, 0.0);
                    let mut cc = c64::new(0.0, 0.0);
                    for j in 0..n {
                        if j == i {
                            continue;
                        }
                        let term = c[(i, j)] * c[(j, i)] / (l[i] - l[j]);
                        if j == partner {
                            cc = 2.0 * term;
                        } else {
                            other += term;
                        }
                    }
                    acc.velocity[i].push(c[(i, i)]);
                    acc.cc[i].push(cc);
                    acc.other_sum[i].push(other);
                    acc.acceleration[i].push(cc + 2.0 * other);
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = ForceSamples::empty(n);
    for part in partial {
        total = total.merge(&part?);
    }
    Ok(total)
}

/// Monte-Carlo mean of the Frobenius ratio of [`hn_non_normality`] with
/// `p_a ~ N(0, σ²)`. Returns `(mean, standard error)`.
pub fn sample_frobenius_ratio(
    params: HatanoNelsonParams,
    t: f64,
    sigma: f64,
    draws: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    check_non_normality_params(params, t, sigma)?;
    let chunks = draws.div_ceil(CHUNK);
    let partial: Vec<Result<ComplexStats>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = rng::tagged_stream(seed, tags::MONTE_CARLO, chunk as u64);
            let mut acc = ComplexStats::default();
            for _ in 0..CHUNK.min(draws - chunk * CHUNK) {
                let p: Vec<f64> = rng::standard_normals(&mut rng, params.n)
                    .into_iter()
                    .map(|x| sigma * x)
                    .collect();
                acc.push(c64::new(hn_non_normality(params, t, &p)?.frobenius_ratio, 0.0));
            }
            Ok(acc)
        })
        .collect();
    let mut total = ComplexStats::default();
    for part in partial {
        total = total.merge(&part?);
    }
    Ok((total.mean.re, total.stderr()))
}
