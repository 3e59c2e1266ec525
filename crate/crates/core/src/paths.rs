//! Matrix families and one-parameter matrix paths `t ↦ (M, Ṁ, M̈)`.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use faer::c64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::RealSquareMatrix;
use crate::rng::{self, SeededRng};
use crate::stochastic::{DiscreteProcess, StochasticProcess};

/// Stream tags that keep the random generators independent of one another
/// under a shared seed.
pub mod tags {
    pub const GINIBRE: u64 = 1;
    pub const ORTHOGONAL: u64 = 2;
    pub const PLUS_MINUS_ONE: u64 = 3;
    pub const DIAGONAL_GAUSSIAN: u64 = 4;
    pub const IMPULSE: u64 = 5;
    pub const MONTE_CARLO: u64 = 6;
    pub const CENSUS: u64 = 7;
    pub const MOMENTS: u64 = 8;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HatanoNelsonParams {
    pub n: usize,
    pub g: f64,
}

impl HatanoNelsonParams {
    pub fn new(n: usize, g: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidDimension {
                n,
                reason: "the periodic hopping model needs n >= 3",
            });
        }
        if !g.is_finite() {
            return Err(Error::InvalidParams(format!("asymmetry g = {g} is not finite")));
        }
        Ok(Self { n, g })
    }
}

/// Periodic hopping matrix: `e^g` above the diagonal, `e^{-g}` below, with
/// the wrap-around entries `(1,n) = e^{-g}` and `(n,1) = e^g`.
pub fn hatano_nelson(params: HatanoNelsonParams) -> Result<RealSquareMatrix> {
    let HatanoNelsonParams { n, g } = HatanoNelsonParams::new(params.n, params.g)?;
    let (up, down) = (g.exp(), (-g).exp());
    RealSquareMatrix::from_fn(n, |i, j| {
        if j == (i + 1) % n {
            up
        } else if i == (j + 1) % n {
            down
        } else {
            0.0
        }
    })
}

/// Closed-form eigenpairs `λ_k = 2(cosh g cos θ_k + i sinh g sin θ_k)`,
/// `v_k = n^{-1/2} [ω_k^m]`, `θ_k = 2πk/n`, for `k = 0..n`.
pub fn hn_eigenpairs(params: HatanoNelsonParams) -> Result<(Vec<c64>, Vec<Vec<c64>>)> {
    let HatanoNelsonParams { n, g } = HatanoNelsonParams::new(params.n, params.g)?;
    let scale = 1.0 / (n as f64).sqrt();
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for k in 0..n {
        let theta = 2.0 * PI * k as f64 / n as f64;
        values.push(c64::new(2.0 * g.cosh() * theta.cos(), 2.0 * g.sinh() * theta.sin()));
        vectors.push(
            (0..n)
                .map(|m| c64::from_polar(scale, theta * m as f64))
                .collect(),
        );
    }
    Ok((values, vectors))
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

/// iid standard normal entries.
pub fn ginibre(n: usize, seed: u64) -> Result<RealSquareMatrix> {
    ginibre_from(n, &mut rng::tagged_stream(seed, tags::GINIBRE, 0))
}

pub fn ginibre_from(n: usize, rng: &mut SeededRng) -> Result<RealSquareMatrix> {
    check_dim(n)?;
    RealSquareMatrix::from_row_major(n, rng::standard_normals(rng, n * n))
}

/// Haar-distributed orthogonal matrix: the Q factor of a Ginibre draw with
/// each column multiplied by the sign of the matching diagonal entry of R.
pub fn random_orthogonal(n: usize, seed: u64) -> Result<RealSquareMatrix> {
    random_orthogonal_from(n, &mut rng::tagged_stream(seed, tags::ORTHOGONAL, 0))
}

pub fn random_orthogonal_from(n: usize, rng: &mut SeededRng) -> Result<RealSquareMatrix> {
    let a = ginibre_from(n, rng)?.to_faer();
    let qr = a.qr();
    let q = qr.compute_Q();
    let r = qr.R();
    RealSquareMatrix::from_fn(n, |i, j| {
        let s = if r[(j, j)] < 0.0 { -1.0 } else { 1.0 };
        q[(i, j)] * s
    })
}

/// `+1` on the superdiagonal, `-1` on the subdiagonal.
pub fn antisymmetric_tridiagonal(n: usize) -> Result<RealSquareMatrix> {
    RealSquareMatrix::from_fn(n, |i, j| {
        if j == i + 1 {
            1.0
        } else if i == j + 1 {
            -1.0
        } else {
            0.0
        }
    })
}

/// Diagonal of standard normals, rescaled so the matrix 2-norm
/// (the largest `|p_i|`) is exactly 1.
pub fn diagonal_gaussian_impulse(n: usize, seed: u64) -> Result<RealSquareMatrix> {
    diagonal_gaussian_from(n, &mut rng::tagged_stream(seed, tags::DIAGONAL_GAUSSIAN, 0))
}

pub fn diagonal_gaussian_from(n: usize, rng: &mut SeededRng) -> Result<RealSquareMatrix> {
    check_dim(n)?;
    let mut p = rng::standard_normals(rng, n);
    let peak = p.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    p.iter_mut().for_each(|x| *x /= peak);
    RealSquareMatrix::from_diagonal(&p)
}

/// Entries `±1` with equal probability.
pub fn plus_minus_one(n: usize, seed: u64) -> Result<RealSquareMatrix> {
    plus_minus_one_from(n, &mut rng::tagged_stream(seed, tags::PLUS_MINUS_ONE, 0))
}

pub fn plus_minus_one_from(n: usize, rng: &mut SeededRng) -> Result<RealSquareMatrix> {
    check_dim(n)?;
    let data = (0..n * n)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    RealSquareMatrix::from_row_major(n, data)
}

/// Named matrix family, as accepted on the command line.
///
/// Syntax: `name[:key=value,...]`, e.g. `hn:g=-0.4`, `ginibre:seed=3`,
/// `pm1:norm=2`, or `file:path/to/matrix.json`. The `norm` option rescales
/// the generated matrix to the given spectral norm.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub seed: Option<u64>,
    pub norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorKind {
    HatanoNelson { g: f64 },
    Ginibre,
    Orthogonal,
    Antisymmetric,
    PlusMinusOne,
    DiagonalGaussian,
    File(PathBuf),
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind) -> Self {
        Self {
            kind,
            seed: None,
            norm: None,
        }
    }

    pub fn with_norm(mut self, norm: f64) -> Self {
        self.norm = Some(norm);
        self
    }

    /// Builds the matrix. `seed` is used unless the spec carries its own;
    /// `slot` separates draws of the same family under one seed.
    pub fn build(&self, n: usize, seed: u64, slot: u64) -> Result<RealSquareMatrix> {
        let seed = self.seed.unwrap_or(seed);
        let m = match &self.kind {
            GeneratorKind::HatanoNelson { g } => hatano_nelson(HatanoNelsonParams::new(n, *g)?)?,
            GeneratorKind::Ginibre => ginibre_from(n, &mut rng::tagged_stream(seed, tags::GINIBRE, slot))?,
            GeneratorKind::Orthogonal => {
                random_orthogonal_from(n, &mut rng::tagged_stream(seed, tags::ORTHOGONAL, slot))?
            }
            GeneratorKind::Antisymmetric => antisymmetric_tridiagonal(n)?,
            GeneratorKind::PlusMinusOne => {
                plus_minus_one_from(n, &mut rng::tagged_stream(seed, tags::PLUS_MINUS_ONE, slot))?
            }
            GeneratorKind::DiagonalGaussian => {
                diagonal_gaussian_from(n, &mut rng::tagged_stream(seed, tags::DIAGONAL_GAUSSIAN, slot))?
            }
            GeneratorKind::File(path) => {
                let m = RealSquareMatrix::load(path)?;
                if m.dim() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: m.dim(),
                    });
                }
                m
            }
        };
        Ok(match self.norm {
            Some(target) => m.normalized().scaled(target),
            None => m,
        })
    }
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(Self::new(GeneratorKind::File(PathBuf::from(path))));
        }
        if s.ends_with(".json") {
            return Ok(Self::new(GeneratorKind::File(PathBuf::from(s))));
        }
        let (name, opts) = s.split_once(':').unwrap_or((s, ""));
        let mut g = None;
        let mut seed = None;
        let mut norm = None;
        for opt in opts.split(',').filter(|o| !o.is_empty()) {
            let (key, value) = opt
                .split_once('=')
                .ok_or_else(|| Error::InvalidParams(format!("option `{opt}` is not key=value")))?;
            let bad = |_| Error::InvalidParams(format!("bad value for `{key}`: `{value}`"));
            match key.trim() {
                "g" => g = Some(value.trim().parse::<f64>().map_err(bad)?),
                "norm" => norm = Some(value.trim().parse::<f64>().map_err(bad)?),
                "seed" => {
                    seed = Some(
                        value
                            .trim()
                            .parse::<u64>()
                            .map_err(|_| Error::InvalidParams(format!("bad seed `{value}`")))?,
                    )
                }
                other => return Err(Error::InvalidParams(format!("unknown generator option `{other}`"))),
            }
        }
        let kind = match name.trim() {
            "hn" => GeneratorKind::HatanoNelson { g: g.unwrap_or(0.2) },
            "ginibre" => GeneratorKind::Ginibre,
            "orthogonal" => GeneratorKind::Orthogonal,
            "antisym" => GeneratorKind::Antisymmetric,
            "pm1" => GeneratorKind::PlusMinusOne,
            "diag-gauss" => GeneratorKind::DiagonalGaussian,
            other => return Err(Error::InvalidParams(format!("unknown generator `{other}`"))),
        };
        if g.is_some() && !matches!(kind, GeneratorKind::HatanoNelson { .. }) {
            return Err(Error::InvalidParams("option `g` applies only to `hn`".into()));
        }
        Ok(Self { kind, seed, norm })
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match &self.kind {
            GeneratorKind::HatanoNelson { .. } => "hn",
            GeneratorKind::Ginibre => "ginibre",
            GeneratorKind::Orthogonal => "orthogonal",
            GeneratorKind::Antisymmetric => "antisym",
            GeneratorKind::PlusMinusOne => "pm1",
            GeneratorKind::DiagonalGaussian => "diag-gauss",
            GeneratorKind::File(p) => return write!(f, "file:{}", p.display()),
        };
        let mut opts = Vec::new();
        if let GeneratorKind::HatanoNelson { g } = self.kind {
            opts.push(format!("g={g}"));
        }
        if let Some(s) = self.seed {
            opts.push(format!("seed={s}"));
        }
        if let Some(v) = self.norm {
            opts.push(format!("norm={v}"));
        }
        if opts.is_empty() {
            write!(f, "{name}")
        } else {
            write!(f, "{name}:{}", opts.join(","))
        }
    }
}

/// `M(t)` with its first two derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPoint {
    pub m: RealSquareMatrix,
    pub mdot: RealSquareMatrix,
    pub mddot: RealSquareMatrix,
}

#[derive(Debug, Clone)]
pub enum MatrixPath {
    /// `(1 - t) M1 + t M2` on `[0, 1]`.
    Interpolation { m1: RealSquareMatrix, m2: RealSquareMatrix },
    /// `M + t P` for all real `t`.
    Perturbation { m: RealSquareMatrix, p: RealSquareMatrix },
    /// `M + t I` for all real `t`.
    IdentityDrift { m: RealSquareMatrix },
    /// `M_ε(t) = M(0) + ∫ P_ε` over the process grid.
    SmoothedStochastic(Box<StochasticProcess>),
    /// Piecewise-linear impulse process over its grid.
    Discrete(Box<DiscreteProcess>),
}

impl MatrixPath {
    pub fn interpolation(m1: RealSquareMatrix, m2: RealSquareMatrix) -> Result<Self> {
        m1.check_same(&m2)?;
        Ok(Self::Interpolation { m1, m2 })
    }

    pub fn perturbation(m: RealSquareMatrix, p: RealSquareMatrix) -> Result<Self> {
        m.check_same(&p)?;
        Ok(Self::Perturbation { m, p })
    }

    pub fn identity_drift(m: RealSquareMatrix) -> Self {
        Self::IdentityDrift { m }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Interpolation { m1, .. } => m1.dim(),
            Self::Perturbation { m, .. } | Self::IdentityDrift { m } => m.dim(),
            Self::SmoothedStochastic(p) => p.dim(),
            Self::Discrete(p) => p.dim(),
        }
    }

    /// Closed parameter interval on which the path is defined.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Self::Interpolation { .. } => (0.0, 1.0),
            Self::Perturbation { .. } | Self::IdentityDrift { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Self::SmoothedStochastic(p) => p.domain(),
            Self::Discrete(p) => p.domain(),
        }
    }

    pub fn evaluate(&self, t: f64) -> Result<PathPoint> {
        let (lo, hi) = self.domain();
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfDomain { t, lo, hi });
        }
        let n = self.dim();
        let zero = RealSquareMatrix::zeros(n)?;
        match self {
            Self::Interpolation { m1, m2 } => Ok(PathPoint {
                m: m1.lincomb(1.0 - t, m2, t)?,
                mdot: m2.add_scaled(m1, -1.0)?,
                mddot: zero,
            }),
            Self::Perturbation { m, p } => Ok(PathPoint {
                m: m.add_scaled(p, t)?,
                mdot: p.clone(),
                mddot: zero,
            }),
            Self::IdentityDrift { m } => {
                let id = RealSquareMatrix::identity(n)?;
                Ok(PathPoint {
                    m: m.add_scaled(&id, t)?,
                    mdot: id,
                    mddot: zero,
                })
            }
            Self::SmoothedStochastic(p) => p.evaluate(t),
            Self::Discrete(p) => p.evaluate(t),
        }
    }

    /// `M(t)` only.
    pub fn matrix_at(&self, t: f64) -> Result<RealSquareMatrix> {
        match self {
            Self::Interpolation { m1, m2 } => {
                let (lo, hi) = self.domain();
                if !(t >= lo && t <= hi) {
                    return Err(Error::OutOfDomain { t, lo, hi });
                }
                m1.lincomb(1.0 - t, m2, t)
            }
            Self::Perturbation { m, p } => m.add_scaled(p, t),
            _ => self.evaluate(t).map(|p| p.m),
        }
    }

    /// End points whose spectra are drawn as markers: the interpolation
    /// target for pencils between two matrices.
    pub fn target(&self) -> Option<&RealSquareMatrix> {
        match self {
            Self::Interpolation { m2, .. } => Some(m2),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hatano_nelson_layout() {
        let h = hatano_nelson(HatanoNelsonParams::new(4, 0.5).unwrap()).unwrap();
        let (up, down) = (0.5f64.exp(), (-0.5f64).exp());
        assert_eq!(h[(0, 1)], up);
        assert_eq!(h[(1, 0)], down);
        assert_eq!(h[(0, 3)], down);
        assert_eq!(h[(3, 0)], up);
        assert_eq!(h[(0, 2)], 0.0);
        assert_eq!(h.circulant_violation(0.0), None);
        assert!(hatano_nelson(HatanoNelsonParams { n: 2, g: 0.1 }).is_err());
    }

    #[test]
    fn generator_specs_parse_and_print() {
        let s: GeneratorSpec = "hn:g=-0.4".parse().unwrap();
        assert_eq!(s.kind, GeneratorKind::HatanoNelson { g: -0.4 });
        assert_eq!(s.to_string(), "hn:g=-0.4");
        let s: GeneratorSpec = "pm1:norm=2,seed=9".parse().unwrap();
        assert_eq!((s.seed, s.norm), (Some(9), Some(2.0)));
        assert_eq!(s.to_string().parse::<GeneratorSpec>().unwrap(), s);
        assert!("ginibre:g=1".parse::<GeneratorSpec>().is_err());
        assert!("nope".parse::<GeneratorSpec>().is_err());
        assert!(matches!(
            "m.json".parse::<GeneratorSpec>().unwrap().kind,
            GeneratorKind::File(_)
        ));
    }

    #[test]
    fn slots_give_distinct_draws() {
        let spec: GeneratorSpec = "ginibre".parse().unwrap();
        assert_ne!(spec.build(4, 1, 0).unwrap(), spec.build(4, 1, 1).unwrap());
        assert_eq!(spec.build(4, 1, 0).unwrap(), ginibre(4, 1).unwrap());
    }

    #[test]
    fn interpolation_domain() {
        let a = RealSquareMatrix::identity(2).unwrap();
        let path = MatrixPath::interpolation(a.clone(), a.scaled(3.0)).unwrap();
        assert!(matches!(path.evaluate(1.5), Err(Error::OutOfDomain { .. })));
        assert_eq!(path.evaluate(1.0).unwrap().m, a.scaled(3.0));
    }
}
