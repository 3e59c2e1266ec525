//! Random impulse processes.
//!
//! The discrete process applies an independent impulse `P(t_i)` on each grid
//! interval, `M(t_i + δt) = M(t_i) + δt P(t_i)`. The smoothed process
//! replaces the piecewise-constant derivative by `P_ε(t) = P(t_i) W_ε(t)`,
//! where the window `W_ε` is 1 on the interior of the interval and falls to 0
//! at the grid points through bump-function boundary layers of width `ε`.

use std::path::{Path, PathBuf};

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::RealSquareMatrix;
use crate::paths::{tags, GeneratorSpec, PathPoint};
use crate::rng::{self, SeededRng};
use crate::spectral::BiorthogonalEigenSystem;

/// `∫₀¹ exp(1 - 1/(1 - u²)) du`: the area under one boundary-layer bump in
/// units of `ε`.
pub const BUMP_MASS: f64 = 0.603_450_161_218_938_1;

/// `exp(1 - 1/(1 - s²))` for `|s| < 1`, else 0.
fn bump(s: f64) -> f64 {
    let q = 1.0 - s * s;
    if q <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / q).exp()
    }
}

/// `d/ds exp(1 - 1/(1 - s²))`.
fn bump_slope(s: f64) -> f64 {
    let q = 1.0 - s * s;
    if q <= 0.0 {
        0.0
    } else {
        bump(s) * (-2.0 * s / (q * q))
    }
}

/// Rising bump on `[t_i, t_i + ε]`: 0 at `t_i`, 1 at `t_i + ε`, 0 outside.
pub fn bump_left(t: f64, t_i: f64, eps: f64) -> f64 {
    if t < t_i || t > t_i + eps {
        return 0.0;
    }
    bump((t - t_i - eps) / eps)
}

pub fn bump_left_derivative(t: f64, t_i: f64, eps: f64) -> f64 {
    if t < t_i || t > t_i + eps {
        return 0.0;
    }
    bump_slope((t - t_i - eps) / eps) / eps
}

/// Falling bump on `[t_next - ε, t_next]`: 1 at `t_next - ε`, 0 at `t_next`.
pub fn bump_right(t: f64, t_next: f64, eps: f64) -> f64 {
    if t < t_next - eps || t > t_next {
        return 0.0;
    }
    bump((t - t_next + eps) / eps)
}

pub fn bump_right_derivative(t: f64, t_next: f64, eps: f64) -> f64 {
    if t < t_next - eps || t > t_next {
        return 0.0;
    }
    bump_slope((t - t_next + eps) / eps) / eps
}

/// `∫₀ˣ exp(1 - 1/(1 - u²)) du` for `x ∈ [0, 1]`.
pub fn bump_integral(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    adaptive_simpson(&bump, 0.0, x, 1e-15, 40)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, depth)
}

/// Strictly increasing time grid with boundary-layer width `ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    grid: Vec<f64>,
    epsilon: f64,
}

impl WindowSpec {
    pub fn new(grid: Vec<f64>, epsilon: f64) -> Result<Self> {
        check_grid(&grid)?;
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidWindow(format!("epsilon must be positive, got {epsilon}")));
        }
        for (i, w) in grid.windows(2).enumerate() {
            if epsilon >= (w[1] - w[0]) / 2.0 {
                return Err(Error::InvalidWindow(format!(
                    "epsilon {epsilon} is not below half of interval {i} (length {})",
                    w[1] - w[0]
                )));
            }
        }
        Ok(Self { grid, epsilon })
    }

    /// `count` equally spaced points from `start` to `stop` inclusive.
    pub fn uniform(start: f64, stop: f64, count: usize, epsilon: f64) -> Result<Self> {
        Self::new(linspace(start, stop, count)?, epsilon)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn interval_count(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn interval(&self, i: usize) -> (f64, f64) {
        (self.grid[i], self.grid[i + 1])
    }

    /// Interval containing `t`; grid points belong to the interval on their
    /// right, except the last one.
    pub fn interval_of(&self, t: f64) -> Option<usize> {
        locate(&self.grid, t)
    }

    /// `W_ε(t; t_i, t_{i+1})`.
    pub fn window(&self, t: f64, i: usize) -> f64 {
        let (a, b) = self.interval(i);
        let eps = self.epsilon;
        if t < a || t > b {
            0.0
        } else if t < a + eps {
            bump_left(t, a, eps)
        } else if t > b - eps {
            bump_right(t, b, eps)
        } else {
            1.0
        }
    }

    pub fn window_derivative(&self, t: f64, i: usize) -> f64 {
        let (a, b) = self.interval(i);
        let eps = self.epsilon;
        if t < a || t > b {
            0.0
        } else if t < a + eps {
            bump_left_derivative(t, a, eps)
        } else if t > b - eps {
            bump_right_derivative(t, b, eps)
        } else {
            0.0
        }
    }

    /// `∫_{t_i}^{t} W_ε(s; t_i, t_{i+1}) ds`, clamped to the interval.
    pub fn window_integral(&self, t: f64, i: usize) -> f64 {
        let (a, b) = self.interval(i);
        let eps = self.epsilon;
        let t = t.clamp(a, b);
        if t <= a + eps {
            // Rising bump: ∫₀ˣ bump(u - 1) du = M - ∫₀^{1-x} bump.
            let x = (t - a) / eps;
            eps * (BUMP_MASS - bump_integral(1.0 - x))
        } else if t <= b - eps {
            eps * BUMP_MASS + (t - a - eps)
        } else {
            let x = (t - b + eps) / eps;
            eps * BUMP_MASS + (b - a - 2.0 * eps) + eps * bump_integral(x)
        }
    }

    /// Total window mass `∫W = length - 2ε + 2ε·BUMP_MASS`.
    pub fn window_mass(&self, i: usize) -> f64 {
        let (a, b) = self.interval(i);
        (b - a) - 2.0 * self.epsilon + 2.0 * self.epsilon * BUMP_MASS
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.grid[0], *self.grid.last().expect("grid has two points"))
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidWindow("the grid needs at least two points".into()));
    }
    if let Some(k) = grid.iter().position(|t| !t.is_finite()) {
        return Err(Error::NonMonotoneGrid(k));
    }
    if let Some(k) = grid.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::NonMonotoneGrid(k + 1));
    }
    Ok(())
}

fn locate(grid: &[f64], t: f64) -> Option<usize> {
    let last = grid.len() - 1;
    if !(t >= grid[0] && t <= grid[last]) {
        return None;
    }
    let k = grid.partition_point(|&g| g <= t);
    Some(k.saturating_sub(1).min(last - 1))
}

pub fn linspace(start: f64, stop: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::InvalidParams(format!("a grid needs at least 2 points, got {count}")));
    }
    let step = (stop - start) / (count - 1) as f64;
    Ok((0..count)
        .map(|k| if k == count - 1 { stop } else { start + step * k as f64 })
        .collect())
}

/// Free-function form of [`WindowSpec::window`] with an index check.
pub fn window(t: f64, interval: usize, spec: &WindowSpec) -> Result<f64> {
    if interval >= spec.interval_count() {
        return Err(Error::InvalidWindow(format!(
            "interval {interval} does not exist (grid has {})",
            spec.interval_count()
        )));
    }
    Ok(spec.window(t, interval))
}

/// Distribution of a single impulse `P(t_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImpulseDistribution {
    /// iid standard normal entries.
    StandardNormalDense,
    /// Diagonal of iid standard normals.
    StandardNormalDiagonal,
    /// Diagonal standard normals rescaled to unit spectral norm.
    UnitNormDiagonal,
}

impl ImpulseDistribution {
    pub fn name(self) -> &'static str {
        match self {
            Self::StandardNormalDense => "dense-normal",
            Self::StandardNormalDiagonal => "diag-normal",
            Self::UnitNormDiagonal => "diag-unit",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dense-normal" | "StandardNormalDense" => Ok(Self::StandardNormalDense),
            "diag-normal" | "StandardNormalDiagonal" => Ok(Self::StandardNormalDiagonal),
            "diag-unit" | "diag-gauss" | "UnitNormDiagonal" => Ok(Self::UnitNormDiagonal),
            other => Err(Error::InvalidParams(format!("unknown impulse distribution `{other}`"))),
        }
    }

    pub fn is_diagonal(self) -> bool {
        !matches!(self, Self::StandardNormalDense)
    }

    pub fn sample(self, n: usize, rng: &mut SeededRng) -> Result<RealSquareMatrix> {
        match self {
            Self::StandardNormalDense => RealSquareMatrix::from_row_major(n, rng::standard_normals(rng, n * n)),
            Self::StandardNormalDiagonal => RealSquareMatrix::from_diagonal(&rng::standard_normals(rng, n)),
            Self::UnitNormDiagonal => crate::paths::diagonal_gaussian_from(n, rng),
        }
    }

    /// Moments of one entry that can be nonzero (a diagonal entry for the
    /// diagonal kinds). For the rescaled diagonal the moments depend on `n`
    /// and are estimated from a fixed-seed sample of 4096 draws.
    pub fn moments(self, n: usize) -> Moments {
        match self {
            Self::StandardNormalDense | Self::StandardNormalDiagonal => Moments::gaussian(1.0),
            Self::UnitNormDiagonal => {
                let mut rng = rng::tagged_stream(0, tags::MOMENTS, n as u64);
                let (mut s2, mut s4) = (0.0, 0.0);
                let draws = 4096;
                for _ in 0..draws {
                    let mut p = rng::standard_normals(&mut rng, n);
                    let peak = p.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
                    p.iter_mut().for_each(|x| *x /= peak);
                    s2 += p.iter().map(|x| x * x).sum::<f64>();
                    s4 += p.iter().map(|x| x.powi(4)).sum::<f64>();
                }
                let count = (draws * n) as f64;
                Moments {
                    p2: s2 / count,
                    p4: s4 / count,
                }
            }
        }
    }
}

/// Second and fourth moments of one impulse entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub p2: f64,
    pub p4: f64,
}

impl Moments {
    /// Gaussian entries with variance `p2`: `E[p⁴] = 3 E[p²]²`.
    pub fn gaussian(p2: f64) -> Self {
        Self { p2, p4: 3.0 * p2 * p2 }
    }

    /// Symmetric `±1` entries.
    pub fn sign() -> Self {
        Self { p2: 1.0, p4: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticProcessSpec {
    pub base: RealSquareMatrix,
    pub window: WindowSpec,
    pub impulse: ImpulseDistribution,
    pub moments: Moments,
    pub seed: u64,
}

impl StochasticProcessSpec {
    pub fn new(base: RealSquareMatrix, window: WindowSpec, impulse: ImpulseDistribution, seed: u64) -> Self {
        let moments = impulse.moments(base.dim());
        Self {
            base,
            window,
            impulse,
            moments,
            seed,
        }
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// The impulse of interval `i`, drawn from its own stream.
    pub fn draw_impulse(&self, i: usize) -> Result<RealSquareMatrix> {
        self.impulse
            .sample(self.dim(), &mut rng::tagged_stream(self.seed, tags::IMPULSE, i as u64))
    }
}

/// A smoothed process with its impulses drawn.
#[derive(Debug, Clone)]
pub struct StochasticProcess {
    spec: StochasticProcessSpec,
    impulses: Vec<RealSquareMatrix>,
    /// `M_ε(t_i)` at every grid point.
    anchors: Vec<RealSquareMatrix>,
}

impl StochasticProcess {
    pub fn new(spec: StochasticProcessSpec) -> Result<Self> {
        let count = spec.window.interval_count();
        let impulses = (0..count)
            .map(|i| spec.draw_impulse(i))
            .collect::<Result<Vec<_>>>()?;
        Self::with_impulses(spec, impulses)
    }

    /// Uses the given impulses instead of drawing them.
    pub fn with_impulses(spec: StochasticProcessSpec, impulses: Vec<RealSquareMatrix>) -> Result<Self> {
        if impulses.len() != spec.window.interval_count() {
            return Err(Error::DimensionMismatch {
                expected: spec.window.interval_count(),
                found: impulses.len(),
            });
        }
        let mut anchors = vec![spec.base.clone()];
        for (i, p) in impulses.iter().enumerate() {
            spec.base.check_same(p)?;
            let next = anchors[i].add_scaled(p, spec.window.window_mass(i))?;
            anchors.push(next);
        }
        Ok(Self {
            spec,
            impulses,
            anchors,
        })
    }

    pub fn spec(&self) -> &StochasticProcessSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn domain(&self) -> (f64, f64) {
        self.spec.window.domain()
    }

    pub fn impulse(&self, i: usize) -> &RealSquareMatrix {
        &self.impulses[i]
    }

    pub fn impulses(&self) -> &[RealSquareMatrix] {
        &self.impulses
    }

    fn locate(&self, t: f64) -> Result<usize> {
        let (lo, hi) = self.domain();
        self.spec
            .window
            .interval_of(t)
            .ok_or(Error::OutOfDomain { t, lo, hi })
    }

    /// `P_ε(t) = P(t_i) W_ε(t)` for the interval containing `t`.
    pub fn smoothed_impulse(&self, t: f64) -> Result<RealSquareMatrix> {
        let i = self.locate(t)?;
        Ok(self.impulses[i].scaled(self.spec.window.window(t, i)))
    }

    pub fn smoothed_impulse_derivative(&self, t: f64) -> Result<RealSquareMatrix> {
        let i = self.locate(t)?;
        Ok(self.impulses[i].scaled(self.spec.window.window_derivative(t, i)))
    }

    /// `M_ε(t)` from the exact window integral, with `Ṁ_ε = P_ε` and
    /// `M̈_ε = P(t_i) W_ε'`.
    pub fn evaluate(&self, t: f64) -> Result<PathPoint> {
        let i = self.locate(t)?;
        let w = &self.spec.window;
        let p = &self.impulses[i];
        Ok(PathPoint {
            m: self.anchors[i].add_scaled(p, w.window_integral(t, i))?,
            mdot: p.scaled(w.window(t, i)),
            mddot: p.scaled(w.window_derivative(t, i)),
        })
    }
}

/// Integrates `Ṁ_ε = P_ε` with the classical fourth-order Runge-Kutta rule
/// and returns `step_count + 1` equally spaced samples from `t_0` to `t_end`.
///
/// Each output step is split at the layer joins and subdivided so that at
/// least 200 substeps fall inside every boundary layer (20 leave a relative
/// quadrature error near 1e-6 on the layer mass).
pub fn integrate_process(
    process: &StochasticProcess,
    t_end: f64,
    step_count: usize,
) -> Result<Vec<(f64, RealSquareMatrix)>> {
    let window = &process.spec.window;
    let (t0, hi) = window.domain();
    if !(t_end > t0 && t_end <= hi) {
        return Err(Error::OutOfDomain { t: t_end, lo: t0, hi });
    }
    if step_count == 0 {
        return Err(Error::InvalidParams("step count must be positive".into()));
    }
    let dt = (t_end - t0) / step_count as f64;
    let shortest = window
        .grid()
        .windows(2)
        .filter(|g| g[0] < t_end)
        .map(|g| g[1] - g[0])
        .fold(f64::INFINITY, f64::min);
    if dt > shortest / 2.0 {
        return Err(Error::InvalidParams(format!(
            "{step_count} steps give fewer than 2 samples on an interval of length {shortest}"
        )));
    }
    let max_h = window.epsilon() / 200.0;

    // The window is only C¹ where a layer meets the plateau, so substeps
    // never straddle a layer join or a grid point.
    let mut breaks: Vec<f64> = Vec::new();
    for i in 0..window.interval_count() {
        let (a, b) = window.interval(i);
        breaks.extend([a, a + window.epsilon(), b - window.epsilon()]);
    }
    breaks.push(hi);

    // The right-hand side depends on t only, so integrate the coefficient of
    // each impulse and assemble matrices at the output times.
    let intervals = window.interval_count();
    let mut coeff = vec![0.0; intervals];
    let assemble = |coeff: &[f64]| -> Result<RealSquareMatrix> {
        let mut m = process.spec.base.clone();
        for (i, &c) in coeff.iter().enumerate() {
            if c != 0.0 {
                m = m.add_scaled(&process.impulses[i], c)?;
            }
        }
        Ok(m)
    };
    let rk4 = |a: f64, b: f64, coeff: &mut Vec<f64>| {
        let Some(i) = window.interval_of(0.5 * (a + b)) else {
            return;
        };
        let substeps = ((b - a) / max_h).ceil().max(1.0) as usize;
        let h = (b - a) / substeps as f64;
        for s in 0..substeps {
            let t = a + h * s as f64;
            let t_next = if s + 1 == substeps { b } else { t + h };
            coeff[i] += h / 6.0 * (window.window(t, i) + 4.0 * window.window(t + 0.5 * h, i) + window.window(t_next, i));
        }
    };

    let mut out = Vec::with_capacity(step_count + 1);
    out.push((t0, assemble(&coeff)?));
    let mut start = t0;
    for k in 0..step_count {
        let t = if k + 1 == step_count { t_end } else { t0 + dt * (k + 1) as f64 };
        let mut a = start;
        for &b in breaks.iter().filter(|&&b| b > start && b < t).chain(std::iter::once(&t)) {
            rk4(a, b, &mut coeff);
            a = b;
        }
        out.push((t, assemble(&coeff)?));
        start = t;
    }
    Ok(out)
}

/// The piecewise-linear process `M(t_i + δt) = M(t_i) + δt s_i P(t_i)`.
///
/// With Wiener scaling `s_i = 1/sqrt(t_{i+1} - t_i)`, so the increment over a
/// full interval is `sqrt(t_{i+1} - t_i) P(t_i)`; otherwise `s_i = 1`.
#[derive(Debug, Clone)]
pub struct DiscreteProcess {
    grid: Vec<f64>,
    impulses: Vec<RealSquareMatrix>,
    anchors: Vec<RealSquareMatrix>,
    rates: Vec<f64>,
}

impl DiscreteProcess {
    pub fn new(
        base: RealSquareMatrix,
        grid: Vec<f64>,
        impulse: ImpulseDistribution,
        seed: u64,
        wiener: bool,
    ) -> Result<Self> {
        check_grid(&grid)?;
        let impulses = (0..grid.len() - 1)
            .map(|i| impulse.sample(base.dim(), &mut rng::tagged_stream(seed, tags::IMPULSE, i as u64)))
            .collect::<Result<Vec<_>>>()?;
        Self::with_impulses(base, grid, impulses, wiener)
    }

    pub fn with_impulses(
        base: RealSquareMatrix,
        grid: Vec<f64>,
        impulses: Vec<RealSquareMatrix>,
        wiener: bool,
    ) -> Result<Self> {
        check_grid(&grid)?;
        if impulses.len() != grid.len() - 1 {
            return Err(Error::DimensionMismatch {
                expected: grid.len() - 1,
                found: impulses.len(),
            });
        }
        let rates: Vec<f64> = grid
            .windows(2)
            .map(|w| if wiener { 1.0 / (w[1] - w[0]).sqrt() } else { 1.0 })
            .collect();
        let mut anchors = vec![base];
        for (i, p) in impulses.iter().enumerate() {
            anchors[i].check_same(p)?;
            let next = anchors[i].add_scaled(p, (grid[i + 1] - grid[i]) * rates[i])?;
            anchors.push(next);
        }
        Ok(Self {
            grid,
            impulses,
            anchors,
            rates,
        })
    }

    pub fn dim(&self) -> usize {
        self.anchors[0].dim()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.grid[0], *self.grid.last().expect("grid has two points"))
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn impulse(&self, i: usize) -> &RealSquareMatrix {
        &self.impulses[i]
    }

    /// `M(t)` with the one-sided (right) derivative `Ṁ = s_i P(t_i)`.
    pub fn evaluate(&self, t: f64) -> Result<PathPoint> {
        let (lo, hi) = self.domain();
        let i = locate(&self.grid, t).ok_or(Error::OutOfDomain { t, lo, hi })?;
        let rate = self.rates[i];
        let p = &self.impulses[i];
        Ok(PathPoint {
            m: self.anchors[i].add_scaled(p, (t - self.grid[i]) * rate)?,
            mdot: p.scaled(rate),
            mddot: RealSquareMatrix::zeros(self.dim())?,
        })
    }
}

/// Expected eigenvalue velocity under zero-mean impulses: identically 0.
pub fn expected_velocity(spec: &StochasticProcessSpec) -> Vec<c64> {
    vec![c64::new(0.0, 0.0); spec.dim()]
}

/// Expected acceleration of one eigenvalue under a random impulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedAcceleration {
    /// Expected conjugate-pair term; `None` for a real eigenvalue, where it
    /// is undefined.
    pub cc: Option<c64>,
    /// Expected `2 Σ_{j∉{i,ī}} c_ij c_ji / (λ_i - λ_j)`.
    pub other: c64,
}

impl ExpectedAcceleration {
    pub fn total(&self) -> c64 {
        self.cc.unwrap_or_default() + self.other
    }

    pub fn is_real_flagged(&self) -> bool {
        self.cc.is_none()
    }
}

/// `E[c_ij c_ji]` for every `(i, j)` under dense iid impulses with unit
/// variance: `(u_i^* ū_j)(v_iᵀ v_j)`.
pub fn pair_moment_matrix_iid(sys: &BiorthogonalEigenSystem) -> Mat<c64> {
    let l = sys.left();
    let v = sys.right();
    let gu = l * l.transpose();
    let gv = v.transpose() * v;
    Mat::from_fn(sys.dim(), sys.dim(), |i, j| gu[(i, j)] * gv[(i, j)])
}

/// `E[c_ij c_ji] = Σ_{m,l} S_ml ū_i^m ū_j^m v_j^l v_i^l` for independent
/// zero-mean entries with variances `S_ml`.
pub fn pair_moment_matrix(sys: &BiorthogonalEigenSystem, second_moments: &RealSquareMatrix) -> Result<Mat<c64>> {
    let n = sys.dim();
    if second_moments.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: second_moments.dim(),
        });
    }
    let l = sys.left();
    let v = sys.right();
    let s = second_moments.to_complex();
    // E_ij = Σ_m (L_im L_jm) Σ_l S_ml (V_lj V_li).
    let mut out = Mat::<c64>::zeros(n, n);
    for i in 0..n {
        let vi_scaled = Mat::<c64>::from_fn(n, n, |row, j| v[(row, j)] * v[(row, i)]);
        let sv = &s * &vi_scaled;
        for j in 0..n {
            out[(i, j)] = (0..n).map(|m| l[(i, m)] * l[(j, m)] * sv[(m, j)]).sum();
        }
    }
    Ok(out)
}

fn accelerations_from_pair_moments(sys: &BiorthogonalEigenSystem, e: &Mat<c64>, scale: f64) -> Vec<ExpectedAcceleration> {
    let n = sys.dim();
    let l = sys.eigenvalues();
    (0..n)
        .map(|i| {
            let partner = sys.conjugate_partner(i);
            let cc = partner.map(|p| 2.0 * scale * e[(i, p)] / (l[i] - l[p]));
            let other: c64 = (0..n)
                .filter(|&j| j != i && Some(j) != partner)
                .map(|j| e[(i, j)] / (l[i] - l[j]))
                .sum();
            ExpectedAcceleration {
                cc,
                other: 2.0 * scale * other,
            }
        })
        .collect()
}

/// `E[λ̈_i]` under dense iid impulses with second moment `p2`:
/// conjugate term `-i p2 ‖u_i‖²/Im λ_i`, other term
/// `2 p2 Σ_{j∉{i,ī}} (v_iᵀ v_j)(u_i^* ū_j)/(λ_i - λ_j)`.
pub fn expected_acceleration(sys: &BiorthogonalEigenSystem, p2: f64) -> Vec<ExpectedAcceleration> {
    accelerations_from_pair_moments(sys, &pair_moment_matrix_iid(sys), p2)
}

/// `E[λ̈_i]` for independent entries with per-entry second moments.
pub fn expected_acceleration_with_moments(
    sys: &BiorthogonalEigenSystem,
    second_moments: &RealSquareMatrix,
) -> Result<Vec<ExpectedAcceleration>> {
    Ok(accelerations_from_pair_moments(sys, &pair_moment_matrix(sys, second_moments)?, 1.0))
}

/// On-disk process description.
///
/// `base` is a matrix file path or a generator spec such as `hn:g=0.2`;
/// `grid` is either `{start, stop, count}` or an explicit array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessFile {
    pub base: String,
    #[serde(default)]
    pub n: Option<usize>,
    pub grid: GridSpec,
    pub epsilon: f64,
    pub impulse: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Uniform { start: f64, stop: f64, count: usize },
    Explicit(Vec<f64>),
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>> {
        match self {
            Self::Uniform { start, stop, count } => linspace(*start, *stop, *count),
            Self::Explicit(v) => Ok(v.clone()),
        }
    }
}

impl ProcessFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))
    }

    /// Resolves the base matrix and builds the spec. Relative matrix paths
    /// are taken relative to `dir`.
    pub fn into_spec(self, default_n: usize, dir: Option<&Path>) -> Result<StochasticProcessSpec> {
        let n = self.n.unwrap_or(default_n);
        let base = if self.base.ends_with(".json") || self.base.starts_with("file:") {
            let raw = self.base.trim_start_matches("file:");
            let mut p = PathBuf::from(raw);
            if p.is_relative() {
                if let Some(d) = dir {
                    p = d.join(p);
                }
            }
            RealSquareMatrix::load(p)?
        } else {
            self.base.parse::<GeneratorSpec>()?.build(n, self.seed, 0)?
        };
        let window = WindowSpec::new(self.grid.points()?, self.epsilon)?;
        let impulse = ImpulseDistribution::parse(&self.impulse)?;
        Ok(StochasticProcessSpec::new(base, window, impulse, self.seed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_mass_matches_quadrature() {
        assert!((bump_integral(1.0) - BUMP_MASS).abs() < 1e-13);
    }

    #[test]
    fn bump_values() {
        assert_eq!(bump_left(1.0 + 0.2, 1.0, 0.2), 1.0);
        assert_eq!(bump_left(1.0, 1.0, 0.2), 0.0);
        assert!((bump_left(1.1, 1.0, 0.2) - (-1.0f64 / 3.0).exp()).abs() < 1e-12);
        assert_eq!(bump_right(2.0, 2.0, 0.2), 0.0);
        assert_eq!(bump_right(1.8, 2.0, 0.2), 1.0);
    }

    #[test]
    fn window_rejects_wide_layers() {
        assert!(matches!(WindowSpec::new(vec![0.0, 1.0], 0.5), Err(Error::InvalidWindow(_))));
        assert!(matches!(WindowSpec::new(vec![0.0, 1.0, 1.0], 0.1), Err(Error::NonMonotoneGrid(2))));
    }

    #[test]
    fn window_integral_is_continuous() {
        let w = WindowSpec::new(vec![0.0, 1.0], 0.1).unwrap();
        for t in [0.1, 0.9] {
            let a = w.window_integral(t - 1e-12, 0);
            let b = w.window_integral(t + 1e-12, 0);
            assert!((a - b).abs() < 1e-10);
        }
        assert!((w.window_integral(1.0, 0) - w.window_mass(0)).abs() < 1e-14);
    }

    #[test]
    fn process_file_parses_both_grid_forms() {
        let a: ProcessFile = serde_json::from_str(
            r#"{"base":"hn:g=0.2","n":8,"grid":{"start":0,"stop":1,"count":5},"epsilon":0.05,"impulse":"diag-unit","seed":3}"#,
        )
        .unwrap();
        assert_eq!(a.grid.points().unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let b: ProcessFile = serde_json::from_str(
            r#"{"base":"antisym","grid":[0,0.5,1],"epsilon":0.1,"impulse":"dense-normal","seed":1}"#,
        )
        .unwrap();
        let spec = b.into_spec(4, None).unwrap();
        assert_eq!(spec.dim(), 4);
        assert_eq!(spec.window.interval_count(), 2);
    }
}
