//! Experiment settings: defaults, then a JSON config file, then flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathKind {
    /// `(1 - t) M1 + t M2`.
    Interp,
    /// `M1 + t M2`.
    Perturb,
    /// `M1 + t I`.
    Drift,
    /// Hatano-Nelson plus `t` times a unit-norm random diagonal.
    HnDemo1,
    /// Hatano-Nelson driven by piecewise-linear diagonal impulses.
    HnDemo2,
    /// Hatano-Nelson driven by window-smoothed diagonal impulses.
    Smoothed,
}

impl PathKind {
    fn default_tmax(self) -> f64 {
        match self {
            Self::Interp | Self::Perturb | Self::Drift => 1.0,
            Self::HnDemo1 => 2.0,
            Self::HnDemo2 | Self::Smoothed => 12.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Forces,
    Expect,
    Census,
    Window,
    Hn,
}

/// Every setting, all optional. Used both as the flag set and as the
/// config file schema.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct Settings {
    /// JSON file with any of these settings; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Matrix path to follow.
    #[arg(long, value_enum)]
    pub path: Option<PathKind>,
    /// First matrix: generator spec such as `hn:g=0.2`, `ginibre`, `file:m.json`.
    #[arg(long)]
    pub m1: Option<String>,
    /// Second matrix (interpolation target or perturbation direction).
    #[arg(long)]
    pub m2: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Hatano-Nelson asymmetry; the sweep end for `hn`.
    #[arg(long)]
    pub g: Option<f64>,
    /// Evaluation time for `forces`.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte-Carlo draws (`expect`, `census`).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Boundary-layer width of the smoothing window.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Spacing of the impulse grid.
    #[arg(long)]
    pub spacing: Option<f64>,
    /// Impulse distribution: dense-normal, diag-normal or diag-unit.
    #[arg(long)]
    pub impulse: Option<String>,
    /// Matrix class assumed by `expect`: general or normal.
    #[arg(long)]
    pub class: Option<String>,
    /// Rescale generated matrices to unit spectral norm unless the spec sets `norm=`.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub normalize: Option<bool>,
    /// Refine event brackets by bisection.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub refine: Option<bool>,
    /// Match samples against first-order predictions.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub extrapolate: Option<bool>,

    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// SVG plot file.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub grayscale: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub start_markers: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub end_markers: Option<bool>,
    /// Connect each track with a thin line.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub lines: Option<bool>,
    /// Real-axis range `lo,hi`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub xlim: Option<Vec<f64>>,
    /// Imaginary-axis range `lo,hi`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub ylim: Option<Vec<f64>>,

    /// Worker thread cap.
    #[arg(long)]
    pub threads: Option<usize>,
}

macro_rules! layer {
    ($flags:expr, $file:expr, $($field:ident),*) => {
        Settings {
            config: $flags.config.clone(),
            $($field: $flags.$field.clone().or_else(|| $file.$field.clone()),)*
        }
    };
}

impl Settings {
    /// Flags over the config file named by `--config`, if any.
    pub fn layered(self) -> Result<Settings, CliError> {
        let file = match &self.config {
            Some(p) => load_file(p)?,
            None => Settings::default(),
        };
        Ok(layer!(
            self, file, path, m1, m2, n, g, t, tmax, steps, seed, samples, epsilon, spacing, impulse, class,
            normalize, refine, extrapolate, out, svg, grayscale, start_markers, end_markers, lines, xlim, ylim,
            threads
        ))
    }
}

fn load_file(path: &Path) -> Result<Settings, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
}

/// Fully resolved settings, written next to the outputs.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub command: Command,
    pub path: PathKind,
    pub m1: String,
    pub m2: String,
    pub n: usize,
    pub g: f64,
    pub t: f64,
    pub tmax: f64,
    pub steps: usize,
    pub seed: u64,
    pub samples: usize,
    pub epsilon: f64,
    pub spacing: f64,
    pub impulse: String,
    pub class: String,
    pub normalize: bool,
    pub refine: bool,
    pub extrapolate: bool,
    pub out: PathBuf,
    pub svg: Option<PathBuf>,
    pub grayscale: bool,
    pub start_markers: bool,
    pub end_markers: bool,
    pub lines: bool,
    pub xlim: Option<(f64, f64)>,
    pub ylim: Option<(f64, f64)>,
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip)]
    pub seed_generated: bool,
}

fn limits(v: Option<Vec<f64>>, name: &str) -> Result<Option<(f64, f64)>, CliError> {
    match v.as_deref() {
        None => Ok(None),
        Some(&[lo, hi]) if lo < hi && lo.is_finite() && hi.is_finite() => Ok(Some((lo, hi))),
        Some(_) => Err(CliError::Config(format!("{name} needs two finite increasing values"))),
    }
}

fn fresh_seed() -> u64 {
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0);
    // splitmix64 finalizer so nearby clocks give unrelated seeds.
    let mut z = nanos ^ (u64::from(std::process::id()) << 32);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl ExperimentConfig {
    pub fn resolve(command: Command, s: Settings) -> Result<Self, CliError> {
        let path = s.path.unwrap_or(PathKind::Interp);
        let (m1_default, m2_default) = match (command, path) {
            (Command::Expect | Command::Census, _) => ("ginibre", "ginibre"),
            (_, PathKind::Interp) => ("antisym", "hn:g=-0.4"),
            (_, PathKind::Perturb) => ("orthogonal", "ginibre"),
            _ => ("ginibre", "ginibre"),
        };
        let g_default = if command == Command::Hn { 1.0 } else { 0.2 };
        let tmax = s.tmax.unwrap_or(match command {
            Command::Window => 1.0,
            _ => path.default_tmax(),
        });
        let steps = s.steps.unwrap_or(match (command, path) {
            (Command::Simulate, PathKind::HnDemo2 | PathKind::Smoothed) => (tmax / 0.01).round() as usize,
            _ => 200,
        });
        let (seed, seed_generated) = match s.seed {
            Some(seed) => (seed, false),
            None => (fresh_seed(), true),
        };
        let cfg = Self {
            command,
            path,
            m1: s.m1.unwrap_or_else(|| m1_default.into()),
            m2: s.m2.unwrap_or_else(|| m2_default.into()),
            n: s.n.unwrap_or(16),
            g: s.g.unwrap_or(g_default),
            t: s.t.unwrap_or(0.0),
            tmax,
            steps,
            seed,
            samples: s.samples.unwrap_or(10_000),
            epsilon: s.epsilon.unwrap_or(0.05),
            spacing: s.spacing.unwrap_or(0.25),
            impulse: s.impulse.unwrap_or_else(|| match (command, path) {
                (Command::Expect, _) => "dense-normal".into(),
                _ => "diag-unit".into(),
            }),
            class: s.class.unwrap_or_else(|| "general".into()),
            normalize: s.normalize.unwrap_or(true),
            refine: s.refine.unwrap_or(false),
            extrapolate: s.extrapolate.unwrap_or(false),
            out: s.out.unwrap_or_else(|| PathBuf::from("out")),
            svg: s.svg,
            grayscale: s.grayscale.unwrap_or(true),
            start_markers: s.start_markers.unwrap_or(true),
            end_markers: s.end_markers.unwrap_or(true),
            lines: s.lines.unwrap_or(false),
            xlim: limits(s.xlim, "xlim")?,
            ylim: limits(s.ylim, "ylim")?,
            threads: s.threads,
            seed_generated,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if self.steps == 0 {
            return bad("steps must be at least 1".into());
        }
        if !(self.tmax.is_finite() && self.tmax > 0.0) {
            return bad(format!("tmax must be positive, got {}", self.tmax));
        }
        if !self.g.is_finite() || !self.t.is_finite() {
            return bad("g and t must be finite".into());
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return bad(format!("spacing must be positive, got {}", self.spacing));
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        if matches!(self.command, Command::Census) && self.samples == 0 {
            return bad("census needs at least one sample".into());
        }
        if !matches!(self.class.as_str(), "general" | "normal") {
            return bad(format!("class must be general or normal, got `{}`", self.class));
        }
        Ok(())
    }

    /// Equal intervals from 0 to `tmax`, as close to `spacing` as divides it.
    pub fn impulse_grid(&self) -> Vec<f64> {
        let k = ((self.tmax / self.spacing).round() as usize).max(1);
        (0..=k)
            .map(|i| if i == k { self.tmax } else { i as f64 * self.tmax / k as f64 })
            .collect()
    }
}
