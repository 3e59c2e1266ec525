use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use eigenmotion_core::analytics::{
    first_variation_variance, other_force_variance, sample_forces, MatrixClass, PerturbationKind, VarianceBreakdown,
};
use eigenmotion_core::paths::{diagonal_gaussian_impulse, hatano_nelson};
use eigenmotion_core::spectral::{eigenvalues, spectral_order};
use eigenmotion_core::stochastic::{
    expected_acceleration, expected_acceleration_with_moments, linspace, DiscreteProcess,
};
use eigenmotion_core::tracking::{collision_events, ensemble_census, events_to_json, track_with, EventKind, TrackOptions};
use eigenmotion_core::{
    c64, decompose, force_decomposition, GeneratorSpec, HatanoNelsonParams, ImpulseDistribution, MatrixPath,
    RealSquareMatrix, StochasticProcess, StochasticProcessSpec, WindowSpec,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, PathKind};
use crate::svg::{self, Frame, PlotOptions};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn check_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let probe = dir.join(".eigenmotion-write-check");
    fs::write(&probe, b"").map_err(|e| io_err(dir, e))?;
    fs::remove_file(&probe).map_err(|e| io_err(&probe, e))
}

/// Creates the output locations and checks they are writable, then records
/// the resolved configuration.
pub fn prepare_outputs(cfg: &ExperimentConfig) -> Result<()> {
    check_writable(&cfg.out)?;
    if let Some(svg) = &cfg.svg {
        match svg.parent().filter(|p| !p.as_os_str().is_empty()) {
            Some(dir) => check_writable(dir)?,
            None => check_writable(Path::new("."))?,
        }
    }
    let text = serde_json::to_string_pretty(cfg).expect("config serializes");
    write(&cfg.out.join("config.json"), &text)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn generator(cfg: &ExperimentConfig, spec: &str, slot: u64) -> Result<RealSquareMatrix> {
    let mut spec: GeneratorSpec = spec.parse()?;
    if cfg.normalize && spec.norm.is_none() {
        spec.norm = Some(1.0);
    }
    Ok(spec.build(cfg.n, cfg.seed, slot)?)
}

fn hn_base(cfg: &ExperimentConfig) -> Result<RealSquareMatrix> {
    Ok(hatano_nelson(HatanoNelsonParams::new(cfg.n, cfg.g)?)?)
}

pub fn build_path(cfg: &ExperimentConfig) -> Result<MatrixPath> {
    let impulse = || ImpulseDistribution::parse(&cfg.impulse);
    Ok(match cfg.path {
        PathKind::Interp => MatrixPath::interpolation(generator(cfg, &cfg.m1, 0)?, generator(cfg, &cfg.m2, 1)?)?,
        PathKind::Perturb => MatrixPath::perturbation(generator(cfg, &cfg.m1, 0)?, generator(cfg, &cfg.m2, 1)?)?,
        PathKind::Drift => MatrixPath::identity_drift(generator(cfg, &cfg.m1, 0)?),
        PathKind::HnDemo1 => MatrixPath::perturbation(hn_base(cfg)?, diagonal_gaussian_impulse(cfg.n, cfg.seed)?)?,
        PathKind::HnDemo2 => MatrixPath::Discrete(Box::new(DiscreteProcess::new(
            hn_base(cfg)?,
            cfg.impulse_grid(),
            impulse()?,
            cfg.seed,
            false,
        )?)),
        PathKind::Smoothed => {
            let window = WindowSpec::new(cfg.impulse_grid(), cfg.epsilon)?;
            let spec = StochasticProcessSpec::new(hn_base(cfg)?, window, impulse()?, cfg.seed);
            MatrixPath::SmoothedStochastic(Box::new(StochasticProcess::new(spec)?))
        }
    })
}

fn plot_options(cfg: &ExperimentConfig) -> PlotOptions {
    PlotOptions {
        grayscale: cfg.grayscale,
        xlim: cfg.xlim,
        ylim: cfg.ylim,
        lines: cfg.lines,
        start_markers: None,
        end_markers: None,
    }
}

fn sorted_eigenvalues(m: &RealSquareMatrix) -> Result<Vec<c64>> {
    let mut l = eigenvalues(m)?;
    l.sort_by(spectral_order);
    Ok(l)
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<()> {
    let path = build_path(cfg)?;
    let (lo, hi) = path.domain();
    if cfg.tmax > hi {
        return Err(CliError::Config(format!("tmax {} is past the end of the path domain [{lo}, {hi}]", cfg.tmax)));
    }
    let t0 = lo.max(0.0);
    let traj = track_with(
        &path,
        t0,
        cfg.tmax,
        cfg.steps + 1,
        TrackOptions {
            extrapolate: cfg.extrapolate,
        },
    )?;
    let events = if cfg.refine {
        collision_events(&traj, &path)?
    } else {
        traj.events().to_vec()
    };
    write(&cfg.out.join("trajectory.csv"), &traj.to_csv())?;
    write(&cfg.out.join("events.json"), &events_to_json(&events))?;

    if let Some(svg_path) = &cfg.svg {
        let mut opts = plot_options(cfg);
        if cfg.start_markers {
            opts.start_markers = Some(traj.positions_at(0).to_vec());
        }
        if cfg.end_markers {
            if let Some(target) = path.target() {
                opts.end_markers = Some(sorted_eigenvalues(target)?);
            }
        }
        let frames: Vec<Frame<'_>> = traj
            .sample_times()
            .iter()
            .enumerate()
            .map(|(s, &t)| Frame {
                t,
                points: traj.positions_at(s),
            })
            .collect();
        write(svg_path, &svg::render(&frames, &opts))?;
    }

    let count = |k: EventKind| events.iter().filter(|e| e.kind == k).count();
    println!(
        "samples {} tracks {} realizations {} departures {} real {} -> {}",
        traj.sample_count(),
        traj.track_count(),
        count(EventKind::Realization),
        count(EventKind::Departure),
        traj.real_count(0),
        traj.real_count(traj.sample_count() - 1)
    );
    Ok(())
}

pub fn forces(cfg: &ExperimentConfig) -> Result<()> {
    let path = build_path(cfg)?;
    let t = cfg.t;
    let report = path
        .evaluate(t)
        .and_then(|p| {
            let sys = decompose(&p.m, None)?;
            force_decomposition(&sys, &p.mdot, &p.mddot)
        })
        .map_err(|e| e.at(t))?;
    write(&cfg.out.join("forces.json"), &report.to_json())?;
    println!("eigenvalues {} singular {}", report.len(), report.has_singularity());
    Ok(())
}

#[derive(Serialize)]
struct ExpectRecord {
    lambda: [f64; 2],
    cc_expected: Option<[f64; 2]>,
    other_expected: [f64; 2],
    sigma1_sq: f64,
    variance_breakdown: Option<VarianceBreakdown>,
    mc_estimate: Option<[f64; 2]>,
    mc_stderr: Option<f64>,
    n_samples: usize,
}

fn pair(z: c64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn expect(cfg: &ExperimentConfig) -> Result<()> {
    let m = generator(cfg, &cfg.m1, 0)?;
    let dist = ImpulseDistribution::parse(&cfg.impulse)?;
    let moments = dist.moments(cfg.n);
    let class = if cfg.class == "normal" {
        MatrixClass::Normal
    } else {
        MatrixClass::General
    };
    let sys = decompose(&m, None)?;
    let kind = PerturbationKind::from(dist);
    let expected = match kind {
        PerturbationKind::DenseIid => expected_acceleration(&sys, moments.p2),
        PerturbationKind::DiagonalIid => {
            let s = RealSquareMatrix::from_diagonal(&vec![moments.p2; cfg.n])?;
            expected_acceleration_with_moments(&sys, &s)?
        }
    };
    let sigma1 = first_variation_variance(&sys, class, kind, moments.p2)?;
    let breakdown = match kind {
        PerturbationKind::DenseIid => Some(other_force_variance(&sys, moments)),
        PerturbationKind::DiagonalIid => None,
    };
    let mc = if cfg.samples > 0 {
        Some(sample_forces(&sys, dist, cfg.samples, cfg.seed)?)
    } else {
        None
    };
    let records: Vec<ExpectRecord> = (0..sys.dim())
        .map(|i| ExpectRecord {
            lambda: pair(sys.eigenvalue(i)),
            cc_expected: expected[i].cc.map(pair),
            other_expected: pair(expected[i].other),
            sigma1_sq: sigma1[i],
            variance_breakdown: breakdown.as_ref().map(|b| b[i]),
            mc_estimate: mc.as_ref().map(|s| pair(s.acceleration[i].mean)),
            mc_stderr: mc.as_ref().map(|s| s.acceleration[i].stderr()),
            n_samples: mc.as_ref().map_or(0, |s| s.count() as usize),
        })
        .collect();
    let text = serde_json::to_string_pretty(&records).expect("report serializes");
    write(&cfg.out.join("expect.json"), &text)?;
    println!("eigenvalues {} draws {}", records.len(), cfg.samples);
    Ok(())
}

pub fn census(cfg: &ExperimentConfig) -> Result<()> {
    let spec: GeneratorSpec = cfg.m1.parse()?;
    let stats = ensemble_census(&spec, cfg.n, cfg.samples, cfg.seed)?;
    let text = serde_json::to_string_pretty(&stats).expect("census serializes");
    write(&cfg.out.join("census.json"), &text)?;
    if let Some(svg_path) = &cfg.svg {
        let seed = spec.seed.unwrap_or(cfg.seed);
        let spectra: Vec<Vec<c64>> = (0..cfg.samples)
            .into_par_iter()
            .map(|d| sorted_eigenvalues(&spec.build(cfg.n, seed, d as u64)?))
            .collect::<Result<_>>()?;
        let frames: Vec<Frame<'_>> = spectra
            .iter()
            .enumerate()
            .map(|(d, l)| Frame { t: d as f64, points: l })
            .collect();
        let opts = PlotOptions {
            grayscale: false,
            ..plot_options(cfg)
        };
        write(svg_path, &svg::render(&frames, &opts))?;
    }
    println!("mean {} stderr {} reference {}", stats.mean, stats.stderr, stats.reference);
    Ok(())
}

pub fn window(cfg: &ExperimentConfig) -> Result<()> {
    let spec = WindowSpec::new(cfg.impulse_grid(), cfg.epsilon)?;
    let mut csv = String::from("t,interval,w,dw\n");
    for t in linspace(0.0, cfg.tmax, cfg.steps + 1)? {
        for i in 0..spec.interval_count() {
            let (a, b) = spec.interval(i);
            if t >= a && t <= b {
                let _ = writeln!(csv, "{t},{i},{},{}", spec.window(t, i), spec.window_derivative(t, i));
            }
        }
    }
    write(&cfg.out.join("window.csv"), &csv)?;
    println!("intervals {} epsilon {}", spec.interval_count(), cfg.epsilon);
    Ok(())
}

pub fn hn(cfg: &ExperimentConfig) -> Result<()> {
    let gs = linspace(0.0, cfg.g, cfg.steps + 1)?;
    let spectra: Vec<Vec<c64>> = gs
        .par_iter()
        .map(|&g| {
            let m = hatano_nelson(HatanoNelsonParams::new(cfg.n, g)?)?;
            sorted_eigenvalues(&m)
        })
        .collect::<Result<_>>()?;
    let mut csv = String::from("g,index,re,im\n");
    for (g, l) in gs.iter().zip(&spectra) {
        for (k, z) in l.iter().enumerate() {
            let _ = writeln!(csv, "{g},{k},{},{}", z.re, z.im);
        }
    }
    write(&cfg.out.join("hn.csv"), &csv)?;
    if let Some(svg_path) = &cfg.svg {
        let mut opts = plot_options(cfg);
        if cfg.start_markers {
            opts.start_markers = Some(spectra[0].clone());
        }
        let frames: Vec<Frame<'_>> = gs
            .iter()
            .zip(&spectra)
            .map(|(&t, l)| Frame { t, points: l })
            .collect();
        write(svg_path, &svg::render(&frames, &opts))?;
    }
    println!("values {} n {}", gs.len(), cfg.n);
    Ok(())
}
