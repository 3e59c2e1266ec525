//! Eigenvalue trajectories along a matrix path.
//!
//! The spectrum is computed independently at every sample time and
//! consecutive spectra are joined by a minimum-cost assignment under
//! `|λ - λ'|`. Where two tracks come closer than their own step length the
//! assignment is re-decided by the smaller total turning angle, and the step
//! is flagged. Events are read off the real/upper/lower state of each track.

use std::fmt::Write as _;

use faer::c64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forces::velocity;
use crate::matrix::RealSquareMatrix;
use crate::paths::{GeneratorSpec, MatrixPath};
use crate::spectral::{self, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    /// A conjugate pair lands on the real axis.
    Realization,
    /// Two real eigenvalues leave the real axis as a conjugate pair.
    Departure,
    /// Tracks passed through (or near) a collision; identities across the
    /// bracket were decided by the turning-angle rule.
    NearDegeneracy,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Realization => "Realization",
            Self::Departure => "Departure",
            Self::NearDegeneracy => "NearDegeneracy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t_lo: f64,
    pub t_hi: f64,
    pub kind: EventKind,
    pub tracks: Vec<usize>,
    /// Sample index closing the bracket.
    #[serde(skip)]
    pub step: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrackOptions {
    /// Match against `λ + λ̇ Δt` instead of `λ`; useful for coarse sampling.
    pub extrapolate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    sample_times: Vec<f64>,
    /// `positions[s][a]`: position of track `a` at sample `s`.
    positions: Vec<Vec<c64>>,
    /// Real-classification threshold of each sample.
    tolerances: Vec<f64>,
    /// Assignment cost of each step `s -> s+1`.
    matching_cost: Vec<f64>,
    /// Steps whose identities were decided by the turning-angle rule.
    low_confidence: Vec<bool>,
    events: Vec<Event>,
    t_start: f64,
    t_end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Upper,
    Lower,
    Real,
}

/// Spectrum at one sample.
struct Sample {
    t: f64,
    values: Vec<c64>,
    tol: f64,
    velocity: Option<Vec<c64>>,
    perturbed: bool,
}

/// Spectrum at `t` and whether it is degenerate.
fn sample_spectrum(path: &MatrixPath, t: f64, with_velocity: bool) -> Result<(Sample, bool)> {
    let m = path.matrix_at(t).map_err(|e| e.at(t))?;
    let norm = m.spectral_norm();
    let tol = Tolerances::default();
    let values = spectral::eigenvalues(&m).map_err(|e| e.at(t))?;
    let degenerate = min_gap(&values) <= tol.degeneracy * norm;
    let velocity = if with_velocity && !degenerate {
        spectral::decompose(&m, None)
            .ok()
            .and_then(|sys| {
                let mdot = path.evaluate(t).ok()?.mdot;
                velocity(&sys, &mdot).ok()
            })
    } else {
        None
    };
    let sample = Sample {
        t,
        values,
        tol: tol.real * norm,
        velocity,
        perturbed: false,
    };
    Ok((sample, degenerate))
}

fn min_gap(values: &[c64]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            gap = gap.min((values[i] - values[j]).norm());
        }
    }
    gap
}

/// Decomposes at `t`; a degenerate spectrum is retried at `t ± 0.05 dt`
/// (inside the path domain).
fn robust_sample(path: &MatrixPath, t: f64, dt: f64, with_velocity: bool) -> Result<Sample> {
    let (first, degenerate) = sample_spectrum(path, t, with_velocity)?;
    if !degenerate || dt == 0.0 {
        return Ok(first);
    }
    let (lo, hi) = path.domain();
    for shift in [0.05 * dt, -0.05 * dt] {
        let t2 = t + shift;
        if t2 < lo || t2 > hi {
            continue;
        }
        let (sample, degenerate) = sample_spectrum(path, t2, with_velocity)?;
        if !degenerate {
            return Ok(Sample { perturbed: true, ..sample });
        }
    }
    // Keep the degenerate sample; the step is flagged below.
    Ok(Sample { perturbed: true, ..first })
}

/// Minimum-cost perfect assignment (Kuhn-Munkres with potentials).
/// Returns `assign[row] = column`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        if p[j] != 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

/// Angle between two displacements; `π/2` when either is zero.
fn turning_angle(a: c64, b: c64) -> f64 {
    if a.norm() == 0.0 || b.norm() == 0.0 {
        return std::f64::consts::FRAC_PI_2;
    }
    (b / a).arg().abs()
}

fn side(z: c64, tol: f64) -> Side {
    if z.im > tol {
        Side::Upper
    } else if z.im < -tol {
        Side::Lower
    } else {
        Side::Real
    }
}

/// Tracks eigenvalues along `path` at `sample_count` equally spaced times
/// from `t_start` to `t_end`.
pub fn track(path: &MatrixPath, t_start: f64, t_end: f64, sample_count: usize) -> Result<Trajectory> {
    track_with(path, t_start, t_end, sample_count, TrackOptions::default())
}

pub fn track_with(
    path: &MatrixPath,
    t_start: f64,
    t_end: f64,
    sample_count: usize,
    options: TrackOptions,
) -> Result<Trajectory> {
    if sample_count < 2 {
        return Err(Error::InvalidParams(format!("need at least 2 samples, got {sample_count}")));
    }
    if t_end.is_nan() || t_start.is_nan() || t_end <= t_start {
        return Err(Error::InvalidParams(format!("empty time range [{t_start}, {t_end}]")));
    }
    let times = crate::stochastic::linspace(t_start, t_end, sample_count)?;
    let dt = (t_end - t_start) / (sample_count - 1) as f64;
    let samples: Vec<Sample> = times
        .par_iter()
        .map(|&t| robust_sample(path, t, dt, options.extrapolate))
        .collect::<Result<Vec<_>>>()?;

    let n = samples[0].values.len();
    let mut positions = vec![samples[0].values.clone()];
    let mut velocities: Vec<Option<c64>> = match &samples[0].velocity {
        Some(v) => v.iter().map(|&x| Some(x)).collect(),
        None => vec![None; n],
    };
    let mut matching_cost = Vec::with_capacity(sample_count - 1);
    let mut low_confidence = Vec::with_capacity(sample_count - 1);
    let mut events = Vec::new();
    if samples[0].perturbed {
        events.push(Event {
            t_lo: samples[0].t,
            t_hi: samples[0].t,
            kind: EventKind::NearDegeneracy,
            tracks: (0..n).collect(),
            step: 0,
        });
    }

    for s in 1..samples.len() {
        let prev = &positions[s - 1];
        let next = &samples[s].values;
        let step_dt = samples[s].t - samples[s - 1].t;
        let predicted: Vec<c64> = (0..n)
            .map(|a| match velocities[a] {
                Some(v) if options.extrapolate => prev[a] + v * step_dt,
                _ => prev[a],
            })
            .collect();
        let cost: Vec<Vec<f64>> = (0..n)
            .map(|a| (0..n).map(|j| (predicted[a] - next[j]).norm()).collect())
            .collect();
        let mut assign = hungarian(&cost);

        let mut stitched: Vec<usize> = Vec::new();
        if s >= 2 {
            let before = &positions[s - 2];
            let prev_dt = samples[s - 1].t - samples[s - 2].t;
            let v_in: Vec<c64> = (0..n).map(|a| (prev[a] - before[a]) / prev_dt).collect();
            for a in 0..n {
                for b in a + 1..n {
                    let (xa, xb) = (next[assign[a]], next[assign[b]]);
                    let reach = 2.0 * step_dt * v_in[a].norm().max(v_in[b].norm());
                    if (xa - xb).norm().min((prev[a] - prev[b]).norm()) > reach {
                        continue;
                    }
                    if prefer_swap(prev[a], prev[b], xa, xb, v_in[a], v_in[b], step_dt) == Some(true) {
                        assign.swap(a, b);
                    }
                    stitched.extend([a, b]);
                }
            }
            check_ambiguity(prev, next, &assign, &v_in, step_dt, samples[s].tol, samples[s].t)?;
        }
        stitched.sort_unstable();
        stitched.dedup();

        let cost_total: f64 = (0..n).map(|a| (prev[a] - next[assign[a]]).norm()).sum();
        matching_cost.push(cost_total);
        let flagged = !stitched.is_empty() || samples[s].perturbed;
        low_confidence.push(flagged);
        if flagged {
            events.push(Event {
                t_lo: samples[s - 1].t,
                t_hi: samples[s].t,
                kind: EventKind::NearDegeneracy,
                tracks: if stitched.is_empty() { (0..n).collect() } else { stitched },
                step: s,
            });
        }
        positions.push((0..n).map(|a| next[assign[a]]).collect());
        velocities = (0..n)
            .map(|a| samples[s].velocity.as_ref().map(|v| v[assign[a]]))
            .collect();
    }

    let sample_times: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let tolerances: Vec<f64> = samples.iter().map(|s| s.tol).collect();
    events.extend(side_events(&sample_times, &positions, &tolerances));
    events.sort_by(|a, b| {
        a.step
            .cmp(&b.step)
            .then(a.kind.name().cmp(b.kind.name()))
            .then(a.tracks.cmp(&b.tracks))
    });
    Ok(Trajectory {
        sample_times,
        positions,
        tolerances,
        matching_cost,
        low_confidence,
        events,
        t_start,
        t_end,
    })
}

/// Rejects assignments whose best transposition costs the same (to 1e-12)
/// unless the tie is explained by conjugate symmetry or settled by
/// [`prefer_swap`].
fn check_ambiguity(prev: &[c64], next: &[c64], assign: &[usize], v_in: &[c64], dt: f64, tol: f64, t: f64) -> Result<()> {
    let n = prev.len();
    let scale = prev.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let pair_tol = 10.0 * tol.max(1e-12 * scale);
    for a in 0..n {
        for b in a + 1..n {
            let (xa, xb) = (next[assign[a]], next[assign[b]]);
            let gap = (prev[a] - xb).norm() + (prev[b] - xa).norm() - (prev[a] - xa).norm() - (prev[b] - xb).norm();
            if gap >= 1e-12 * scale {
                continue;
            }
            let mirror = (prev[a] - prev[b].conj()).norm() <= pair_tol || (xa - xb.conj()).norm() <= pair_tol;
            if mirror
                || reflection_tie(prev[a], prev[b], xa, xb, v_in[a], v_in[b], pair_tol, dt)
                || prefer_swap(prev[a], prev[b], xa, xb, v_in[a], v_in[b], dt).is_some()
            {
                continue;
            }
            return Err(Error::MatchingAmbiguous { t, gap });
        }
    }
    Ok(())
}

/// True when a reflection of the plane maps one continuation onto the
/// other, so that only the labels differ. Either the reflection exchanges the
/// two tracks (positions and incoming velocities) and fixes each new
/// position, or it fixes each track and exchanges the new positions, as at a
/// collision on a symmetry axis of the spectrum.
#[allow(clippy::too_many_arguments)]
fn reflection_tie(pa: c64, pb: c64, xa: c64, xb: c64, va: c64, vb: c64, tol: f64, dt: f64) -> bool {
    let v_tol = 4.0 * tol / dt + 1e-9 * va.norm().max(vb.norm());
    let close = |u: c64, w: c64| (u - w).norm() <= tol;
    // Reflection across the perpendicular bisector of `from` and `to`.
    let mirror = |from: c64, to: c64| {
        let mid = 0.5 * (from + to);
        let d = (to - from) / (to - from).norm();
        let flip = move |w: c64| w - 2.0 * (w * d.conj()).re * d;
        (flip, move |z: c64| mid + flip(z - mid))
    };
    let exchange_tracks = (pa - pb).norm() > tol && {
        let (flip, reflect) = mirror(pa, pb);
        (flip(va) - vb).norm() <= v_tol && close(reflect(xa), xa) && close(reflect(xb), xb)
    };
    let exchange_targets = (xa - xb).norm() > tol && {
        let (flip, reflect) = mirror(xa, xb);
        close(reflect(pa), pa)
            && close(reflect(pb), pb)
            && (flip(va) - va).norm() <= v_tol
            && (flip(vb) - vb).norm() <= v_tol
    };
    exchange_tracks || exchange_targets
}

/// Decides between continuing `pa -> xa, pb -> xb` and the transposed
/// continuation by total turning angle, then by total change of velocity.
/// `None` when both tie.
fn prefer_swap(pa: c64, pb: c64, xa: c64, xb: c64, va: c64, vb: c64, dt: f64) -> Option<bool> {
    let keep = turning_angle(va, xa - pa) + turning_angle(vb, xb - pb);
    let swap = turning_angle(va, xb - pa) + turning_angle(vb, xa - pb);
    if (keep - swap).abs() > 1e-9 {
        return Some(swap < keep);
    }
    let kick = |v: c64, p: c64, x: c64| (v - (x - p) / dt).norm();
    let keep = kick(va, pa, xa) + kick(vb, pb, xb);
    let swap = kick(va, pa, xb) + kick(vb, pb, xa);
    let scale = va.norm().max(vb.norm()).max(f64::MIN_POSITIVE);
    if (keep - swap).abs() > 1e-9 * scale {
        Some(swap < keep)
    } else {
        None
    }
}

/// Realization/Departure events from side changes between samples, grouped
/// by conjugate partner.
fn side_events(times: &[f64], positions: &[Vec<c64>], tolerances: &[f64]) -> Vec<Event> {
    let mut events = Vec::new();
    let n = positions[0].len();
    for s in 1..positions.len() {
        let (before, after) = (&positions[s - 1], &positions[s]);
        let mut realizing = Vec::new();
        let mut departing = Vec::new();
        for a in 0..n {
            let from = side(before[a], tolerances[s - 1]);
            let to = side(after[a], tolerances[s]);
            match (from, to) {
                (Side::Real, Side::Real) => {}
                (Side::Real, _) => departing.push(a),
                (_, Side::Real) => realizing.push(a),
                (f, t) if f != t => {
                    realizing.push(a);
                    departing.push(a);
                }
                _ => {}
            }
        }
        let group = |mut members: Vec<usize>, at: &[c64], kind: EventKind, events: &mut Vec<Event>| {
            while let Some(a) = members.first().copied() {
                members.remove(0);
                let partner = members
                    .iter()
                    .enumerate()
                    .filter(|(_, &b)| {
                        let scale = at[a].norm().max(1.0);
                        (at[a] - at[b].conj()).norm() <= 1e-6 * scale
                    })
                    .min_by(|x, y| {
                        (at[a] - at[*x.1].conj())
                            .norm()
                            .total_cmp(&(at[a] - at[*y.1].conj()).norm())
                    })
                    .map(|(k, _)| k);
                let mut tracks = vec![a];
                if let Some(k) = partner {
                    tracks.push(members.remove(k));
                }
                tracks.sort_unstable();
                events.push(Event {
                    t_lo: times[s - 1],
                    t_hi: times[s],
                    kind,
                    tracks,
                    step: s,
                });
            }
        };
        // A realizing pair is still non-real (mirrored) before the step; a
        // departing pair is mirrored after it.
        group(realizing, before, EventKind::Realization, &mut events);
        group(departing, after, EventKind::Departure, &mut events);
    }
    events
}

impl Trajectory {
    pub fn sample_times(&self) -> &[f64] {
        &self.sample_times
    }

    pub fn sample_count(&self) -> usize {
        self.sample_times.len()
    }

    pub fn track_count(&self) -> usize {
        self.positions[0].len()
    }

    /// Positions of all tracks at sample `s`.
    pub fn positions_at(&self, s: usize) -> &[c64] {
        &self.positions[s]
    }

    /// Positions of track `a` over all samples.
    pub fn track(&self, a: usize) -> Vec<c64> {
        self.positions.iter().map(|p| p[a]).collect()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn matching_cost(&self) -> &[f64] {
        &self.matching_cost
    }

    pub fn low_confidence_steps(&self) -> Vec<usize> {
        self.low_confidence
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(|(s, _)| s + 1)
            .collect()
    }

    pub fn tolerance_at(&self, s: usize) -> f64 {
        self.tolerances[s]
    }

    pub fn time_range(&self) -> (f64, f64) {
        (self.t_start, self.t_end)
    }

    pub fn is_real(&self, s: usize, a: usize) -> bool {
        self.positions[s][a].im.abs() <= self.tolerances[s]
    }

    /// Number of real track positions at sample `s`.
    pub fn real_count(&self, s: usize) -> usize {
        (0..self.track_count()).filter(|&a| self.is_real(s, a)).count()
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    /// Largest distance from the conjugate of a track position to the
    /// nearest track position, over all samples.
    pub fn mirror_violation(&self) -> f64 {
        self.positions
            .iter()
            .map(|p| {
                p.iter()
                    .map(|z| p.iter().map(|w| (z.conj() - w).norm()).fold(f64::INFINITY, f64::min))
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Tracks whose imaginary part changes sign without both a Realization
    /// and a Departure on that track in between. Returns `(track, step)`.
    pub fn unexplained_crossings(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.track_count() {
            let mut last_side: Option<(Side, usize)> = None;
            for s in 0..self.sample_count() {
                let here = side(self.positions[s][a], self.tolerances[s]);
                if here == Side::Real {
                    continue;
                }
                if let Some((prev, ps)) = last_side {
                    if prev != here {
                        let involves = |k: EventKind| {
                            self.events
                                .iter()
                                .any(|e| e.kind == k && e.tracks.contains(&a) && e.step > ps && e.step <= s)
                        };
                        if !(involves(EventKind::Realization) && involves(EventKind::Departure)) {
                            out.push((a, s));
                        }
                    }
                }
                last_side = Some((here, s));
            }
        }
        out
    }

    /// CSV with header `step,t,track,re,im,is_real,event`, one row per
    /// sample and track. `event` lists the kinds of events on that track
    /// whose bracket closes at the sample, separated by `|`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,t,track,re,im,is_real,event\n");
        for s in 0..self.sample_count() {
            for a in 0..self.track_count() {
                let z = self.positions[s][a];
                let kinds: Vec<&str> = self
                    .events
                    .iter()
                    .filter(|e| e.step == s && e.tracks.contains(&a))
                    .map(|e| e.kind.name())
                    .collect();
                let _ = writeln!(
                    out,
                    "{s},{},{a},{},{},{},{}",
                    self.sample_times[s],
                    z.re,
                    z.im,
                    self.is_real(s, a),
                    kinds.join("|")
                );
            }
        }
        out
    }

    pub fn events_json(&self) -> String {
        events_to_json(&self.events)
    }
}

pub fn events_to_json(events: &[Event]) -> String {
    serde_json::to_string_pretty(events).expect("events serialize")
}

/// Refines every Realization and Departure bracket by re-decomposing `path`
/// inside it until the bracket is no wider than `(t_end - t_start)/10⁶`.
///
/// Brackets in which a pair touches the real axis without staying there
/// (one Realization and one Departure on the same tracks) are refined by a
/// golden-section search for the smallest imaginary part.
/// Track and its partner tracks, keying a refined touch bracket.
type TouchKey = (usize, Vec<usize>);

pub fn collision_events(traj: &Trajectory, path: &MatrixPath) -> Result<Vec<Event>> {
    let (t0, t1) = traj.time_range();
    let width = (t1 - t0) / 1e6;
    let mut touch_cache: Vec<(TouchKey, (f64, f64))> = Vec::new();
    let mut out = Vec::with_capacity(traj.events.len());
    for e in &traj.events {
        if e.kind == EventKind::NearDegeneracy {
            out.push(e.clone());
            continue;
        }
        let s = e.step;
        let other = if e.kind == EventKind::Realization {
            EventKind::Departure
        } else {
            EventKind::Realization
        };
        let touch = traj
            .events
            .iter()
            .any(|f| f.kind == other && f.step == s && f.tracks == e.tracks);
        let key = (s, e.tracks.clone());
        let bracket = if touch {
            match touch_cache.iter().find(|(k, _)| *k == key) {
                Some((_, b)) => *b,
                None => {
                    let b = refine_touch(traj, path, e, width)?;
                    touch_cache.push((key, b));
                    b
                }
            }
        } else {
            refine_transition(traj, path, e, width)?
        };
        out.push(Event {
            t_lo: bracket.0,
            t_hi: bracket.1,
            ..e.clone()
        });
    }
    Ok(out)
}

/// Eigenvalues at `t` closest to the linear interpolation of the event's
/// tracks across the bracket.
fn pair_at(traj: &Trajectory, path: &MatrixPath, e: &Event, t: f64) -> Result<(Vec<c64>, f64)> {
    let m = path.matrix_at(t).map_err(|err| err.at(t))?;
    let tol = Tolerances::default().real * m.spectral_norm();
    let values = spectral::eigenvalues(&m).map_err(|err| err.at(t))?;
    let s = e.step;
    let (ta, tb) = (traj.sample_times[s - 1], traj.sample_times[s]);
    let w = if tb > ta { (t - ta) / (tb - ta) } else { 0.5 };
    let mut taken = vec![false; values.len()];
    let mut picked = Vec::new();
    for &a in &e.tracks {
        let guess = traj.positions[s - 1][a] * (1.0 - w) + traj.positions[s][a] * w;
        let k = (0..values.len())
            .filter(|&k| !taken[k])
            .min_by(|&x, &y| (values[x] - guess).norm().total_cmp(&(values[y] - guess).norm()))
            .ok_or(Error::SolverFailure)?;
        taken[k] = true;
        picked.push(values[k]);
    }
    Ok((picked, tol))
}

fn refine_transition(traj: &Trajectory, path: &MatrixPath, e: &Event, width: f64) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (e.t_lo, e.t_hi);
    let real_at_hi = e.kind == EventKind::Realization;
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        let (pair, tol) = pair_at(traj, path, e, mid)?;
        let all_real = pair.iter().all(|z| z.im.abs() <= tol);
        if all_real == real_at_hi {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

fn refine_touch(traj: &Trajectory, path: &MatrixPath, e: &Event, width: f64) -> Result<(f64, f64)> {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let height = |t: f64| -> Result<f64> {
        let (pair, _) = pair_at(traj, path, e, t)?;
        Ok(pair.iter().map(|z| z.im.abs()).fold(0.0, f64::max))
    };
    let (mut lo, mut hi) = (e.t_lo, e.t_hi);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = height(x1)?;
    let mut f2 = height(x2)?;
    while hi - lo > width {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = height(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = height(x2)?;
        }
    }
    Ok((lo, hi))
}

/// Number of eigenvalues with `|Im λ| <= real_tolerance` (default
/// `1e-9 ‖M‖₂`).
pub fn real_census(m: &RealSquareMatrix, real_tolerance: Option<f64>) -> Result<usize> {
    let tol = real_tolerance.unwrap_or_else(|| Tolerances::default().real * m.spectral_norm());
    Ok(spectral::eigenvalues(m)?.iter().filter(|z| z.im.abs() <= tol).count())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusStats {
    pub n: usize,
    pub draws: usize,
    pub counts: Vec<usize>,
    pub mean: f64,
    pub stderr: f64,
    /// `sqrt(2n/π)`.
    pub reference: f64,
}

/// Real-eigenvalue census over `draws` independent matrices of a family.
pub fn ensemble_census(generator: &GeneratorSpec, n: usize, draws: usize, seed: u64) -> Result<CensusStats> {
    if draws == 0 {
        return Err(Error::InvalidParams("census needs at least one draw".into()));
    }
    let seed = generator.seed.unwrap_or(seed);
    let counts = (0..draws)
        .into_par_iter()
        .map(|d| {
            let m = generator.build(n, seed, d as u64)?;
            real_census(&m, None)
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = counts.iter().sum::<usize>() as f64 / draws as f64;
    let var = if draws > 1 {
        counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (draws - 1) as f64
    } else {
        0.0
    };
    Ok(CensusStats {
        n,
        draws,
        counts,
        mean,
        stderr: (var / draws as f64).sqrt(),
        reference: (2.0 * n as f64 / std::f64::consts::PI).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hungarian_finds_optimum() {
        let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let a = hungarian(&cost);
        let total: f64 = (0..3).map(|i| cost[i][a[i]]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn turning_angles() {
        assert_eq!(turning_angle(c64::new(1.0, 0.0), c64::new(2.0, 0.0)), 0.0);
        assert!((turning_angle(c64::new(1.0, 0.0), c64::new(-1.0, 0.0)) - std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(turning_angle(c64::new(0.0, 0.0), c64::new(1.0, 0.0)), std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn census_of_diagonal_and_rotation() {
        let d = RealSquareMatrix::from_diagonal(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(real_census(&d, None).unwrap(), 4);
        let a = crate::paths::antisymmetric_tridiagonal(6).unwrap();
        assert_eq!(real_census(&a, None).unwrap(), 0);
    }
}
