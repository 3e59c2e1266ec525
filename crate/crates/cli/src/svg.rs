//! Gray-scale scatter plots of eigenvalue positions.
//!
//! Real part runs horizontally, imaginary part vertically, with equal
//! scales on both axes. Each frame is drawn as dots whose gray level goes
//! from white at the first parameter value to black at the last.

use std::fmt::Write;

use eigenmotion_core::c64;

const WIDTH: f64 = 800.0;
const MARGIN: f64 = 20.0;
const DOT_RADIUS: f64 = 1.6;
const MARKER_RADIUS: f64 = 3.2;

#[derive(Debug, Clone, Default)]
pub struct PlotOptions {
    pub grayscale: bool,
    pub xlim: Option<(f64, f64)>,
    pub ylim: Option<(f64, f64)>,
    /// Join consecutive frames index by index.
    pub lines: bool,
    pub start_markers: Option<Vec<c64>>,
    pub end_markers: Option<Vec<c64>>,
}

/// One plotted sample: parameter value and the points at that value.
pub struct Frame<'a> {
    pub t: f64,
    pub points: &'a [c64],
}

struct Viewport {
    x0: f64,
    y1: f64,
    scale: f64,
    height: f64,
}

impl Viewport {
    fn new(frames: &[Frame<'_>], opts: &PlotOptions) -> Self {
        let all = frames
            .iter()
            .flat_map(|f| f.points.iter())
            .chain(opts.start_markers.iter().flatten())
            .chain(opts.end_markers.iter().flatten());
        let (mut xlo, mut xhi, mut ylo, mut yhi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for z in all.filter(|z| z.re.is_finite() && z.im.is_finite()) {
            xlo = xlo.min(z.re);
            xhi = xhi.max(z.re);
            ylo = ylo.min(z.im);
            yhi = yhi.max(z.im);
        }
        if !xlo.is_finite() {
            (xlo, xhi, ylo, yhi) = (-1.0, 1.0, -1.0, 1.0);
        }
        let pad = |lo: f64, hi: f64| {
            let w = (hi - lo).max(1e-9);
            (lo - 0.05 * w, hi + 0.05 * w)
        };
        let (mut xlo, mut xhi) = opts.xlim.unwrap_or_else(|| pad(xlo, xhi));
        let (mut ylo, mut yhi) = opts.ylim.unwrap_or_else(|| pad(ylo, yhi));
        // Keep the canvas between 1:4 and 2:1 by widening the short side.
        let widen = |lo: &mut f64, hi: &mut f64, span: f64| {
            let mid = 0.5 * (*lo + *hi);
            *lo = mid - 0.5 * span;
            *hi = mid + 0.5 * span;
        };
        if yhi - ylo < 0.25 * (xhi - xlo) {
            widen(&mut ylo, &mut yhi, 0.25 * (xhi - xlo));
        }
        if yhi - ylo > 2.0 * (xhi - xlo) {
            widen(&mut xlo, &mut xhi, 0.5 * (yhi - ylo));
        }
        let scale = (WIDTH - 2.0 * MARGIN) / (xhi - xlo);
        Self {
            x0: xlo,
            y1: yhi,
            scale,
            height: (yhi - ylo) * scale + 2.0 * MARGIN,
        }
    }

    fn x(&self, re: f64) -> f64 {
        MARGIN + (re - self.x0) * self.scale
    }

    fn y(&self, im: f64) -> f64 {
        MARGIN + (self.y1 - im) * self.scale
    }
}

/// Gray level in `0..=255` for a parameter fraction in `[0, 1]`.
pub fn gray_level(fraction: f64) -> u8 {
    (255.0 * (1.0 - fraction.clamp(0.0, 1.0))).round() as u8
}

pub fn render(frames: &[Frame<'_>], opts: &PlotOptions) -> String {
    let vp = Viewport::new(frames, opts);
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#,
        w = WIDTH,
        h = vp.height.ceil()
    );
    let _ = writeln!(s, r#"<rect class="background" width="100%" height="100%" fill="rgb(236,236,236)"/>"#);
    let (xa, xb) = (vp.x(vp.x0), WIDTH - MARGIN);
    let y_axis = vp.y(0.0);
    if (MARGIN..=vp.height - MARGIN).contains(&y_axis) {
        let _ = writeln!(
            s,
            r#"<line class="axis" x1="{xa:.2}" y1="{y_axis:.2}" x2="{xb:.2}" y2="{y_axis:.2}" stroke="rgb(160,160,160)" stroke-width="0.5"/>"#
        );
    }
    let x_axis = vp.x(0.0);
    if (MARGIN..=WIDTH - MARGIN).contains(&x_axis) {
        let _ = writeln!(
            s,
            r#"<line class="axis" x1="{x_axis:.2}" y1="{MARGIN:.2}" x2="{x_axis:.2}" y2="{:.2}" stroke="rgb(160,160,160)" stroke-width="0.5"/>"#,
            vp.height - MARGIN
        );
    }

    if opts.lines && frames.len() > 1 {
        let tracks = frames.iter().map(|f| f.points.len()).min().unwrap_or(0);
        for a in 0..tracks {
            let pts: Vec<String> = frames
                .iter()
                .map(|f| format!("{:.2},{:.2}", vp.x(f.points[a].re), vp.y(f.points[a].im)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline class="track" points="{}" fill="none" stroke="rgb(120,120,120)" stroke-width="0.4"/>"#,
                pts.join(" ")
            );
        }
    }

    let (t0, t1) = match (frames.first(), frames.last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => (0.0, 1.0),
    };
    let span = if t1 > t0 { t1 - t0 } else { 1.0 };
    for f in frames {
        let level = if opts.grayscale { gray_level((f.t - t0) / span) } else { 0 };
        for z in f.points {
            let _ = writeln!(
                s,
                r#"<circle class="dot" cx="{:.2}" cy="{:.2}" r="{DOT_RADIUS}" fill="rgb({level},{level},{level})"/>"#,
                vp.x(z.re),
                vp.y(z.im)
            );
        }
    }

    for z in opts.start_markers.iter().flatten() {
        let _ = writeln!(
            s,
            r#"<circle class="start" cx="{:.2}" cy="{:.2}" r="{MARKER_RADIUS}" fill="rgb(220,0,0)"/>"#,
            vp.x(z.re),
            vp.y(z.im)
        );
    }
    for z in opts.end_markers.iter().flatten() {
        let (cx, cy, r) = (vp.x(z.re), vp.y(z.im), MARKER_RADIUS * 1.3);
        let _ = writeln!(
            s,
            r#"<polygon class="end" points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="rgb(0,0,220)"/>"#,
            cx,
            cy - r,
            cx + r,
            cy,
            cx,
            cy + r,
            cx - r,
            cy
        );
    }
    s.push_str("</svg>\n");
    s
}
