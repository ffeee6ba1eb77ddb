//! The joint variable importance plot as a standalone SVG.
//!
//! [`layout`] turns a model into data-space geometry (points, bias curves,
//! pre/post trails) and [`render_svg`] maps that onto pixels. Rendering is
//! deterministic: element order follows covariate order and every coordinate
//! is printed with four decimals.
//!
//! CSS classes are part of the output contract: `point-pre`, `point-post`,
//! `bias-curve`, `var-label` (plus `post-trail` and `curve-label`).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{shown, JointVipModel, ReportOptions};
use crate::post::PostJointVipModel;

/// Vertices per curve branch before clipping.
pub const CURVE_SAMPLES: usize = 96;
/// Upper bound on the number of default curve levels.
pub const MAX_DEFAULT_CURVES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn span(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub opts: ReportOptions,
    /// `None` selects multiples of `bias_tol`, see [`default_curve_levels`].
    pub curve_levels: Option<Vec<f64>>,
    pub width_px: u32,
    pub height_px: u32,
    pub title: String,
    pub label_above_tol_only: bool,
    pub show_post_trails: bool,
}

impl Default for PlotSpec {
    fn default() -> Self {
        PlotSpec {
            opts: ReportOptions::default(),
            curve_levels: None,
            width_px: 720,
            height_px: 540,
            title: "Joint variable importance plot".to_string(),
            label_above_tol_only: true,
            show_post_trails: false,
        }
    }
}

impl PlotSpec {
    pub fn with_options(opts: ReportOptions) -> Self {
        PlotSpec { opts, ..PlotSpec::default() }
    }

    pub fn validate(&self) -> Result<()> {
        self.opts.validate()?;
        if self.width_px < 100 || self.height_px < 100 {
            return Err(Error::InvalidPlotSpec("width and height must be at least 100 px".into()));
        }
        if let Some(levels) = &self.curve_levels {
            if levels.is_empty() {
                return Err(Error::InvalidPlotSpec("curve_levels is empty".into()));
            }
            if levels.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
                return Err(Error::InvalidPlotSpec("curve levels must be finite and positive".into()));
            }
            if levels.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidPlotSpec("curve levels must be strictly ascending".into()));
            }
        }
        Ok(())
    }
}

/// Multiples of `bias_tol` up to the first one at or above `max_abs_bias`.
///
/// When that would exceed [`MAX_DEFAULT_CURVES`] levels the step grows to a
/// whole multiple of `bias_tol` so that at most that many are drawn.
pub fn default_curve_levels(bias_tol: f64, max_abs_bias: f64) -> Vec<f64> {
    let count = ((max_abs_bias / bias_tol).ceil() as usize).max(1);
    let stride = count.div_ceil(MAX_DEFAULT_CURVES);
    let steps = count.div_ceil(stride);
    (1..=steps).map(|k| (k * stride) as f64 * bias_tol).collect()
}

/// Samples `y = level / x` for `|x|` geometrically spaced over `magnitude`.
///
/// `magnitude` must satisfy `0 < lo < hi`; the open interval `(-lo, lo)`
/// around the pole is excluded. Absolute mode yields the first-quadrant
/// branch only; signed mode adds the third-quadrant branch. Each branch has
/// `n_samples` vertices ordered by increasing `|x|`.
pub fn bias_curve(level: f64, magnitude: Interval, n_samples: usize, signed: bool) -> Result<Vec<Vec<(f64, f64)>>> {
    if !(level.is_finite() && level > 0.0) {
        return Err(Error::InvalidRange(format!("curve level must be positive, got {level}")));
    }
    let Interval { lo, hi } = magnitude;
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
        return Err(Error::InvalidRange(format!("need 0 < lo < hi, got [{lo}, {hi}]")));
    }
    if n_samples < 2 {
        return Err(Error::InvalidRange("need at least two samples per branch".into()));
    }
    let ratio = hi / lo;
    let last = (n_samples - 1) as f64;
    let positive: Vec<(f64, f64)> = (0..n_samples)
        .map(|i| {
            let x = if i + 1 == n_samples { hi } else { lo * ratio.powf(i as f64 / last) };
            (x, level / x)
        })
        .collect();
    let mut branches = Vec::with_capacity(2);
    if signed {
        let negative = positive.iter().map(|&(x, _)| (-x, level / -x)).collect();
        branches.push(positive);
        branches.push(negative);
    } else {
        branches.push(positive);
    }
    Ok(branches)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Pre,
    Post,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub labeled: bool,
    pub kind: PointKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveBranch {
    pub level: f64,
    pub vertices: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trail {
    pub name: String,
    pub from: (f64, f64),
    pub to: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotGeometry {
    pub x_range: Interval,
    pub y_range: Interval,
    pub use_abs: bool,
    pub points: Vec<PlotPoint>,
    pub curves: Vec<CurveBranch>,
    pub trails: Vec<Trail>,
}

/// What to plot: a base model alone or with its post-adjustment overlay.
#[derive(Debug, Clone, Copy)]
pub enum PlotInput<'a> {
    Pre(&'a JointVipModel),
    Post(&'a PostJointVipModel),
}

impl<'a> From<&'a JointVipModel> for PlotInput<'a> {
    fn from(m: &'a JointVipModel) -> Self {
        PlotInput::Pre(m)
    }
}

impl<'a> From<&'a PostJointVipModel> for PlotInput<'a> {
    fn from(m: &'a PostJointVipModel) -> Self {
        PlotInput::Post(m)
    }
}

fn padded(values: impl Iterator<Item = f64> + Clone, use_abs: bool) -> Interval {
    if use_abs {
        let hi = values.fold(0.0, f64::max);
        return Interval::new(0.0, if hi > 0.0 { hi * 1.1 } else { 1.0 });
    }
    let lo = values.clone().fold(f64::INFINITY, f64::min);
    let hi = values.fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let pad = if span > 0.0 { 0.1 * span } else { (0.1 * hi.abs()).max(0.1) };
    Interval::new(lo - pad, hi + pad)
}

/// Longest contiguous runs of vertices inside the plotting box.
fn clip(vertices: &[(f64, f64)], x: Interval, y: Interval) -> Vec<Vec<(f64, f64)>> {
    let mut runs = Vec::new();
    let mut current = Vec::new();
    for &(vx, vy) in vertices {
        if x.contains(vx) && y.contains(vy) && vy.abs() <= 1.0 {
            current.push((vx, vy));
        } else if !current.is_empty() {
            runs.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        runs.push(current);
    }
    runs.retain(|r| r.len() >= 2);
    runs
}

pub fn layout<'a>(input: impl Into<PlotInput<'a>>, spec: &PlotSpec) -> Result<PlotGeometry> {
    spec.validate()?;
    let input = input.into();
    let base = match input {
        PlotInput::Pre(m) => m,
        PlotInput::Post(p) => p.base(),
    };
    if base.measures().is_empty() {
        return Err(Error::InvalidPlotSpec("model has no covariates".into()));
    }
    let opts = spec.opts;
    let flavor = opts.smd_flavor;
    let use_abs = opts.use_abs;

    let mut points: Vec<PlotPoint> = base
        .measures()
        .iter()
        .map(|m| PlotPoint {
            name: m.name.clone(),
            x: shown(m.smd(flavor), use_abs),
            y: shown(m.outcome_cor, use_abs),
            labeled: !spec.label_above_tol_only || m.bias(flavor).abs() > opts.bias_tol,
            kind: PointKind::Pre,
        })
        .collect();
    let mut trails = Vec::new();
    if let PlotInput::Post(post) = input {
        let n_pre = points.len();
        for (i, m) in post.post_measures().iter().enumerate() {
            let pre = &points[i];
            let after = PlotPoint {
                name: m.name.clone(),
                x: shown(m.smd(flavor), use_abs),
                y: pre.y,
                labeled: false,
                kind: PointKind::Post,
            };
            if spec.show_post_trails {
                trails.push(Trail { name: m.name.clone(), from: (pre.x, pre.y), to: (after.x, after.y) });
            }
            points.push(after);
        }
        debug_assert_eq!(points.len(), 2 * n_pre);
    }

    let x_range = padded(points.iter().map(|p| p.x), use_abs);
    let y_range = padded(points.iter().map(|p| p.y), use_abs);

    let levels = match &spec.curve_levels {
        Some(levels) => levels.clone(),
        None => default_curve_levels(opts.bias_tol, base.max_abs_bias(flavor)),
    };
    let max_x = x_range.lo.abs().max(x_range.hi.abs());
    let max_y = y_range.lo.abs().max(y_range.hi.abs()).min(1.0);
    let mut curves = Vec::new();
    for level in levels {
        let lo = level / max_y;
        if lo.is_nan() || lo >= max_x {
            continue;
        }
        for branch in bias_curve(level, Interval::new(lo, max_x), CURVE_SAMPLES, !use_abs)? {
            for vertices in clip(&branch, x_range, y_range) {
                curves.push(CurveBranch { level, vertices });
            }
        }
    }

    Ok(PlotGeometry { x_range, y_range, use_abs, points, curves, trails })
}

const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 56.0;

/// Data-to-pixel mapping for one plot.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub x_range: Interval,
    pub y_range: Interval,
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
}

impl Frame {
    pub fn new(geom: &PlotGeometry, spec: &PlotSpec) -> Self {
        Frame {
            x_range: geom.x_range,
            y_range: geom.y_range,
            left: MARGIN_LEFT,
            top: MARGIN_TOP,
            width: spec.width_px as f64 - MARGIN_LEFT - MARGIN_RIGHT,
            height: spec.height_px as f64 - MARGIN_TOP - MARGIN_BOTTOM,
        }
    }

    pub fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x_range.lo) / self.x_range.span() * self.width
    }

    pub fn py(&self, y: f64) -> f64 {
        self.top + (self.y_range.hi - y) / self.y_range.span() * self.height
    }

    /// Inverse of [`Frame::px`].
    pub fn data_x(&self, px: f64) -> f64 {
        self.x_range.lo + (px - self.left) / self.width * self.x_range.span()
    }

    /// Inverse of [`Frame::py`].
    pub fn data_y(&self, py: f64) -> f64 {
        self.y_range.hi - (py - self.top) / self.height * self.y_range.span()
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

struct Num(f64);

impl std::fmt::Display for Num {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let v = if self.0 == 0.0 { 0.0 } else { self.0 };
        write!(f, "{v:.4}")
    }
}

/// Tick positions at 1/2/5 multiples of a power of ten, with their labels.
fn ticks(range: Interval, target: usize) -> Vec<(f64, String)> {
    let raw = range.span() / target as f64;
    let magnitude = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * magnitude).find(|s| *s >= raw).unwrap_or(10.0 * magnitude);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (range.lo / step).ceil() as i64;
    let last = (range.hi / step).floor() as i64;
    (first..=last)
        .map(|k| {
            let v = k as f64 * step;
            let v = if v == 0.0 { 0.0 } else { v };
            (v, format!("{v:.decimals$}"))
        })
        .collect()
}

const STYLE: &str = "\
.background{fill:#ffffff}\
.title{font:bold 16px sans-serif;fill:#222222}\
.axis{stroke:#333333;stroke-width:1}\
.zero-line{stroke:#999999;stroke-width:1;stroke-dasharray:4 3}\
.tick{font:11px sans-serif;fill:#333333}\
.axis-title{font:13px sans-serif;fill:#222222}\
.bias-curve{fill:none;stroke:#c0504d;stroke-width:1;stroke-opacity:0.55}\
.curve-label{font:10px sans-serif;fill:#c0504d}\
.post-trail{stroke:#9e9e9e;stroke-width:1}\
.point-pre{fill:none;stroke:#1f4e79;stroke-width:1.5}\
.point-post{fill:#1f4e79;stroke:#1f4e79;stroke-width:1}\
.var-label{font:11px sans-serif;fill:#1f4e79}";

/// Serializes a geometry as a standalone SVG 1.1 document.
pub fn render_svg(geom: &PlotGeometry, spec: &PlotSpec) -> String {
    let frame = Frame::new(geom, spec);
    let (w, h) = (spec.width_px, spec.height_px);
    let mut s = String::new();
    // fmt::Write into a String cannot fail
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, "<style>{STYLE}</style>");
    let _ = writeln!(s, r#"<rect class="background" x="0" y="0" width="{w}" height="{h}"/>"#);
    let _ = writeln!(
        s,
        r#"<text class="title" x="{}" y="26" text-anchor="middle">{}</text>"#,
        Num(w as f64 / 2.0),
        escape(&spec.title)
    );

    let (x0, x1) = (frame.left, frame.left + frame.width);
    let (y0, y1) = (frame.top, frame.top + frame.height);
    let _ = writeln!(s, r#"<g class="axes">"#);
    let _ = writeln!(s, r#"<line class="axis" x1="{}" y1="{}" x2="{}" y2="{}"/>"#, Num(x0), Num(y1), Num(x1), Num(y1));
    let _ = writeln!(s, r#"<line class="axis" x1="{}" y1="{}" x2="{}" y2="{}"/>"#, Num(x0), Num(y0), Num(x0), Num(y1));
    if !geom.use_abs {
        if geom.x_range.contains(0.0) {
            let zx = frame.px(0.0);
            let _ = writeln!(
                s,
                r#"<line class="zero-line" x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
                Num(zx),
                Num(y0),
                Num(zx),
                Num(y1)
            );
        }
        if geom.y_range.contains(0.0) {
            let zy = frame.py(0.0);
            let _ = writeln!(
                s,
                r#"<line class="zero-line" x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
                Num(x0),
                Num(zy),
                Num(x1),
                Num(zy)
            );
        }
    }
    for (v, label) in ticks(geom.x_range, 6) {
        let px = frame.px(v);
        let _ = writeln!(
            s,
            r#"<line class="axis" x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
            Num(px),
            Num(y1),
            Num(px),
            Num(y1 + 5.0)
        );
        let _ = writeln!(
            s,
            r#"<text class="tick" x="{}" y="{}" text-anchor="middle">{label}</text>"#,
            Num(px),
            Num(y1 + 18.0)
        );
    }
    for (v, label) in ticks(geom.y_range, 6) {
        let py = frame.py(v);
        let _ = writeln!(
            s,
            r#"<line class="axis" x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
            Num(x0 - 5.0),
            Num(py),
            Num(x0),
            Num(py)
        );
        let _ = writeln!(
            s,
            r#"<text class="tick" x="{}" y="{}" text-anchor="end">{label}</text>"#,
            Num(x0 - 8.0),
            Num(py + 4.0)
        );
    }
    let (x_title, y_title) = if geom.use_abs {
        ("Absolute SMD (pilot SD)", "Absolute outcome correlation (pilot)")
    } else {
        ("SMD (pilot SD)", "Outcome correlation (pilot)")
    };
    let _ = writeln!(
        s,
        r#"<text class="axis-title" x="{}" y="{}" text-anchor="middle">{x_title}</text>"#,
        Num((x0 + x1) / 2.0),
        Num(h as f64 - 14.0)
    );
    let _ = writeln!(
        s,
        r#"<text class="axis-title" x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{y_title}</text>"#,
        Num((y0 + y1) / 2.0),
        Num((y0 + y1) / 2.0)
    );
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g class="curves">"#);
    for curve in &geom.curves {
        let mut d = String::new();
        for (i, (x, y)) in curve.vertices.iter().enumerate() {
            let _ = write!(d, "{}{} {}", if i == 0 { "M" } else { " L" }, Num(frame.px(*x)), Num(frame.py(*y)));
        }
        let _ = writeln!(s, r#"<path class="bias-curve" data-level="{}" d="{d}"/>"#, curve.level);
        if let Some(&(x, y)) = curve.vertices.last() {
            let _ = writeln!(
                s,
                r#"<text class="curve-label" x="{}" y="{}">{}</text>"#,
                Num(frame.px(x) - 2.0),
                Num(frame.py(y) - 3.0),
                curve.level
            );
        }
    }
    let _ = writeln!(s, "</g>");

    if !geom.trails.is_empty() {
        let _ = writeln!(s, r#"<g class="trails">"#);
        for t in &geom.trails {
            let _ = writeln!(
                s,
                r#"<line class="post-trail" x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
                Num(frame.px(t.from.0)),
                Num(frame.py(t.from.1)),
                Num(frame.px(t.to.0)),
                Num(frame.py(t.to.1))
            );
        }
        let _ = writeln!(s, "</g>");
    }

    let _ = writeln!(s, r#"<g class="points">"#);
    for p in &geom.points {
        let class = match p.kind {
            PointKind::Pre => "point-pre",
            PointKind::Post => "point-post",
        };
        let _ = writeln!(
            s,
            r#"<circle class="{class}" cx="{}" cy="{}" r="4"><title>{}</title></circle>"#,
            Num(frame.px(p.x)),
            Num(frame.py(p.y)),
            escape(&p.name)
        );
    }
    for p in geom.points.iter().filter(|p| p.labeled) {
        let _ = writeln!(
            s,
            r#"<text class="var-label" x="{}" y="{}">{}</text>"#,
            Num(frame.px(p.x) + 6.0),
            Num(frame.py(p.y) - 6.0),
            escape(&p.name)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "</svg>");
    s
}
