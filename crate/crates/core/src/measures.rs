//! Per-covariate treatment imbalance, pilot outcome correlation and the
//! one-variable omitted-variable-bias score built from them.
//!
//! Both SMD flavors are scaled by the pilot-sample standard deviation:
//!
//! * cross-sample: `(mean_treated - mean_control) / sd_pilot`, arm means taken
//!   in the analysis sample. The scale comes from the pilot, hence the name.
//! * pure: `(mean_treated - mean_pilot) / sd_pilot`, contrasting the analysis
//!   treated arm with the pilot controls.
//!
//! Outcome correlations only ever read pilot rows, so analysis outcomes are
//! never used twice.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{RoleSpec, SampleTable, ValidatedStudy};

/// Default `bias_tol`.
pub const DEFAULT_BIAS_TOL: f64 = 0.01;

/// Allowed overshoot of |r| past 1 before clipping.
const CORRELATION_SLACK: f64 = 1e-12;

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator), two-pass.
pub fn sample_sd(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::TooFewValues { needed: 2, got: values.len() });
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    Ok((ss / (values.len() - 1) as f64).sqrt())
}

/// Pearson correlation, two-pass, clipped to [-1, 1].
///
/// Returns `None` when either input has zero spread.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    debug_assert_eq!(x.len(), y.len());
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    debug_assert!(r.abs() <= 1.0 + CORRELATION_SLACK, "correlation {r} out of range");
    Some(r.clamp(-1.0, 1.0))
}

/// Means of `values` over the treated and control rows, in that order.
fn arm_means(values: &[f64], treated: &[bool]) -> (f64, f64) {
    let (mut st, mut nt, mut sc, mut nc) = (0.0, 0usize, 0.0, 0usize);
    for (v, t) in values.iter().zip(treated) {
        if *t {
            st += v;
            nt += 1;
        } else {
            sc += v;
            nc += 1;
        }
    }
    (st / nt as f64, sc / nc as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum SmdFlavor {
    #[default]
    #[serde(rename = "cross-sample")]
    CrossSample,
    #[serde(rename = "pure")]
    Pure,
}

impl SmdFlavor {
    pub fn as_str(self) -> &'static str {
        match self {
            SmdFlavor::CrossSample => "cross-sample",
            SmdFlavor::Pure => "pure",
        }
    }
}

impl fmt::Display for SmdFlavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SmdFlavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cross-sample" | "cross" => Ok(SmdFlavor::CrossSample),
            "pure" => Ok(SmdFlavor::Pure),
            other => Err(Error::InvalidOption(format!("unknown SMD flavor `{other}`"))),
        }
    }
}

/// Everything computed for one covariate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateMeasure {
    pub name: String,
    pub pilot_mean: f64,
    pub pilot_sd: f64,
    pub analysis_treated_mean: f64,
    pub analysis_control_mean: f64,
    pub smd_pure: f64,
    pub smd_cross: f64,
    pub outcome_cor: f64,
    pub bias_pure: f64,
    pub bias_cross: f64,
}

impl CovariateMeasure {
    pub fn smd(&self, flavor: SmdFlavor) -> f64 {
        match flavor {
            SmdFlavor::CrossSample => self.smd_cross,
            SmdFlavor::Pure => self.smd_pure,
        }
    }

    pub fn bias(&self, flavor: SmdFlavor) -> f64 {
        match flavor {
            SmdFlavor::CrossSample => self.bias_cross,
            SmdFlavor::Pure => self.bias_pure,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointVipModel {
    measures: Vec<CovariateMeasure>,
    n_pilot: usize,
    n_treated: usize,
    n_control: usize,
    roles: RoleSpec,
}

impl JointVipModel {
    /// Measures in covariate order.
    pub fn measures(&self) -> &[CovariateMeasure] {
        &self.measures
    }

    pub fn measure(&self, name: &str) -> Option<&CovariateMeasure> {
        self.measures.iter().find(|m| m.name == name)
    }

    pub fn n_pilot(&self) -> usize {
        self.n_pilot
    }

    pub fn n_treated(&self) -> usize {
        self.n_treated
    }

    pub fn n_control(&self) -> usize {
        self.n_control
    }

    pub fn roles(&self) -> &RoleSpec {
        &self.roles
    }

    /// Largest |bias| under `flavor`, unrounded.
    pub fn max_abs_bias(&self, flavor: SmdFlavor) -> f64 {
        self.measures.iter().map(|m| m.bias(flavor).abs()).fold(0.0, f64::max)
    }
}

/// Options shared by summaries, tables and plots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub smd_flavor: SmdFlavor,
    pub use_abs: bool,
    pub bias_tol: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions { smd_flavor: SmdFlavor::CrossSample, use_abs: true, bias_tol: DEFAULT_BIAS_TOL }
    }
}

impl ReportOptions {
    pub fn new(smd_flavor: SmdFlavor, use_abs: bool, bias_tol: f64) -> Result<Self> {
        let opts = ReportOptions { smd_flavor, use_abs, bias_tol };
        opts.validate()?;
        Ok(opts)
    }

    pub fn validate(&self) -> Result<()> {
        check_tolerance("bias_tol", self.bias_tol)
    }
}

pub(crate) fn check_tolerance(what: &str, tol: f64) -> Result<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidOption(format!("{what} must be finite and positive, got {tol}")))
    }
}

fn covariate_values<'a>(table: &'a SampleTable, covariate: &str) -> Result<&'a [f64]> {
    table.covariate(covariate).ok_or_else(|| Error::UnknownCovariate(covariate.to_string()))
}

/// Signed SMD of one covariate under `flavor`.
pub fn smd(study: &ValidatedStudy, covariate: &str, flavor: SmdFlavor) -> Result<f64> {
    let pilot = covariate_values(study.pilot(), covariate)?;
    let analysis = covariate_values(study.analysis(), covariate)?;
    let sd = sample_sd(pilot)?;
    let (treated_mean, control_mean) = arm_means(analysis, study.analysis().treated());
    let reference = match flavor {
        SmdFlavor::CrossSample => control_mean,
        SmdFlavor::Pure => mean(pilot),
    };
    Ok((treated_mean - reference) / sd)
}

/// Pearson correlation between a covariate and the outcome over pilot rows.
pub fn outcome_correlation(pilot: &SampleTable, covariate: &str, outcome_col: &str) -> Result<f64> {
    let x = covariate_values(pilot, covariate)?;
    if outcome_col != pilot.roles().outcome_col {
        return Err(Error::UnknownCovariate(outcome_col.to_string()));
    }
    let y = pilot.outcome();
    if x.len() < 3 {
        return Err(Error::TooFewValues { needed: 3, got: x.len() });
    }
    for (col, values) in [(covariate, x), (outcome_col, y)] {
        if values.iter().all(|v| *v == values[0]) {
            return Err(Error::ZeroVariance { col: col.to_string() });
        }
    }
    pearson(x, y).ok_or_else(|| Error::ZeroVariance { col: covariate.to_string() })
}

/// One-variable omitted-variable bias: SMD times outcome correlation.
pub fn bias_score(smd_value: f64, cor_value: f64) -> f64 {
    smd_value * cor_value
}

fn measure_covariate(study: &ValidatedStudy, name: &str) -> Result<CovariateMeasure> {
    let pilot = covariate_values(study.pilot(), name)?;
    let analysis = covariate_values(study.analysis(), name)?;
    let pilot_mean = mean(pilot);
    let pilot_sd = sample_sd(pilot)?;
    if pilot_sd == 0.0 {
        return Err(Error::ZeroPilotVariance { covariate: name.to_string() });
    }
    let (analysis_treated_mean, analysis_control_mean) = arm_means(analysis, study.analysis().treated());
    let outcome_cor = outcome_correlation(study.pilot(), name, &study.roles().outcome_col)?;
    let smd_cross = (analysis_treated_mean - analysis_control_mean) / pilot_sd;
    let smd_pure = (analysis_treated_mean - pilot_mean) / pilot_sd;
    Ok(CovariateMeasure {
        name: name.to_string(),
        pilot_mean,
        pilot_sd,
        analysis_treated_mean,
        analysis_control_mean,
        smd_pure,
        smd_cross,
        outcome_cor,
        bias_pure: bias_score(smd_pure, outcome_cor),
        bias_cross: bias_score(smd_cross, outcome_cor),
    })
}

/// Computes every measure for every covariate, in covariate order.
pub fn create_jointvip(study: &ValidatedStudy) -> Result<JointVipModel> {
    let measures =
        study.roles().covariate_cols.iter().map(|name| measure_covariate(study, name)).collect::<Result<Vec<_>>>()?;
    Ok(JointVipModel {
        measures,
        n_pilot: study.pilot().len(),
        n_treated: study.analysis().n_treated(),
        n_control: study.analysis().n_control(),
        roles: study.roles().clone(),
    })
}

/// Rounds for display to three decimals, folding -0 into 0.
pub fn round3(x: f64) -> f64 {
    let r = (x * 1000.0).round() / 1000.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    /// Unrounded; [`round3`] it for display.
    pub max_abs_bias: f64,
    pub n_above_tol: usize,
    pub n_plottable: usize,
    pub bias_tol: f64,
}

impl SummaryReport {
    pub fn lines(&self) -> [String; 3] {
        [
            format!("Max absolute bias is {}", round3(self.max_abs_bias)),
            format!("{} variables are above the desired {} absolute bias tolerance", self.n_above_tol, self.bias_tol),
            format!("{} variables can be plotted", self.n_plottable),
        ]
    }
}

impl fmt::Display for SummaryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in self.lines() {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

pub fn summarize(model: &JointVipModel, opts: &ReportOptions) -> SummaryReport {
    let flavor = opts.smd_flavor;
    let n_above_tol = model.measures.iter().filter(|m| m.bias(flavor).abs() > opts.bias_tol).count();
    let n_plottable = model.measures.iter().filter(|m| m.smd(flavor).is_finite() && m.outcome_cor.is_finite()).count();
    SummaryReport { max_abs_bias: model.max_abs_bias(flavor), n_above_tol, n_plottable, bias_tol: opts.bias_tol }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub name: String,
    /// Signed unless `use_abs`; unrounded.
    pub bias: f64,
}

/// Covariate indices with |bias| above tolerance, largest |bias| first, ties by name.
pub(crate) fn ranked_above_tol(model: &JointVipModel, opts: &ReportOptions) -> Vec<usize> {
    let flavor = opts.smd_flavor;
    let mut picked: Vec<usize> =
        (0..model.measures.len()).filter(|&i| model.measures[i].bias(flavor).abs() > opts.bias_tol).collect();
    picked.sort_by(|&a, &b| {
        let (ma, mb) = (&model.measures[a], &model.measures[b]);
        mb.bias(flavor).abs().total_cmp(&ma.bias(flavor).abs()).then_with(|| ma.name.cmp(&mb.name))
    });
    picked
}

pub(crate) fn shown(value: f64, use_abs: bool) -> f64 {
    if use_abs {
        value.abs()
    } else {
        value
    }
}

pub fn tabulate(model: &JointVipModel, opts: &ReportOptions) -> Vec<TableRow> {
    ranked_above_tol(model, opts)
        .into_iter()
        .map(|i| {
            let m = &model.measures[i];
            TableRow { name: m.name.clone(), bias: shown(m.bias(opts.smd_flavor), opts.use_abs) }
        })
        .collect()
}

/// Lays out a small named table the way R prints a data frame: row names
/// left-aligned, value columns right-aligned under their headers.
pub(crate) fn format_frame(headers: &[&str], rows: &[(String, Vec<f64>)]) -> String {
    let name_width = rows.iter().map(|(n, _)| n.chars().count()).max().unwrap_or(0);
    let cells: Vec<Vec<String>> =
        rows.iter().map(|(_, vals)| vals.iter().map(|v| format!("{:.3}", round3(*v))).collect()).collect();
    let widths: Vec<usize> = headers
        .iter()
        .enumerate()
        .map(|(j, h)| cells.iter().map(|c| c[j].len()).chain([h.len()]).max().unwrap_or(0))
        .collect();
    let mut out = " ".repeat(name_width);
    for (h, w) in headers.iter().zip(&widths) {
        out.push_str(&format!(" {h:>w$}"));
    }
    out.push('\n');
    if rows.is_empty() {
        out.push_str("<0 rows>\n");
    }
    for ((name, _), row) in rows.iter().zip(&cells) {
        out.push_str(&format!("{name:<name_width$}"));
        for (c, w) in row.iter().zip(&widths) {
            out.push_str(&format!(" {c:>w$}"));
        }
        out.push('\n');
    }
    out
}

/// Prints a `tabulate` result with biases rounded to three decimals.
pub fn format_table(rows: &[TableRow]) -> String {
    let rows: Vec<(String, Vec<f64>)> = rows.iter().map(|r| (r.name.clone(), vec![r.bias])).collect();
    format_frame(&["bias"], &rows)
}
