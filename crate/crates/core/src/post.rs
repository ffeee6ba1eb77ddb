//! Balance after matching or weighting.
//!
//! Only the arm means are recomputed from the post-adjustment sample. The
//! pilot SD, pilot mean and outcome correlation are carried over from the base
//! model unchanged, so pre and post coordinates share one scale and the
//! y-axis never moves. Nothing here reads pilot rows.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::SampleTable;
use crate::measures::{
    bias_score, check_tolerance, format_frame, ranked_above_tol, round3, shown, summarize, JointVipModel,
    ReportOptions, SmdFlavor, SummaryReport,
};

pub const DEFAULT_POST_BIAS_TOL: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostMeasure {
    pub name: String,
    pub post_treated_mean: f64,
    pub post_control_mean: f64,
    pub post_smd_pure: f64,
    pub post_smd_cross: f64,
    pub post_bias_pure: f64,
    pub post_bias_cross: f64,
}

impl PostMeasure {
    pub fn smd(&self, flavor: SmdFlavor) -> f64 {
        match flavor {
            SmdFlavor::CrossSample => self.post_smd_cross,
            SmdFlavor::Pure => self.post_smd_pure,
        }
    }

    pub fn bias(&self, flavor: SmdFlavor) -> f64 {
        match flavor {
            SmdFlavor::CrossSample => self.post_bias_cross,
            SmdFlavor::Pure => self.post_bias_pure,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostJointVipModel {
    base: JointVipModel,
    post_measures: Vec<PostMeasure>,
    n_post_treated: usize,
    n_post_control: usize,
}

impl PostJointVipModel {
    pub fn base(&self) -> &JointVipModel {
        &self.base
    }

    /// Post measures, aligned index-for-index with `base().measures()`.
    pub fn post_measures(&self) -> &[PostMeasure] {
        &self.post_measures
    }

    pub fn n_post_treated(&self) -> usize {
        self.n_post_treated
    }

    pub fn n_post_control(&self) -> usize {
        self.n_post_control
    }

    pub fn max_abs_post_bias(&self, flavor: SmdFlavor) -> f64 {
        self.post_measures.iter().map(|m| m.bias(flavor).abs()).fold(0.0, f64::max)
    }
}

/// Weighted means over the treated and control rows.
fn weighted_arm_means(values: &[f64], treated: &[bool], weights: &[f64]) -> (f64, f64) {
    let (mut st, mut wt, mut sc, mut wc) = (0.0, 0.0, 0.0, 0.0);
    for ((v, t), w) in values.iter().zip(treated).zip(weights) {
        if *t {
            st += w * v;
            wt += w;
        } else {
            sc += w * v;
            wc += w;
        }
    }
    (st / wt, sc / wc)
}

/// Recomputes SMD and bias on a matched or weighted analysis sample.
pub fn create_post_jointvip(base: &JointVipModel, post_analysis: &SampleTable) -> Result<PostJointVipModel> {
    let n_post_treated = post_analysis.n_treated();
    if n_post_treated == 0 {
        return Err(Error::NoTreatedInAnalysis);
    }
    let n_post_control = post_analysis.n_control();
    if n_post_control == 0 {
        return Err(Error::NoControlInAnalysis);
    }
    let post_measures = base
        .measures()
        .iter()
        .map(|m| {
            let values =
                post_analysis.covariate(&m.name).ok_or_else(|| Error::CovariateMissingInPost(m.name.clone()))?;
            let (post_treated_mean, post_control_mean) =
                weighted_arm_means(values, post_analysis.treated(), post_analysis.weights());
            let post_smd_cross = (post_treated_mean - post_control_mean) / m.pilot_sd;
            let post_smd_pure = (post_treated_mean - m.pilot_mean) / m.pilot_sd;
            Ok(PostMeasure {
                name: m.name.clone(),
                post_treated_mean,
                post_control_mean,
                post_smd_pure,
                post_smd_cross,
                post_bias_pure: bias_score(post_smd_pure, m.outcome_cor),
                post_bias_cross: bias_score(post_smd_cross, m.outcome_cor),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PostJointVipModel { base: base.clone(), post_measures, n_post_treated, n_post_control })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostReport {
    pub base: SummaryReport,
    pub max_abs_post_bias: f64,
    pub n_post_above_tol: usize,
    pub post_bias_tol: f64,
}

impl PostReport {
    pub fn post_lines(&self) -> [String; 2] {
        [
            format!("Max absolute post-bias is {}", round3(self.max_abs_post_bias)),
            format!(
                "Post-measure has {} variable(s) above the desired {} absolute bias tolerance",
                self.n_post_above_tol, self.post_bias_tol
            ),
        ]
    }
}

impl fmt::Display for PostReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.base)?;
        writeln!(f)?;
        for line in self.post_lines() {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

pub fn post_summarize(model: &PostJointVipModel, opts: &ReportOptions, post_bias_tol: f64) -> Result<PostReport> {
    check_tolerance("post_bias_tol", post_bias_tol)?;
    let flavor = opts.smd_flavor;
    Ok(PostReport {
        base: summarize(&model.base, opts),
        max_abs_post_bias: model.max_abs_post_bias(flavor),
        n_post_above_tol: model.post_measures.iter().filter(|m| m.bias(flavor).abs() > post_bias_tol).count(),
        post_bias_tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostTableRow {
    pub name: String,
    pub bias: f64,
    pub post_bias: f64,
}

/// Rows picked and ordered by the base bias, with the post bias alongside.
pub fn post_tabulate(model: &PostJointVipModel, opts: &ReportOptions) -> Vec<PostTableRow> {
    let flavor = opts.smd_flavor;
    ranked_above_tol(&model.base, opts)
        .into_iter()
        .map(|i| {
            let (pre, post) = (&model.base.measures()[i], &model.post_measures[i]);
            PostTableRow {
                name: pre.name.clone(),
                bias: shown(pre.bias(flavor), opts.use_abs),
                post_bias: shown(post.bias(flavor), opts.use_abs),
            }
        })
        .collect()
}

pub fn format_post_table(rows: &[PostTableRow]) -> String {
    let rows: Vec<(String, Vec<f64>)> = rows.iter().map(|r| (r.name.clone(), vec![r.bias, r.post_bias])).collect();
    format_frame(&["bias", "post_bias"], &rows)
}
