//! Wire format for models.
//!
//! Reals are written with 17 significant digits in exponent form
//! (`1.1320307685556921e-1`), which round-trips every `f64` and keeps the
//! bytes independent of the serializer's float formatting.

use serde::ser::Error as _;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::measures::{CovariateMeasure, JointVipModel, SmdFlavor};
use crate::post::{PostJointVipModel, PostMeasure};

/// Formats a real with 17 significant digits.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Copy)]
struct Real(f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(S::Error::custom("non-finite real"));
        }
        RawValue::from_string(format_real(self.0)).map_err(S::Error::custom)?.serialize(serializer)
    }
}

#[derive(Serialize)]
struct MeasureOut<'a> {
    name: &'a str,
    pilot_mean: Real,
    pilot_sd: Real,
    analysis_treated_mean: Real,
    analysis_control_mean: Real,
    smd_pure: Real,
    smd_cross: Real,
    outcome_cor: Real,
    bias_pure: Real,
    bias_cross: Real,
    smd: Real,
    bias: Real,
}

impl<'a> MeasureOut<'a> {
    fn new(m: &'a CovariateMeasure, flavor: SmdFlavor) -> Self {
        MeasureOut {
            name: &m.name,
            pilot_mean: Real(m.pilot_mean),
            pilot_sd: Real(m.pilot_sd),
            analysis_treated_mean: Real(m.analysis_treated_mean),
            analysis_control_mean: Real(m.analysis_control_mean),
            smd_pure: Real(m.smd_pure),
            smd_cross: Real(m.smd_cross),
            outcome_cor: Real(m.outcome_cor),
            bias_pure: Real(m.bias_pure),
            bias_cross: Real(m.bias_cross),
            smd: Real(m.smd(flavor)),
            bias: Real(m.bias(flavor)),
        }
    }
}

#[derive(Serialize)]
struct PostMeasureOut<'a> {
    name: &'a str,
    post_treated_mean: Real,
    post_control_mean: Real,
    post_smd_pure: Real,
    post_smd_cross: Real,
    post_bias_pure: Real,
    post_bias_cross: Real,
    post_smd: Real,
    post_bias: Real,
}

impl<'a> PostMeasureOut<'a> {
    fn new(m: &'a PostMeasure, flavor: SmdFlavor) -> Self {
        PostMeasureOut {
            name: &m.name,
            post_treated_mean: Real(m.post_treated_mean),
            post_control_mean: Real(m.post_control_mean),
            post_smd_pure: Real(m.post_smd_pure),
            post_smd_cross: Real(m.post_smd_cross),
            post_bias_pure: Real(m.post_bias_pure),
            post_bias_cross: Real(m.post_bias_cross),
            post_smd: Real(m.smd(flavor)),
            post_bias: Real(m.bias(flavor)),
        }
    }
}

#[derive(Serialize)]
struct ModelOut<'a> {
    covariates: Vec<MeasureOut<'a>>,
    n_pilot: usize,
    n_treated: usize,
    n_control: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    post_covariates: Option<Vec<PostMeasureOut<'a>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_post_treated: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_post_control: Option<usize>,
}

impl<'a> ModelOut<'a> {
    fn base(model: &'a JointVipModel, flavor: SmdFlavor) -> Self {
        ModelOut {
            covariates: model.measures().iter().map(|m| MeasureOut::new(m, flavor)).collect(),
            n_pilot: model.n_pilot(),
            n_treated: model.n_treated(),
            n_control: model.n_control(),
            post_covariates: None,
            n_post_treated: None,
            n_post_control: None,
        }
    }
}

fn to_compact<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("model values are finite")
}

/// Compact model JSON. `smd`/`bias` on each covariate repeat the `flavor` fields.
pub fn model_json(model: &JointVipModel, flavor: SmdFlavor) -> String {
    to_compact(&ModelOut::base(model, flavor))
}

/// Model JSON extended with a parallel `post_covariates` array.
pub fn post_model_json(model: &PostJointVipModel, flavor: SmdFlavor) -> String {
    let mut out = ModelOut::base(model.base(), flavor);
    out.post_covariates = Some(model.post_measures().iter().map(|m| PostMeasureOut::new(m, flavor)).collect());
    out.n_post_treated = Some(model.n_post_treated());
    out.n_post_control = Some(model.n_post_control());
    to_compact(&out)
}

/// Reader side of [`model_json`] / [`post_model_json`].
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ModelDocument {
    pub covariates: Vec<MeasureDocument>,
    pub n_pilot: usize,
    pub n_treated: usize,
    pub n_control: usize,
    #[serde(default)]
    pub post_covariates: Option<Vec<PostMeasureDocument>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct MeasureDocument {
    #[serde(flatten)]
    pub measure: CovariateMeasure,
    pub smd: f64,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PostMeasureDocument {
    #[serde(flatten)]
    pub measure: PostMeasure,
    pub post_smd: f64,
    pub post_bias: f64,
}
