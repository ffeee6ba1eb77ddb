//! Test support shared by the integration suites: a random study generator
//! and a brute-force reference for every measure.
//!
//! The reference never calls into the library. Means use compensated
//! summation; variances and covariances use the pairwise-difference identity
//! `var = sum_{i<j} (x_i - x_j)^2 / (n (n - 1))`, which shares no arithmetic
//! path with the two-pass implementation.

#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::Rng;

/// Raw columns of a generated study, before any parsing.
#[derive(Debug, Clone)]
pub struct RawStudy {
    pub covariates: Vec<String>,
    pub pilot_x: Vec<Vec<f64>>,
    pub pilot_y: Vec<f64>,
    pub analysis_x: Vec<Vec<f64>>,
    pub analysis_y: Vec<f64>,
    pub analysis_t: Vec<bool>,
}

fn column_csv(header: &[String], cols: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..cols[0].len() {
        let row: Vec<String> = cols.iter().map(|c| c[i].to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

impl RawStudy {
    fn header(&self) -> Vec<String> {
        let mut h = vec!["treat".to_string(), "y".to_string()];
        h.extend(self.covariates.iter().cloned());
        h
    }

    pub fn pilot_csv(&self) -> String {
        let mut cols = vec![vec![0.0; self.pilot_y.len()], self.pilot_y.clone()];
        cols.extend(self.pilot_x.iter().cloned());
        column_csv(&self.header(), &cols)
    }

    pub fn analysis_csv(&self) -> String {
        let t = self.analysis_t.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        let mut cols = vec![t, self.analysis_y.clone()];
        cols.extend(self.analysis_x.iter().cloned());
        column_csv(&self.header(), &cols)
    }

    pub fn manifest_json(&self, pilot: &str, analysis: &str) -> String {
        serde_json::json!({
            "pilot_csv": pilot,
            "analysis_csv": analysis,
            "treatment": "treat",
            "outcome": "y",
            "covariates": self.covariates,
        })
        .to_string()
    }
}

fn continuous(rng: &mut StdRng, center: f64, spread: f64) -> f64 {
    // sum of uniforms, rounded to 3 decimals like recorded data
    let z: f64 = (0..4).map(|_| rng.random::<f64>() - 0.5).sum();
    ((center + spread * z) * 1000.0).round() / 1000.0
}

fn nonconstant(v: &[f64]) -> bool {
    v.iter().any(|x| *x != v[0])
}

/// A random valid study: up to `n_max` units per sample, up to `p_max`
/// covariates, a mix of 0/1 and continuous covariates, and a binary or
/// continuous outcome.
pub fn random_study(rng: &mut StdRng, n_max: usize, p_max: usize) -> RawStudy {
    loop {
        let p = rng.random_range(1..=p_max);
        let n_pilot = rng.random_range(3..=n_max);
        let n_analysis = rng.random_range(2..=n_max);
        let binary_outcome = rng.random_bool(0.3);
        let kinds: Vec<(bool, f64, f64)> = (0..p)
            .map(|_| (rng.random_bool(0.4), rng.random_range(-50.0..50.0), rng.random_range(0.1..20.0)))
            .collect();
        let shift: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let draw_x = |rng: &mut StdRng, n: usize, treated: &dyn Fn(usize) -> bool| -> Vec<Vec<f64>> {
            kinds
                .iter()
                .zip(&shift)
                .map(|(&(binary, center, spread), &s)| {
                    (0..n)
                        .map(|i| {
                            let lift = if treated(i) { s } else { 0.0 };
                            if binary {
                                if rng.random_bool((0.4 + 0.3 * lift).clamp(0.05, 0.95)) {
                                    1.0
                                } else {
                                    0.0
                                }
                            } else {
                                continuous(rng, center + lift * spread, spread)
                            }
                        })
                        .collect()
                })
                .collect()
        };
        let outcome = |rng: &mut StdRng, x: &[Vec<f64>], i: usize| -> f64 {
            let signal: f64 = x.iter().enumerate().map(|(j, col)| col[i] * (j as f64 - 1.5) * 0.1).sum();
            let noisy = signal + continuous(rng, 0.0, 2.0);
            if binary_outcome {
                if noisy > 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                noisy
            }
        };
        let pilot_x = draw_x(rng, n_pilot, &|_| false);
        let pilot_y: Vec<f64> = (0..n_pilot).map(|i| outcome(rng, &pilot_x, i)).collect();
        let mut analysis_t: Vec<bool> = (0..n_analysis).map(|_| rng.random_bool(0.5)).collect();
        analysis_t[0] = true;
        analysis_t[1] = false;
        let t = analysis_t.clone();
        let analysis_x = draw_x(rng, n_analysis, &|i| t[i]);
        let analysis_y: Vec<f64> = (0..n_analysis).map(|i| outcome(rng, &analysis_x, i)).collect();
        if !nonconstant(&pilot_y) || !pilot_x.iter().all(|c| nonconstant(c)) {
            continue;
        }
        return RawStudy {
            covariates: (0..p).map(|j| format!("x{j}")).collect(),
            pilot_x,
            pilot_y,
            analysis_x,
            analysis_y,
            analysis_t,
        };
    }
}

fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

pub fn ref_mean(values: &[f64]) -> f64 {
    compensated_sum(values.iter().copied()) / values.len() as f64
}

fn pairwise_moment(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let terms = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (x[i] - x[j]) * (y[i] - y[j])));
    compensated_sum(terms) / (n * (n - 1)) as f64
}

pub fn ref_sd(values: &[f64]) -> f64 {
    pairwise_moment(values, values).sqrt()
}

pub fn ref_pearson(x: &[f64], y: &[f64]) -> f64 {
    pairwise_moment(x, y) / (pairwise_moment(x, x) * pairwise_moment(y, y)).sqrt()
}

/// Reference values for one covariate, plus the scales used to judge them.
#[derive(Debug, Clone)]
pub struct RefMeasure {
    pub name: String,
    pub pilot_mean: f64,
    pub pilot_sd: f64,
    pub treated_mean: f64,
    pub control_mean: f64,
    pub smd_cross: f64,
    pub smd_pure: f64,
    pub cor: f64,
    pub bias_cross: f64,
    pub bias_pure: f64,
    /// Mean absolute values: the scale a mean's rounding error is relative to.
    pub pilot_abs: f64,
    pub treated_abs: f64,
    pub control_abs: f64,
    pub scale_cross: f64,
    pub scale_pure: f64,
}

pub fn reference_measures(study: &RawStudy) -> Vec<RefMeasure> {
    study
        .covariates
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let px = &study.pilot_x[j];
            let ax = &study.analysis_x[j];
            let treated: Vec<f64> = ax.iter().zip(&study.analysis_t).filter(|(_, t)| **t).map(|(v, _)| *v).collect();
            let control: Vec<f64> = ax.iter().zip(&study.analysis_t).filter(|(_, t)| !**t).map(|(v, _)| *v).collect();
            let pilot_mean = ref_mean(px);
            let pilot_sd = ref_sd(px);
            let treated_mean = ref_mean(&treated);
            let control_mean = ref_mean(&control);
            let cor = ref_pearson(px, &study.pilot_y);
            let abs_mean = |v: &[f64]| ref_mean(&v.iter().map(|x| x.abs()).collect::<Vec<_>>());
            let (pilot_abs, treated_abs, control_abs) = (abs_mean(px), abs_mean(&treated), abs_mean(&control));
            let smd_cross = (treated_mean - control_mean) / pilot_sd;
            let smd_pure = (treated_mean - pilot_mean) / pilot_sd;
            RefMeasure {
                name: name.clone(),
                pilot_mean,
                pilot_sd,
                treated_mean,
                control_mean,
                smd_cross,
                smd_pure,
                cor,
                bias_cross: smd_cross * cor,
                bias_pure: smd_pure * cor,
                pilot_abs,
                treated_abs,
                control_abs,
                scale_cross: (treated_abs + control_abs) / pilot_sd,
                scale_pure: (treated_abs + pilot_abs) / pilot_sd,
            }
        })
        .collect()
}

/// `|actual - expected| <= tol * max(|expected|, scale)`.
pub fn close(actual: f64, expected: f64, scale: f64, tol: f64) -> bool {
    (actual - expected).abs() <= tol * expected.abs().max(scale)
}

/// Compares one library measure against its reference; returns the first mismatch.
pub fn check_measure(m: &jointvip::CovariateMeasure, r: &RefMeasure, tol: f64) -> Result<(), String> {
    let checks = [
        ("pilot_mean", m.pilot_mean, r.pilot_mean, r.pilot_abs),
        ("pilot_sd", m.pilot_sd, r.pilot_sd, r.pilot_sd),
        ("analysis_treated_mean", m.analysis_treated_mean, r.treated_mean, r.treated_abs),
        ("analysis_control_mean", m.analysis_control_mean, r.control_mean, r.control_abs),
        ("smd_cross", m.smd_cross, r.smd_cross, r.scale_cross),
        ("smd_pure", m.smd_pure, r.smd_pure, r.scale_pure),
        ("outcome_cor", m.outcome_cor, r.cor, 1.0),
        ("bias_cross", m.bias_cross, r.bias_cross, r.scale_cross + r.smd_cross.abs()),
        ("bias_pure", m.bias_pure, r.bias_pure, r.scale_pure + r.smd_pure.abs()),
    ];
    for (field, actual, expected, scale) in checks {
        if !close(actual, expected, scale, tol) {
            return Err(format!("{}.{field}: got {actual:e}, reference {expected:e}", r.name));
        }
    }
    if m.name != r.name {
        return Err(format!("name {} vs {}", m.name, r.name));
    }
    Ok(())
}
