//! Loading pilot and analysis samples.
//!
//! A [`SampleTable`] is a column-major copy of the CSV columns named by a
//! [`RoleSpec`]; unreferenced columns are dropped on parse. [`validate_study`]
//! checks the study-level contract (controls-only pilot, both arms present in
//! the analysis sample, no constant covariate in the pilot) and yields the
//! [`ValidatedStudy`] every measure is computed from.

mod manifest;
mod transform;

pub use manifest::StudyManifest;
pub use transform::{apply_transforms, Transform, TransformSpec};

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Names of the columns playing each role in a study.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleSpec {
    pub treatment_col: String,
    pub outcome_col: String,
    pub covariate_cols: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_col: Option<String>,
}

impl RoleSpec {
    pub fn new<S: Into<String>>(
        treatment_col: impl Into<String>,
        outcome_col: impl Into<String>,
        covariate_cols: impl IntoIterator<Item = S>,
        weight_col: Option<String>,
    ) -> Result<Self> {
        let roles = RoleSpec {
            treatment_col: treatment_col.into(),
            outcome_col: outcome_col.into(),
            covariate_cols: covariate_cols.into_iter().map(Into::into).collect(),
            weight_col,
        };
        roles.validate()?;
        Ok(roles)
    }

    pub fn validate(&self) -> Result<()> {
        if self.covariate_cols.is_empty() {
            return Err(Error::InvalidRoles("no covariates named".into()));
        }
        let mut seen = HashSet::new();
        for name in self.all_columns() {
            if name.is_empty() {
                return Err(Error::InvalidRoles("empty column name".into()));
            }
            if !seen.insert(name) {
                return Err(Error::InvalidRoles(format!("column `{name}` bound to more than one role")));
            }
        }
        Ok(())
    }

    /// All bound column names in role order: treatment, outcome, covariates, weight.
    pub fn all_columns(&self) -> impl Iterator<Item = &str> {
        [self.treatment_col.as_str(), self.outcome_col.as_str()]
            .into_iter()
            .chain(self.covariate_cols.iter().map(String::as_str))
            .chain(self.weight_col.as_deref())
    }

    pub fn without_weight(&self) -> RoleSpec {
        RoleSpec { weight_col: None, ..self.clone() }
    }

    pub fn covariate_index(&self, name: &str) -> Option<usize> {
        self.covariate_cols.iter().position(|c| c == name)
    }

    /// Same treatment, outcome and covariates; the weight binding is ignored.
    pub fn same_binding(&self, other: &RoleSpec) -> bool {
        self.treatment_col == other.treatment_col
            && self.outcome_col == other.outcome_col
            && self.covariate_cols == other.covariate_cols
    }
}

/// Unit-level data bound to a [`RoleSpec`], stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTable {
    roles: RoleSpec,
    treated: Vec<bool>,
    outcome: Vec<f64>,
    covariates: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl SampleTable {
    /// Builds a table from columns, enforcing the table invariants.
    ///
    /// `covariates` must follow `roles.covariate_cols` order. Missing weights
    /// default to 1.
    pub fn from_columns(
        roles: RoleSpec,
        treated: Vec<bool>,
        outcome: Vec<f64>,
        covariates: Vec<Vec<f64>>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        roles.validate()?;
        let n = treated.len();
        if covariates.len() != roles.covariate_cols.len() {
            return Err(Error::InvalidRoles(format!(
                "{} covariate columns supplied for {} named covariates",
                covariates.len(),
                roles.covariate_cols.len()
            )));
        }
        let weights = weights.unwrap_or_else(|| vec![1.0; n]);
        let ragged = outcome.len() != n || weights.len() != n || covariates.iter().any(|c| c.len() != n);
        if ragged {
            return Err(Error::MalformedCsv("columns differ in length".into()));
        }
        let check = |col: &str, values: &[f64]| -> Result<()> {
            match values.iter().position(|v| !v.is_finite()) {
                Some(i) => Err(Error::NonNumericCell { row: i + 1, col: col.to_string() }),
                None => Ok(()),
            }
        };
        check(&roles.outcome_col, &outcome)?;
        for (name, col) in roles.covariate_cols.iter().zip(&covariates) {
            check(name, col)?;
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::NonPositiveWeight { row: i + 1 });
        }
        Ok(SampleTable { roles, treated, outcome, covariates, weights })
    }

    pub fn roles(&self) -> &RoleSpec {
        &self.roles
    }

    pub fn len(&self) -> usize {
        self.treated.len()
    }

    pub fn is_empty(&self) -> bool {
        self.treated.is_empty()
    }

    pub fn treated(&self) -> &[bool] {
        &self.treated
    }

    pub fn n_treated(&self) -> usize {
        self.treated.iter().filter(|t| **t).count()
    }

    pub fn n_control(&self) -> usize {
        self.len() - self.n_treated()
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn covariate(&self, name: &str) -> Option<&[f64]> {
        self.roles.covariate_index(name).map(|i| self.covariates[i].as_slice())
    }

    /// Covariate columns in role order.
    pub fn covariates(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.roles.covariate_cols.iter().map(String::as_str).zip(self.covariates.iter().map(Vec::as_slice))
    }

    pub(crate) fn outcome_mut(&mut self) -> &mut [f64] {
        &mut self.outcome
    }

    pub(crate) fn covariate_mut(&mut self, index: usize) -> &mut [f64] {
        &mut self.covariates[index]
    }

    /// Writes the bound columns back out as CSV in role order.
    ///
    /// Reals use the shortest representation that parses back to the same
    /// value, so `parse_table(&t.to_csv(), t.roles())` reproduces `t`.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let header: Vec<&str> = self.roles.all_columns().collect();
        writer.write_record(&header).expect("write to Vec");
        let mut record = Vec::with_capacity(header.len());
        for i in 0..self.len() {
            record.clear();
            record.push(if self.treated[i] { "1".to_string() } else { "0".to_string() });
            record.push(self.outcome[i].to_string());
            record.extend(self.covariates.iter().map(|c| c[i].to_string()));
            if self.roles.weight_col.is_some() {
                record.push(self.weights[i].to_string());
            }
            writer.write_record(&record).expect("write to Vec");
        }
        String::from_utf8(writer.into_inner().expect("flush to Vec")).expect("CSV output is UTF-8")
    }
}

fn parse_number(cell: &str, row: usize, col: &str) -> Result<f64> {
    if cell.is_empty() || cell == "NA" {
        return Err(Error::MissingValue { row, col: col.to_string() });
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::NonNumericCell { row, col: col.to_string() }),
    }
}

/// Parses CSV text (comma separated, header row, `.` decimal point) and binds
/// the columns named in `roles`. Columns not named in `roles` are ignored and
/// row order is preserved.
pub fn parse_table(csv_text: &str, roles: &RoleSpec) -> Result<SampleTable> {
    roles.validate()?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(csv_text.as_bytes());
    let header = reader.headers().map_err(|e| Error::MalformedCsv(e.to_string()))?.clone();
    let locate = |name: &str| -> Result<usize> {
        header.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn { name: name.to_string() })
    };
    let treat_idx = locate(&roles.treatment_col)?;
    let outcome_idx = locate(&roles.outcome_col)?;
    let cov_idx = roles.covariate_cols.iter().map(|c| locate(c)).collect::<Result<Vec<_>>>()?;
    let weight_idx = roles.weight_col.as_deref().map(locate).transpose()?;

    let mut treated = Vec::new();
    let mut outcome = Vec::new();
    let mut covariates = vec![Vec::new(); cov_idx.len()];
    let mut weights = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::MalformedCsv(e.to_string()))?;
        let row = i + 1;
        let t = parse_number(&record[treat_idx], row, &roles.treatment_col)?;
        if t == 0.0 {
            treated.push(false);
        } else if t == 1.0 {
            treated.push(true);
        } else {
            return Err(Error::NonBinaryTreatment { row });
        }
        outcome.push(parse_number(&record[outcome_idx], row, &roles.outcome_col)?);
        for ((col, &idx), name) in covariates.iter_mut().zip(&cov_idx).zip(&roles.covariate_cols) {
            col.push(parse_number(&record[idx], row, name)?);
        }
        if let (Some(idx), Some(name)) = (weight_idx, roles.weight_col.as_deref()) {
            let w = parse_number(&record[idx], row, name)?;
            if w <= 0.0 {
                return Err(Error::NonPositiveWeight { row });
            }
            weights.push(w);
        }
    }
    let weights = weight_idx.map(|_| weights);
    SampleTable::from_columns(roles.clone(), treated, outcome, covariates, weights)
}

/// A pilot/analysis pair that satisfies the study contract.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedStudy {
    pilot: SampleTable,
    analysis: SampleTable,
    roles: RoleSpec,
}

impl ValidatedStudy {
    pub fn pilot(&self) -> &SampleTable {
        &self.pilot
    }

    pub fn analysis(&self) -> &SampleTable {
        &self.analysis
    }

    pub fn roles(&self) -> &RoleSpec {
        &self.roles
    }
}

/// Checks the study contract and pairs the two samples.
pub fn validate_study(pilot: SampleTable, analysis: SampleTable, roles: &RoleSpec) -> Result<ValidatedStudy> {
    roles.validate()?;
    if !pilot.roles.same_binding(roles) || !analysis.roles.same_binding(roles) {
        return Err(Error::RoleMismatch);
    }
    let treated_in_pilot = pilot.n_treated();
    if treated_in_pilot > 0 {
        return Err(Error::TreatedInPilot { count: treated_in_pilot });
    }
    if analysis.n_treated() == 0 {
        return Err(Error::NoTreatedInAnalysis);
    }
    if analysis.n_control() == 0 {
        return Err(Error::NoControlInAnalysis);
    }
    if pilot.len() < 2 {
        return Err(Error::TooFewValues { needed: 2, got: pilot.len() });
    }
    for (name, values) in pilot.covariates() {
        if values.iter().all(|v| *v == values[0]) {
            return Err(Error::ZeroPilotVariance { covariate: name.to_string() });
        }
    }
    Ok(ValidatedStudy { pilot, analysis, roles: roles.clone() })
}

/// Parses, transforms and validates a pilot/analysis pair in one step.
///
/// Any weight column named in `roles` is not bound here; weights only matter
/// for post-adjustment samples.
pub fn load_study(
    pilot_csv: &str,
    analysis_csv: &str,
    roles: &RoleSpec,
    transforms: &TransformSpec,
) -> Result<ValidatedStudy> {
    let binding = roles.without_weight();
    let pilot = apply_transforms(parse_table(pilot_csv, &binding)?, transforms)?;
    let analysis = apply_transforms(parse_table(analysis_csv, &binding)?, transforms)?;
    validate_study(pilot, analysis, &binding)
}

/// Parses a post-adjustment sample against the base study's roles.
///
/// A covariate column absent from the CSV is reported as
/// [`Error::CovariateMissingInPost`]; the weight column, when named, is bound.
pub fn load_post_table(post_csv: &str, roles: &RoleSpec, transforms: &TransformSpec) -> Result<SampleTable> {
    let table = parse_table(post_csv, roles).map_err(|e| match e {
        Error::MissingColumn { name } if roles.covariate_cols.contains(&name) => Error::CovariateMissingInPost(name),
        other => other,
    })?;
    apply_transforms(table, transforms)
}
