use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SampleTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    Identity,
    /// `ln(1 + x)`, defined here for `x >= 0` only.
    Log1p,
}

/// Per-column transforms, keyed by column name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TransformSpec(pub BTreeMap<String, Transform>);

impl TransformSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, col: impl Into<String>, transform: Transform) -> Self {
        self.0.insert(col.into(), transform);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn transform_column(values: &mut [f64], col: &str, transform: Transform) -> Result<()> {
    match transform {
        Transform::Identity => Ok(()),
        Transform::Log1p => {
            if let Some(i) = values.iter().position(|v| *v < 0.0) {
                return Err(Error::NegativeInputForLog { col: col.to_string(), row: i + 1 });
            }
            values.iter_mut().for_each(|v| *v = v.ln_1p());
            Ok(())
        }
    }
}

/// Applies each transform to its outcome or covariate column.
pub fn apply_transforms(mut table: SampleTable, spec: &TransformSpec) -> Result<SampleTable> {
    for (col, &transform) in &spec.0 {
        if *col == table.roles().outcome_col {
            transform_column(table.outcome_mut(), col, transform)?;
        } else if let Some(idx) = table.roles().covariate_index(col) {
            transform_column(table.covariate_mut(idx), col, transform)?;
        } else {
            return Err(Error::InvalidTransformTarget { col: col.clone() });
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::RoleSpec;

    fn sample(x: Vec<f64>) -> SampleTable {
        let roles = RoleSpec::new("t", "y", ["x"], None).unwrap();
        let n = x.len();
        SampleTable::from_columns(roles, vec![false; n], vec![2.0; n], vec![x], None).unwrap()
    }

    #[test]
    fn identity_leaves_table_unchanged() {
        let t = sample(vec![0.5, -3.0, 7.25]);
        let spec = TransformSpec::new().with("x", Transform::Identity).with("y", Transform::Identity);
        assert_eq!(apply_transforms(t.clone(), &spec).unwrap(), t);
        assert_eq!(apply_transforms(t.clone(), &TransformSpec::new()).unwrap(), t);
    }

    #[test]
    fn log1p_values() {
        let e_minus_one = std::f64::consts::E - 1.0;
        let t = apply_transforms(sample(vec![0.0, e_minus_one]), &TransformSpec::new().with("x", Transform::Log1p))
            .unwrap();
        let x = t.covariate("x").unwrap();
        assert_eq!(x[0], 0.0);
        // 50-digit evaluation of ln(1 + fl(e - 1)): 0.99999999999999994681..., which
        // rounds to 1.0.
        assert!((x[1] - 1.0).abs() <= f64::EPSILON, "{}", x[1]);
        assert_eq!(t.outcome(), &[2.0, 2.0]);
    }

    #[test]
    fn log1p_on_outcome() {
        let t = apply_transforms(sample(vec![1.0]), &TransformSpec::new().with("y", Transform::Log1p)).unwrap();
        assert!((t.outcome()[0] - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn log1p_rejects_negative_input() {
        let err =
            apply_transforms(sample(vec![1.0, -0.5]), &TransformSpec::new().with("x", Transform::Log1p)).unwrap_err();
        assert_eq!(err, Error::NegativeInputForLog { col: "x".into(), row: 2 });
    }

    #[test]
    fn treatment_and_unknown_columns_are_not_targets() {
        for col in ["t", "nope"] {
            let err =
                apply_transforms(sample(vec![1.0]), &TransformSpec::new().with(col, Transform::Log1p)).unwrap_err();
            assert_eq!(err, Error::InvalidTransformTarget { col: col.into() });
        }
    }

    #[test]
    fn spec_parses_from_json() {
        let spec: TransformSpec = serde_json::from_str(r#"{"re74":"log1p","age":"identity"}"#).unwrap();
        assert_eq!(spec.0["re74"], Transform::Log1p);
        assert_eq!(spec.0["age"], Transform::Identity);
        assert!(serde_json::from_str::<TransformSpec>(r#"{"x":"log"}"#).is_err());
    }
}
