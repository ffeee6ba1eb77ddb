use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{RoleSpec, TransformSpec};
use crate::error::{Error, Result};

/// JSON study manifest: where the samples live and which columns play which role.
///
/// ```json
/// {
///   "pilot_csv": "pilot.csv",
///   "analysis_csv": "analysis.csv",
///   "post_analysis_csv": "matched.csv",
///   "treatment": "treat",
///   "outcome": "log_re78",
///   "covariates": ["age", "educ"],
///   "weight": "w",
///   "transforms": {"educ": "identity"}
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyManifest {
    pub pilot_csv: PathBuf,
    pub analysis_csv: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_analysis_csv: Option<PathBuf>,
    pub treatment: String,
    pub outcome: String,
    pub covariates: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<String>,
    #[serde(default)]
    pub transforms: TransformSpec,
}

impl StudyManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        let manifest: StudyManifest = serde_json::from_str(text).map_err(|e| Error::InvalidManifest(e.to_string()))?;
        manifest.roles()?;
        Ok(manifest)
    }

    pub fn roles(&self) -> Result<RoleSpec> {
        RoleSpec::new(
            self.treatment.clone(),
            self.outcome.clone(),
            self.covariates.iter().cloned(),
            self.weight.clone(),
        )
    }

    /// Rewrites relative CSV paths against `base_dir` (normally the manifest's directory).
    pub fn resolve_paths(mut self, base_dir: &Path) -> Self {
        let resolve = |p: PathBuf| if p.is_relative() { base_dir.join(p) } else { p };
        self.pilot_csv = resolve(self.pilot_csv);
        self.analysis_csv = resolve(self.analysis_csv);
        self.post_analysis_csv = self.post_analysis_csv.map(resolve);
        self
    }
}
