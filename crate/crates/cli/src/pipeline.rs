//! Loading a study from a manifest and the option set shared by the CLI and the service.

use std::path::Path;

use jointvip::json::{model_json, post_model_json};
use jointvip::{
    create_jointvip, create_post_jointvip, load_post_table, load_study, JointVipModel, PostJointVipModel,
    ReportOptions, RoleSpec, SmdFlavor, StudyManifest, TransformSpec, ValidatedStudy, DEFAULT_POST_BIAS_TOL,
};

use crate::error::CliError;

/// A study with its fitted model and, when adjusted data was supplied, the post model.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub roles: RoleSpec,
    pub transforms: TransformSpec,
    pub study: ValidatedStudy,
    pub model: JointVipModel,
    pub post: Option<PostJointVipModel>,
}

impl Analysis {
    pub fn from_csv(pilot: &str, analysis: &str, roles: RoleSpec, transforms: TransformSpec) -> jointvip::Result<Self> {
        let study = load_study(pilot, analysis, &roles, &transforms)?;
        let model = create_jointvip(&study)?;
        Ok(Analysis { roles, transforms, study, model, post: None })
    }

    /// Copy of `self` with the post model fitted on `post_csv`, replacing any earlier one.
    pub fn with_post(&self, post_csv: &str) -> jointvip::Result<Self> {
        let table = load_post_table(post_csv, &self.roles, &self.transforms)?;
        let post = create_post_jointvip(&self.model, &table)?;
        Ok(Analysis { post: Some(post), ..self.clone() })
    }

    /// Model JSON; includes the post arrays when a post model is attached.
    pub fn model_json(&self, flavor: SmdFlavor) -> String {
        match &self.post {
            Some(post) => post_model_json(post, flavor),
            None => model_json(&self.model, flavor),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io("read", path, e))
}

/// Reads a manifest and every CSV it names. Relative paths resolve against the manifest's directory.
pub fn load_manifest(path: &Path) -> Result<Analysis, CliError> {
    let base = path.parent().unwrap_or(Path::new("."));
    let manifest = StudyManifest::from_json(&read(path)?)?.resolve_paths(base);
    let pilot = read(&manifest.pilot_csv)?;
    let analysis = read(&manifest.analysis_csv)?;
    let loaded = Analysis::from_csv(&pilot, &analysis, manifest.roles()?, manifest.transforms.clone())?;
    match &manifest.post_analysis_csv {
        Some(post) => Ok(loaded.with_post(&read(post)?)?),
        None => Ok(loaded),
    }
}

/// Report options plus the post tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub report: ReportOptions,
    pub post_bias_tol: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options { report: ReportOptions::default(), post_bias_tol: DEFAULT_POST_BIAS_TOL }
    }
}

impl Options {
    pub fn new(smd: SmdFlavor, use_abs: bool, bias_tol: f64, post_bias_tol: f64) -> jointvip::Result<Self> {
        let report = ReportOptions::new(smd, use_abs, bias_tol)?;
        if !(post_bias_tol.is_finite() && post_bias_tol > 0.0) {
            return Err(jointvip::Error::InvalidOption(format!(
                "post_bias_tol must be finite and positive, got {post_bias_tol}"
            )));
        }
        Ok(Options { report, post_bias_tol })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn options_reject_bad_tolerances() {
        assert!(Options::new(SmdFlavor::Pure, false, 0.02, 0.01).is_ok());
        for (tol, post) in [(0.0, 0.005), (0.01, 0.0), (0.01, f64::INFINITY), (f64::NAN, 0.005)] {
            let err = Options::new(SmdFlavor::CrossSample, true, tol, post).unwrap_err();
            assert_eq!(err.code(), "InvalidOption");
        }
    }

    #[test]
    fn post_replaces_rather_than_stacks() {
        let roles = RoleSpec::new("t", "y", ["x"], None).unwrap();
        let pilot = "t,y,x\n0,1,1\n0,2,3\n0,4,4\n";
        let analysis = "t,y,x\n1,1,2\n0,2,1\n1,3,5\n";
        let base = Analysis::from_csv(pilot, analysis, roles, TransformSpec::default()).unwrap();
        assert!(!base.model_json(SmdFlavor::CrossSample).contains("post_covariates"));
        let once = base.with_post(analysis).unwrap();
        let twice = once.with_post("t,y,x\n1,1,2\n0,2,2\n").unwrap();
        assert_eq!(twice.post.as_ref().unwrap().post_measures()[0].post_smd_cross, 0.0);
        assert!(twice.model_json(SmdFlavor::CrossSample).contains("post_covariates"));
        assert!(base.post.is_none());
    }
}
