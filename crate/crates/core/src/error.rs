use thiserror::Error;

/// Every failure the pipeline can report.
///
/// Row numbers are 1-based data rows (the header is not counted).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    // ingest
    #[error("invalid roles: {0}")]
    InvalidRoles(String),
    #[error("malformed CSV: {0}")]
    MalformedCsv(String),
    #[error("column `{name}` not found in header")]
    MissingColumn { name: String },
    #[error("row {row}, column `{col}`: cell is not a finite decimal number")]
    NonNumericCell { row: usize, col: String },
    #[error("row {row}, column `{col}`: missing value")]
    MissingValue { row: usize, col: String },
    #[error("row {row}: treatment must be 0 or 1")]
    NonBinaryTreatment { row: usize },
    #[error("row {row}: weight must be positive")]
    NonPositiveWeight { row: usize },
    #[error("pilot and analysis tables are bound to different roles")]
    RoleMismatch,
    #[error("pilot sample contains {count} treated unit(s); it must hold controls only")]
    TreatedInPilot { count: usize },
    #[error("analysis sample has no treated units")]
    NoTreatedInAnalysis,
    #[error("analysis sample has no control units")]
    NoControlInAnalysis,
    #[error("covariate `{covariate}` is constant in the pilot sample")]
    ZeroPilotVariance { covariate: String },
    #[error("transform target `{col}` is not an outcome or covariate column")]
    InvalidTransformTarget { col: String },
    #[error("log1p of negative value in column `{col}`, row {row}")]
    NegativeInputForLog { col: String, row: usize },
    #[error("invalid study manifest: {0}")]
    InvalidManifest(String),

    // measures
    #[error("at least {needed} values are required, got {got}")]
    TooFewValues { needed: usize, got: usize },
    #[error("unknown covariate `{0}`")]
    UnknownCovariate(String),
    #[error("column `{col}` has zero variance in the pilot sample")]
    ZeroVariance { col: String },
    #[error("invalid option: {0}")]
    InvalidOption(String),

    // post
    #[error("covariate `{0}` is missing from the post-adjustment sample")]
    CovariateMissingInPost(String),

    // render
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("invalid plot spec: {0}")]
    InvalidPlotSpec(String),
}

impl Error {
    /// Stable machine-readable code, equal to the variant name.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidRoles(_) => "InvalidRoles",
            Error::MalformedCsv(_) => "MalformedCsv",
            Error::MissingColumn { .. } => "MissingColumn",
            Error::NonNumericCell { .. } => "NonNumericCell",
            Error::MissingValue { .. } => "MissingValue",
            Error::NonBinaryTreatment { .. } => "NonBinaryTreatment",
            Error::NonPositiveWeight { .. } => "NonPositiveWeight",
            Error::RoleMismatch => "RoleMismatch",
            Error::TreatedInPilot { .. } => "TreatedInPilot",
            Error::NoTreatedInAnalysis => "NoTreatedInAnalysis",
            Error::NoControlInAnalysis => "NoControlInAnalysis",
            Error::ZeroPilotVariance { .. } => "ZeroPilotVariance",
            Error::InvalidTransformTarget { .. } => "InvalidTransformTarget",
            Error::NegativeInputForLog { .. } => "NegativeInputForLog",
            Error::InvalidManifest(_) => "InvalidManifest",
            Error::TooFewValues { .. } => "TooFewValues",
            Error::UnknownCovariate(_) => "UnknownCovariate",
            Error::ZeroVariance { .. } => "ZeroVariance",
            Error::InvalidOption(_) => "InvalidOption",
            Error::CovariateMissingInPost(_) => "CovariateMissingInPost",
            Error::InvalidRange(_) => "InvalidRange",
            Error::InvalidPlotSpec(_) => "InvalidPlotSpec",
        }
    }

    /// Structured detail for error payloads, if the variant carries any.
    pub fn detail(&self) -> Option<serde_json::Value> {
        use serde_json::json;
        match self {
            Error::MissingColumn { name } => Some(json!({ "column": name })),
            Error::NonNumericCell { row, col } | Error::MissingValue { row, col } => {
                Some(json!({ "row": row, "column": col }))
            }
            Error::NonBinaryTreatment { row } | Error::NonPositiveWeight { row } => Some(json!({ "row": row })),
            Error::TreatedInPilot { count } => Some(json!({ "count": count })),
            Error::ZeroPilotVariance { covariate } => Some(json!({ "covariate": covariate })),
            Error::InvalidTransformTarget { col } => Some(json!({ "column": col })),
            Error::NegativeInputForLog { col, row } => Some(json!({ "row": row, "column": col })),
            Error::TooFewValues { needed, got } => Some(json!({ "needed": needed, "got": got })),
            Error::UnknownCovariate(name) | Error::CovariateMissingInPost(name) => Some(json!({ "covariate": name })),
            Error::ZeroVariance { col } => Some(json!({ "column": col })),
            _ => None,
        }
    }

    /// `{code, message, detail?}` error object.
    pub fn to_json(&self) -> serde_json::Value {
        let mut obj = serde_json::json!({
            "code": self.code(),
            "message": self.to_string(),
        });
        if let Some(detail) = self.detail() {
            obj["detail"] = detail;
        }
        obj
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
