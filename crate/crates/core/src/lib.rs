//! Joint variable importance diagnostics for observational study design.
//!
//! For every covariate the toolkit pairs its treatment imbalance (an SMD
//! scaled by a held-out, controls-only pilot sample) with its correlation to
//! the outcome in that pilot sample. Their product is the bias a simple
//! one-variable omitted-variable model attributes to ignoring the covariate,
//! which ranks covariates for matching or weighting.
//!
//! ```no_run
//! use jointvip::{create_jointvip, load_study, summarize, ReportOptions, RoleSpec, TransformSpec};
//!
//! # fn main() -> jointvip::Result<()> {
//! let roles = RoleSpec::new("treat", "log_re78", ["age", "educ"], None)?;
//! let pilot = std::fs::read_to_string("pilot.csv").unwrap();
//! let analysis = std::fs::read_to_string("analysis.csv").unwrap();
//! let study = load_study(&pilot, &analysis, &roles, &TransformSpec::default())?;
//! let model = create_jointvip(&study)?;
//! print!("{}", summarize(&model, &ReportOptions::default()));
//! # Ok(())
//! # }
//! ```

pub mod error;
pub mod ingest;
pub mod json;
pub mod measures;
pub mod post;
pub mod render;

pub use error::{Error, Result};
pub use ingest::{
    apply_transforms, load_post_table, load_study, parse_table, validate_study, RoleSpec, SampleTable, StudyManifest,
    Transform, TransformSpec, ValidatedStudy,
};
pub use measures::{
    bias_score, create_jointvip, format_table, outcome_correlation, pearson, round3, sample_sd, smd, summarize,
    tabulate, CovariateMeasure, JointVipModel, ReportOptions, SmdFlavor, SummaryReport, TableRow, DEFAULT_BIAS_TOL,
};
pub use post::{
    create_post_jointvip, format_post_table, post_summarize, post_tabulate, PostJointVipModel, PostMeasure, PostReport,
    PostTableRow, DEFAULT_POST_BIAS_TOL,
};
pub use render::{bias_curve, layout, render_svg, Interval, PlotGeometry, PlotInput, PlotSpec};
