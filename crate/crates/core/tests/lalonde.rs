use std::path::{Path, PathBuf};

use jointvip::{
    create_jointvip, create_post_jointvip, format_post_table, format_table, load_post_table, load_study,
    post_summarize, post_tabulate, summarize, tabulate, JointVipModel, PostJointVipModel, ReportOptions, RoleSpec,
    StudyManifest, TransformSpec, DEFAULT_POST_BIAS_TOL,
};

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/lalonde")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn manifest(name: &str) -> StudyManifest {
    let dir = fixture_dir();
    StudyManifest::from_json(&read(&dir.join(name))).unwrap().resolve_paths(&dir)
}

fn base_model() -> JointVipModel {
    let m = manifest("manifest.json");
    let study = load_study(&read(&m.pilot_csv), &read(&m.analysis_csv), &m.roles().unwrap(), &m.transforms).unwrap();
    create_jointvip(&study).unwrap()
}

fn post_model() -> PostJointVipModel {
    let m = manifest("manifest_post.json");
    let post = read(m.post_analysis_csv.as_ref().unwrap());
    let table = load_post_table(&post, &m.roles().unwrap(), &m.transforms).unwrap();
    create_post_jointvip(&base_model(), &table).unwrap()
}

#[test]
fn base_summary_and_table() {
    let model = base_model();
    assert_eq!(model.measures().len(), 8);
    assert_eq!((model.n_pilot(), model.n_treated(), model.n_control()), (15992, 185, 260));

    let opts = ReportOptions::default();
    let summary = summarize(&model, &opts);
    assert_eq!(
        summary.to_string(),
        "Max absolute bias is 0.113\n\
         2 variables are above the desired 0.01 absolute bias tolerance\n\
         8 variables can be plotted\n"
    );
    let rows = tabulate(&model, &opts);
    let names: Vec<&str> = rows.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, ["log_re75", "log_re74"]);
    assert_eq!(format_table(&rows), "          bias\nlog_re75 0.113\nlog_re74 0.045\n");
}

#[test]
fn post_table_after_pair_matching() {
    let model = post_model();
    assert_eq!((model.n_post_treated(), model.n_post_control()), (185, 185));
    let opts = ReportOptions::default();
    let rows = post_tabulate(&model, &opts);
    assert_eq!(
        format_post_table(&rows),
        "          bias post_bias\nlog_re75 0.113     0.005\nlog_re74 0.045     0.003\n"
    );
    let report = post_summarize(&model, &opts, DEFAULT_POST_BIAS_TOL).unwrap();
    assert_eq!(report.post_lines()[0], "Max absolute post-bias is 0.005");
    let above: Vec<&str> = model
        .post_measures()
        .iter()
        .filter(|m| m.post_bias_cross.abs() > DEFAULT_POST_BIAS_TOL)
        .map(|m| m.name.as_str())
        .collect();
    assert_eq!(above, ["marr"]);
    assert_eq!(report.n_post_above_tol, 1);
}

#[test]
fn log_columns_match_log1p_of_raw_earnings() {
    let dir = fixture_dir();
    for (raw, logged) in [("re74", "log_re74"), ("re75", "log_re75"), ("re78", "log_re78")] {
        let plain = RoleSpec::new("treat", raw, ["age"], None).unwrap();
        let stored = RoleSpec::new("treat", logged, ["age"], None).unwrap();
        let text = read(&dir.join("analysis.csv"));
        let spec = TransformSpec::new().with(raw, jointvip::Transform::Log1p);
        let transformed = jointvip::apply_transforms(jointvip::parse_table(&text, &plain).unwrap(), &spec).unwrap();
        let reference = jointvip::parse_table(&text, &stored).unwrap();
        for (a, b) in transformed.outcome().iter().zip(reference.outcome()) {
            assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0), "{raw}: {a} vs {b}");
        }
    }
}
