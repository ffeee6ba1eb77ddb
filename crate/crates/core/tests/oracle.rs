mod common;

use common::{check_measure, random_study, ref_pearson, ref_sd, reference_measures, RawStudy};
use jointvip::{create_jointvip, load_study, pearson, sample_sd, RoleSpec, TransformSpec, ValidatedStudy};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn study_of(raw: &RawStudy) -> ValidatedStudy {
    let roles = RoleSpec::new("treat", "y", raw.covariates.iter().cloned(), None).unwrap();
    load_study(&raw.pilot_csv(), &raw.analysis_csv(), &roles, &TransformSpec::default()).unwrap()
}

#[test]
fn sample_sd_matches_pairwise_reference() {
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..25 {
        let values: Vec<f64> = (0..40).map(|_| rng.random_range(-1e3..1e3)).collect();
        let (got, want) = (sample_sd(&values).unwrap(), ref_sd(&values));
        assert!((got - want).abs() <= 1e-12 * want, "{got} vs {want}");
    }
}

#[test]
fn pearson_matches_pairwise_reference() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..25 {
        let x: Vec<f64> = (0..50).map(|_| rng.random_range(-5.0..5.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.4 * v + rng.random_range(-3.0..3.0)).collect();
        let (got, want) = (pearson(&x, &y).unwrap(), ref_pearson(&x, &y));
        assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
    }
}

#[test]
fn thirty_unit_study_matches_reference_pipeline() {
    let mut rng = StdRng::seed_from_u64(30);
    let raw = loop {
        let s = random_study(&mut rng, 30, 4);
        if s.pilot_y.len() + s.analysis_y.len() >= 30 {
            break s;
        }
    };
    let model = create_jointvip(&study_of(&raw)).unwrap();
    let reference = reference_measures(&raw);
    assert_eq!(model.measures().len(), reference.len());
    for (m, r) in model.measures().iter().zip(&reference) {
        check_measure(m, r, 1e-12).unwrap();
    }
}

#[test]
fn random_studies_match_reference() {
    let mut rng = StdRng::seed_from_u64(2024);
    for case in 0..200 {
        let raw = random_study(&mut rng, 50, 6);
        let model = create_jointvip(&study_of(&raw)).unwrap();
        for (m, r) in model.measures().iter().zip(reference_measures(&raw)) {
            if let Err(msg) = check_measure(m, &r, 1e-12) {
                panic!("case {case}: {msg}");
            }
            assert!(m.bias_cross.abs() <= m.smd_cross.abs() && m.bias_pure.abs() <= m.smd_pure.abs());
        }
    }
}
