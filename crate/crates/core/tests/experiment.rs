use std::path::PathBuf;

use gml_core::harness::{load_csv, run_experiment, ClassifierKind, Dataset, ExperimentConfig, LabelColumn};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn separable() -> Dataset {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for c in 0..3 {
        for i in 0..10 {
            let t = i as f64 * 0.05;
            features.push(vec![100.0 * c as f64 + t, -50.0 * c as f64 + t * t, t]);
            labels.push(c);
        }
    }
    Dataset {
        name: "separable".into(),
        features,
        labels,
        num_classes: 3,
        class_names: vec!["a".into(), "b".into(), "c".into()],
        feature_names: vec!["x".into(), "y".into(), "z".into()],
    }
}

#[test]
fn bundled_datasets_load() {
    let iris = load_csv(data("iris.csv"), &LabelColumn::last(), b',').unwrap();
    assert_eq!((iris.num_samples(), iris.num_features(), iris.num_classes), (150, 4, 3));
    assert_eq!(iris.class_counts(), vec![50, 50, 50]);
    let wine = load_csv(data("wine.csv"), &LabelColumn::last(), b',').unwrap();
    assert_eq!((wine.num_samples(), wine.num_features(), wine.num_classes), (178, 13, 3));
}

#[test]
fn separable_clusters_have_zero_error() {
    let cfg = ExperimentConfig {
        seeds: vec![0, 1, 2],
        ..Default::default()
    };
    let report = run_experiment(&separable(), &cfg).unwrap();
    for kind in [ClassifierKind::Knn, ClassifierKind::Graph] {
        assert_eq!(report.summary_for(kind).unwrap().mean_error, 0.0, "{kind:?}");
    }
}

#[test]
fn reports_are_reproducible_and_consistent() {
    let iris = load_csv(data("iris.csv"), &LabelColumn::last(), b',').unwrap();
    let cfg = ExperimentConfig {
        seeds: vec![4, 5],
        ..Default::default()
    };
    let a = run_experiment(&iris, &cfg).unwrap();
    let b = run_experiment(&iris, &cfg).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());

    for s in &a.summary {
        let errors: Vec<f64> = a.runs.iter().filter(|r| r.classifier == s.classifier).map(|r| r.error).collect();
        assert_eq!(errors.len(), s.runs);
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        assert!((mean - s.mean_error).abs() < 1e-15);
    }
    for r in &a.runs {
        assert_eq!(r.error, r.misclassified as f64 / r.test_size as f64);
    }
    assert_eq!(a.runs.iter().map(|r| r.test_size).sum::<usize>(), 2 * 2 * 150);
}
