use std::collections::BTreeMap;
use std::path::PathBuf;

use adf_core::eval::{
    load_uci, run_comparison, run_uci, write_report, FeedbackPolicy, ReportFormat, RunMetrics, UciConfig,
    CSV_HEADER,
};
use adf_core::fusion::{Algorithm, FusionConfig, OracleLabel};
use adf_core::stream::{generate_stream, reference, ExpertProfile, StreamConfig};

fn data_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/ionosphere.data")
}

#[test]
fn perfect_experts_alarm_at_onset() {
    let cfg = StreamConfig {
        experts: vec![ExpertProfile::constant("p", 1.0, 0.0); 3],
        length: 200,
        positive_rate: 0.1,
        seed: 3,
        drift_switch_steps: vec![],
        preset_id: "p".into(),
    };
    let events = generate_stream(&cfg).unwrap();
    let onset = events.iter().find(|e| e.truth == Some(OracleLabel::Present)).unwrap().step;
    let runs = run_comparison(&events, &Algorithm::ALL, &FusionConfig::default(), FeedbackPolicy::Always).unwrap();
    for (algorithm, m) in &runs {
        assert_eq!(m.first_alarm_step, Some(onset), "{algorithm}");
    }
}

#[test]
fn fixed_weights_lose_to_eadf_on_the_drift_stream() {
    let events = generate_stream(&reference::drift()).unwrap();
    let runs = run_comparison(
        &events,
        &[Algorithm::Eadf, Algorithm::Fixed],
        &FusionConfig::default(),
        FeedbackPolicy::Always,
    )
    .unwrap();
    assert!(runs[&Algorithm::Fixed].avg_sq_error > runs[&Algorithm::Eadf].avg_sq_error);
}

#[test]
fn reports_are_reproducible_and_round_trip() {
    let events = generate_stream(&reference::regime_switch()).unwrap();
    let render = |format| {
        let runs = run_comparison(&events, &Algorithm::ALL, &FusionConfig::default(), FeedbackPolicy::Always).unwrap();
        let mut buf = Vec::new();
        write_report(&mut buf, &runs, format).unwrap();
        (runs, buf)
    };
    let (runs, json) = render(ReportFormat::Json);
    assert_eq!(json, render(ReportFormat::Json).1);
    let back: BTreeMap<Algorithm, RunMetrics> = serde_json::from_slice(&json).unwrap();
    assert_eq!(back, runs);

    let csv = String::from_utf8(render(ReportFormat::Csv).1).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.map(|l| l.split(',').next().unwrap()).collect::<Vec<_>>(), ["EADF", "POCS", "ULP", "Fixed"]);
}

#[test]
fn frozen_weights_stay_frozen() {
    let events = generate_stream(&reference::drift()).unwrap();
    let k = 125;
    let runs = run_comparison(
        &events,
        &[Algorithm::Eadf, Algorithm::Pocs, Algorithm::Ulp],
        &FusionConfig::default(),
        FeedbackPolicy::TrainThenFreeze(k),
    )
    .unwrap();
    for (algorithm, m) in &runs {
        let frozen = &m.weights_series[k as usize - 1];
        assert!(m.weights_series[k as usize..].iter().all(|w| w == frozen), "{algorithm}");
        assert_ne!(&m.weights_series[0], frozen, "{algorithm} never adapted");
    }
}

#[test]
fn series_lengths_match_the_run() {
    let events = generate_stream(&reference::regime_switch()).unwrap();
    let runs = run_comparison(&events, &[Algorithm::Ulp], &FusionConfig::default(), FeedbackPolicy::Always).unwrap();
    let m = &runs[&Algorithm::Ulp];
    assert_eq!(m.error_series.len(), events.len());
    assert_eq!(m.weights_series.len(), events.len());
    assert!(m.avg_sq_error >= 0.0);
}

#[test]
fn ionosphere_protocol() {
    let data = load_uci(&data_path()).unwrap();
    assert_eq!(data.features.len(), 351);
    assert!(data.features.iter().all(|r| r.len() == 34));
    for algorithm in [Algorithm::Eadf, Algorithm::Pocs] {
        let report = run_uci(&data, &UciConfig::with_fusion(algorithm)).unwrap();
        let knn = &report.classifiers[0];
        assert_eq!(knn.name, "knn4");
        assert!((knn.test_accuracy - 0.9735).abs() <= 0.03, "{}", knn.test_accuracy);
        let best = report.classifiers.iter().map(|c| c.test_accuracy).fold(0.0, f64::max);
        assert!(report.fused_test_accuracy >= best - 0.02, "{report:?}");
    }
}
