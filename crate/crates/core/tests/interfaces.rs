//! Contracts with external producers: capture-style wire frames and recorded
//! dataset files.

use std::path::PathBuf;

use walkerpose::features::{dataset_matrix, FeatureMode, FeatureSpec};
use walkerpose::features::table::label_columns;
use walkerpose::gbt::{train_multi_output, GBTParams};
use walkerpose::geometric::GeometricConfig;
use walkerpose::pose::io::read_dataset;
use walkerpose::pose::{validate_frame, View};
use walkerpose::serve::{classify_recorded, parse_message, GeometricStatus, Response, ServiceModels, Session, WireMessage};
use walkerpose::synth::{generate_dataset, GeneratorSpec, NoiseModel};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn small_models() -> ServiceModels {
    let spec = GeneratorSpec {
        participants: 4,
        frames_per_class: 8,
        ..GeneratorSpec::default()
    };
    let ds = generate_dataset(&spec, &NoiseModel::default(), 1).unwrap();
    let x = dataset_matrix(&ds, FeatureMode::Features, &FeatureSpec::default()).unwrap();
    let params = GBTParams {
        n_rounds: 5,
        max_depth: 3,
        ..GBTParams::default()
    };
    let (multi, _) = train_multi_output(&x, &label_columns(&ds), &params, ds.vocabulary.len()).unwrap();
    ServiceModels::new(Some(multi), None, GeometricConfig::default(), 5).unwrap()
}

#[test]
fn recorded_file_loads_and_validates() {
    let ds = read_dataset(data("recorded_sitting.ndjson")).unwrap();
    assert_eq!(ds.len(), 60);
    assert_eq!(ds.provenance["label"], "sitting");
    let sitting = ds.vocabulary.id("sitting").unwrap();
    for s in &ds.samples {
        assert!(validate_frame(&s.frame).is_empty(), "{:?}", validate_frame(&s.frame));
        assert!(s.frame.fsr.is_none());
        assert_eq!(s.labels.posture_type, sitting);
    }
}

#[test]
fn recorded_file_classifies_through_the_service() {
    let ds = read_dataset(data("recorded_sitting.ndjson")).unwrap();
    let frames: Vec<_> = ds.samples.iter().map(|s| s.frame.clone()).collect();
    let shared = small_models();
    let responses = classify_recorded(&shared, &frames, 10);
    assert_eq!(responses.len(), frames.len());
    for (r, f) in responses.iter().zip(&frames) {
        match r {
            Response::Result(c) => {
                assert_eq!(c.ts, f.timestamp_ms);
                assert!(c.model_error.is_none(), "{:?}", c.model_error);
                let models = c.models.as_ref().expect("model outputs");
                assert_eq!(models.posture_type.probabilities.len(), 17);
                assert!(models.posture_type.name.is_some());
            }
            other => panic!("{other:?}"),
        }
    }
    match &responses[9] {
        Response::Result(c) => assert_eq!(c.geometric, GeometricStatus::Calibrated { frames: 10 }),
        other => panic!("{other:?}"),
    }
}

fn capture_frame(ts: i64, view: &str, leg_visibility: f64) -> String {
    let lm: Vec<String> = (0..33)
        .map(|i| {
            let v = if i >= 25 { leg_visibility } else { 0.97 };
            format!("[{:.6},{:.6},{:.6},{v}]", 0.4 + 0.006 * i as f64, 0.1 + 0.025 * i as f64, -0.01 * (i % 4) as f64)
        })
        .collect();
    format!(
        r#"{{"type":"frame","ts":{ts},"pid":"p07","view":"{view}","lm":[{}],"fsr":null}}"#,
        lm.join(",")
    )
}

#[test]
fn capture_style_frames_are_accepted() {
    let upper = parse_message(&capture_frame(5, "upper", 0.04)).unwrap();
    match &upper {
        WireMessage::Frame(f) => {
            assert_eq!(f.view, View::UpperBody);
            assert!(f.fsr.is_none());
        }
        other => panic!("{other:?}"),
    }
    let shared = small_models();
    let mut session = Session::new(&shared);
    assert!(matches!(
        session.handle_line(r#"{"type":"calibrate","frames":10}"#),
        Some(Response::Ack { .. })
    ));
    for ts in 0..10 {
        session.handle_line(&capture_frame(ts * 100, "upper", 0.04)).unwrap();
    }
    match session.handle_line(&capture_frame(1000, "upper", 0.04)).unwrap() {
        Response::Result(c) => {
            assert!(c.geometric.pose().is_some(), "{:?}", c.geometric);
            assert!(c.models.is_some() && c.model_error.is_none());
        }
        other => panic!("{other:?}"),
    }
    match session.handle_line(&capture_frame(1100, "full", 0.9)).unwrap() {
        Response::Result(c) => assert!(c.models.is_some()),
        other => panic!("{other:?}"),
    }
}

#[test]
fn capture_frames_with_extra_fields_are_rejected() {
    let line = capture_frame(5, "full", 0.9).replace(r#""fsr":null"#, r#""fsr":null,"fps":10"#);
    assert!(parse_message(&line).is_err());
    let shared = ServiceModels::geometric_only(GeometricConfig::default(), 5).unwrap();
    match Session::new(&shared).handle_line(&line).unwrap() {
        Response::Error { error, .. } => assert_eq!(error, "parse"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn wire_examples_parse() {
    let text = std::fs::read_to_string(data("wire_examples.ndjson")).unwrap();
    let mut kinds = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let msg = parse_message(line).unwrap_or_else(|e| panic!("{line}: {e}"));
        kinds.push(match msg {
            WireMessage::Frame(_) => "frame",
            WireMessage::Calibrate { .. } => "calibrate",
            WireMessage::Reset => "reset",
            WireMessage::Configure(_) => "configure",
        });
    }
    for kind in ["frame", "calibrate", "reset", "configure"] {
        assert!(kinds.contains(&kind), "no {kind} example");
    }
}
