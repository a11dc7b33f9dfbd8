use std::io::Write;
use std::process::{Command, Stdio};

use walkerpose::geometric::GeometricPose as P;
use walkerpose::pose::io::FrameRecord;
use walkerpose::serve::{GeometricStatus, Response, WireMessage};
use walkerpose::synth::{generate_session, NoiseModel};

fn run_stdio(input: &str, extra: &[&str], env: Option<(&str, &str)>) -> (Option<i32>, Vec<Response>) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_walkerpose"));
    cmd.args(["serve", "--stdio"])
        .args(extra)
        .env_remove("WALKERPOSE_CONFIG")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null());
    if let Some((k, v)) = env {
        cmd.env(k, v);
    }
    let mut child = cmd.spawn().unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    let responses = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    (out.status.code(), responses)
}

fn frame_line(f: &walkerpose::pose::LandmarkFrame) -> String {
    serde_json::to_string(&WireMessage::Frame(FrameRecord::from(f))).unwrap()
}

#[test]
fn stdio_session_answers_every_line_in_order() {
    let script = [(P::StandingStill, 2.0), (P::FallForward, 3.0), (P::StandingStill, 2.0)];
    let session = generate_session(&script, 10.0, &NoiseModel::zero(), 3).unwrap();
    let mut input = String::new();
    input.push_str("{\"type\":\"configure\",\"alert_frames\":3}\n");
    input.push_str("this is not json\n\n");
    input.push_str(&frame_line(&session.frames[0]));
    input.push('\n');
    input.push_str("{\"type\":\"calibrate\",\"frames\":10}\n");
    for f in &session.frames {
        input.push_str(&frame_line(f));
        input.push('\n');
    }
    input.push_str("{\"type\":\"reset\"}\n");
    input.push_str(&frame_line(&session.frames[0]));
    input.push('\n');

    let (code, responses) = run_stdio(&input, &[], None);
    assert_eq!(code, Some(0));
    assert_eq!(responses.len(), session.frames.len() + 6);
    assert!(matches!(&responses[0], Response::Ack { request } if request == "configure"));
    assert!(matches!(&responses[1], Response::Error { error, .. } if error == "parse"));
    match &responses[2] {
        Response::Result(r) => assert_eq!(r.geometric, GeometricStatus::NotCalibrated),
        other => panic!("{other:?}"),
    }
    assert!(matches!(&responses[3], Response::Ack { request } if request == "calibrate"));

    let results: Vec<_> = responses[4..4 + session.frames.len()]
        .iter()
        .map(|r| match r {
            Response::Result(c) => c,
            other => panic!("{other:?}"),
        })
        .collect();
    for (r, f) in results.iter().zip(&session.frames) {
        assert_eq!(r.ts, f.timestamp_ms);
    }
    assert_eq!(results[9].geometric, GeometricStatus::Calibrated { frames: 10 });
    let fall_start = 20;
    assert!(results[fall_start..fall_start + 10].iter().any(|r| r.geometric.pose() == Some(P::FallForward)));
    let first_alert = results.iter().position(|r| r.alert).expect("fall raises an alert");
    assert!(first_alert >= fall_start + 2, "alert at {first_alert}");
    assert!(!results.last().unwrap().alert, "alert clears after standing again");

    assert!(matches!(&responses[responses.len() - 2], Response::Ack { request } if request == "reset"));
    match responses.last().unwrap() {
        Response::Result(r) => assert_eq!(r.geometric, GeometricStatus::NotCalibrated),
        other => panic!("{other:?}"),
    }
}

#[test]
fn config_from_environment_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"debounce_frames\": \"many\"}").unwrap();
    let (code, responses) = run_stdio("", &[], Some(("WALKERPOSE_CONFIG", bad.to_str().unwrap())));
    assert_ne!(code, Some(0));
    assert!(responses.is_empty());

    let good = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("config/geometric_default.json");
    let (code, _) = run_stdio("", &["--config", good.to_str().unwrap()], Some(("WALKERPOSE_CONFIG", bad.to_str().unwrap())));
    assert_eq!(code, Some(0), "an explicit --config wins over the environment");
}

#[test]
fn missing_model_file_fails_fast() {
    let (code, responses) = run_stdio("", &["--model", "/nonexistent/model.json"], None);
    assert_eq!(code, Some(2));
    assert!(responses.is_empty());
}
