//! Newline-delimited JSON dataset files.
//!
//! Line 1 is a header `{"schema":1,"vocab":[...]}` (optionally carrying a
//! `provenance` object); every following line is one labelled sample:
//!
//! ```text
//! {"ts":0,"pid":"p01","view":"full","lm":[[x,y,z,v],...],"fsr":[l,r],"labels":{"walker":1,"init":"standing","posture":0,"risk":"standing"}}
//! ```
//!
//! Floats are written in shortest round-trip form and parsed with correct
//! rounding, so a write/read cycle reproduces every value bit for bit.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    Dataset, Fsr, InitialPosition, LabelRecord, LabelVocabulary, Landmark, LandmarkFrame,
    RiskLabel, Sample, View, LANDMARK_COUNT,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DatasetIoError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: schema error: {message}")]
    Schema { line: usize, message: String },
    #[error("dataset file is empty")]
    Empty,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    schema: u32,
    vocab: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    provenance: BTreeMap<String, serde_json::Value>,
}

/// Wire form of a landmark frame; shared with the streaming protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub ts: i64,
    pub pid: String,
    pub view: View,
    pub lm: Vec<[f64; 4]>,
    pub fsr: Option<[f64; 2]>,
}

impl From<&LandmarkFrame> for FrameRecord {
    fn from(f: &LandmarkFrame) -> Self {
        FrameRecord {
            ts: f.timestamp_ms,
            pid: f.participant_id.clone(),
            view: f.view,
            lm: f
                .landmarks
                .iter()
                .map(|l| [l.x, l.y, l.z, l.visibility])
                .collect(),
            fsr: f.fsr.map(|s| [s.left, s.right]),
        }
    }
}

impl From<FrameRecord> for LandmarkFrame {
    fn from(r: FrameRecord) -> Self {
        LandmarkFrame {
            timestamp_ms: r.ts,
            participant_id: r.pid,
            view: r.view,
            landmarks: r
                .lm
                .into_iter()
                .map(|[x, y, z, v]| Landmark::new(x, y, z, v))
                .collect(),
            fsr: r.fsr.map(|[left, right]| Fsr { left, right }),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelsRecord {
    walker: u8,
    init: InitialPosition,
    posture: usize,
    risk: Option<RiskLabel>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleRecord {
    ts: i64,
    pid: String,
    view: View,
    lm: Vec<[f64; 4]>,
    fsr: Option<[f64; 2]>,
    labels: LabelsRecord,
}

fn sample_to_record(s: &Sample) -> SampleRecord {
    let f = FrameRecord::from(&s.frame);
    SampleRecord {
        ts: f.ts,
        pid: f.pid,
        view: f.view,
        lm: f.lm,
        fsr: f.fsr,
        labels: LabelsRecord {
            walker: u8::from(s.labels.walker_choice),
            init: s.labels.initial_position,
            posture: s.labels.posture_type,
            risk: s.labels.risk_label,
        },
    }
}

fn record_to_sample(
    r: SampleRecord,
    vocab: &LabelVocabulary,
    line: usize,
) -> Result<Sample, DatasetIoError> {
    let schema = |message: String| DatasetIoError::Schema { line, message };
    if r.lm.len() != LANDMARK_COUNT {
        return Err(schema(format!(
            "expected {LANDMARK_COUNT} landmarks, found {}",
            r.lm.len()
        )));
    }
    if r.labels.walker > 1 {
        return Err(schema(format!("walker must be 0 or 1, got {}", r.labels.walker)));
    }
    if r.labels.posture >= vocab.len() {
        return Err(schema(format!(
            "posture id {} outside vocabulary of {} classes",
            r.labels.posture,
            vocab.len()
        )));
    }
    let labels = LabelRecord {
        walker_choice: r.labels.walker == 1,
        initial_position: r.labels.init,
        posture_type: r.labels.posture,
        risk_label: r.labels.risk,
    };
    let frame = LandmarkFrame::from(FrameRecord {
        ts: r.ts,
        pid: r.pid,
        view: r.view,
        lm: r.lm,
        fsr: r.fsr,
    });
    Ok(Sample { frame, labels })
}

pub fn write_dataset_to<W: Write>(dataset: &Dataset, mut w: W) -> Result<(), DatasetIoError> {
    let header = Header {
        schema: SCHEMA_VERSION,
        vocab: dataset.vocabulary.names().to_vec(),
        provenance: dataset.provenance.clone(),
    };
    serde_json::to_writer(&mut w, &header).map_err(std::io::Error::from)?;
    w.write_all(b"\n")?;
    for s in &dataset.samples {
        serde_json::to_writer(&mut w, &sample_to_record(s)).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_from<R: Read>(r: R) -> Result<Dataset, DatasetIoError> {
    let reader = BufReader::new(r);
    let mut lines = reader.lines().enumerate();

    let (header_line, header) = loop {
        match lines.next() {
            None => return Err(DatasetIoError::Empty),
            Some((i, line)) => {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                break (i + 1, line);
            }
        }
    };
    let header: Header =
        serde_json::from_str(&header).map_err(|e| DatasetIoError::Parse {
            line: header_line,
            message: format!("bad header: {e}"),
        })?;
    if header.schema != SCHEMA_VERSION {
        return Err(DatasetIoError::Schema {
            line: header_line,
            message: format!("unsupported schema version {}", header.schema),
        });
    }
    let vocabulary = LabelVocabulary::new(&header.vocab).map_err(|e| DatasetIoError::Schema {
        line: header_line,
        message: e.to_string(),
    })?;

    let mut samples = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        let record: SampleRecord =
            serde_json::from_str(&line).map_err(|e| DatasetIoError::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
        samples.push(record_to_sample(record, &vocabulary, line_no)?);
    }
    if samples.is_empty() {
        return Err(DatasetIoError::Empty);
    }
    Ok(Dataset {
        samples,
        vocabulary,
        provenance: header.provenance,
    })
}

pub fn write_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), DatasetIoError> {
    let file = File::create(path)?;
    write_dataset_to(dataset, BufWriter::new(file))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset, DatasetIoError> {
    read_dataset_from(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::test_support::upright_frame;

    fn three_samples() -> Dataset {
        let mut ds = Dataset::new(LabelVocabulary::default_postures());
        for i in 0..3 {
            let mut frame = upright_frame();
            frame.timestamp_ms = 100 * i as i64;
            frame.landmarks[5].x = 0.1 + 1.0 / 3.0 * i as f64;
            if i == 2 {
                frame.fsr = None;
                frame.view = View::UpperBody;
            }
            ds.samples.push(Sample {
                frame,
                labels: LabelRecord {
                    walker_choice: i % 2 == 0,
                    initial_position: InitialPosition::Standing,
                    posture_type: i,
                    risk_label: if i == 1 { None } else { Some(RiskLabel::BadPosture) },
                },
            });
        }
        ds.provenance.insert("seed".into(), serde_json::json!(7));
        ds
    }

    #[test]
    fn round_trip_is_identity() {
        let ds = three_samples();
        let mut buf = Vec::new();
        write_dataset_to(&ds, &mut buf).unwrap();
        let back = read_dataset_from(buf.as_slice()).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn header_and_line_shape() {
        let ds = three_samples();
        let mut buf = Vec::new();
        write_dataset_to(&ds, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with(r#"{"schema":1,"vocab":["standing","#));
        let first = lines.next().unwrap();
        assert!(first.starts_with(r#"{"ts":0,"pid":"p01","view":"full","lm":[["#));
        assert!(first.ends_with(
            r#""fsr":[0.8,0.8],"labels":{"walker":1,"init":"standing","posture":0,"risk":"bad_posture"}}"#
        ));
    }

    #[test]
    fn missing_landmarks_key_reports_line() {
        let ds = three_samples();
        let mut buf = Vec::new();
        write_dataset_to(&ds, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let mut v: serde_json::Value = serde_json::from_str(&lines[2]).unwrap();
        v.as_object_mut().unwrap().remove("lm");
        lines[2] = v.to_string();
        let err = read_dataset_from(lines.join("\n").as_bytes()).unwrap_err();
        match err {
            DatasetIoError::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("lm"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_rejected() {
        assert!(matches!(read_dataset_from(&b""[..]), Err(DatasetIoError::Empty)));
        assert!(matches!(
            read_dataset_from(&br#"{"schema":1,"vocab":["a"]}"#[..]),
            Err(DatasetIoError::Empty)
        ));
    }

    #[test]
    fn posture_outside_vocabulary_is_a_schema_error() {
        let ds = three_samples();
        let mut buf = Vec::new();
        write_dataset_to(&ds, &mut buf).unwrap();
        let text = String::from_utf8(buf)
            .unwrap()
            .replacen(r#""vocab":["standing","sitting","sit_to_stand","#, r#""vocab":["standing","sitting"],"x":["#, 1);
        // unknown header key
        assert!(matches!(
            read_dataset_from(text.as_bytes()),
            Err(DatasetIoError::Parse { line: 1, .. })
        ));

        let small = r#"{"schema":1,"vocab":["a","b"]}"#.to_string();
        let mut buf = Vec::new();
        write_dataset_to(&ds, &mut buf).unwrap();
        let body: Vec<&str> = std::str::from_utf8(&buf).unwrap().lines().skip(1).collect();
        let text = format!("{small}\n{}", body.join("\n"));
        assert!(matches!(
            read_dataset_from(text.as_bytes()),
            Err(DatasetIoError::Schema { line: 4, .. })
        ));
    }
}
