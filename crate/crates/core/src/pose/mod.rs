//! Landmark frames, labels and datasets.
//!
//! Every other module consumes these types. Frames are plain values; a frame
//! that passes [`validate_frame`] is accepted by feature extraction, the
//! geometric classifier and the service.

pub mod io;
pub mod topology;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec3;
pub use topology::{DerivedPoint, PointRef, LANDMARK_COUNT};

#[derive(Debug, Error)]
pub enum PoseError {
    #[error("unknown derived point `{0}`")]
    UnknownSpecifier(String),
    #[error("frame has {found} landmarks, landmark {index} is missing")]
    MissingLandmark { index: usize, found: usize },
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("vocabulary: {0}")]
    Vocabulary(String),
    #[error("dataset: {0}")]
    Dataset(String),
}

/// One detector keypoint in normalized image coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Landmark {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub visibility: f64,
}

impl Landmark {
    pub const fn new(x: f64, y: f64, z: f64, visibility: f64) -> Self {
        Landmark { x, y, z, visibility }
    }

    pub fn position(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn with_position(self, p: Vec3) -> Self {
        Landmark {
            x: p.x,
            y: p.y,
            z: p.z,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum View {
    #[serde(rename = "full")]
    FullBody,
    #[serde(rename = "upper")]
    UpperBody,
}

/// Normalized grip pressures on the walker handles, 0 = released.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fsr {
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkFrame {
    pub timestamp_ms: i64,
    pub participant_id: String,
    pub view: View,
    pub landmarks: Vec<Landmark>,
    pub fsr: Option<Fsr>,
}

impl LandmarkFrame {
    pub fn position(&self, index: usize) -> Result<Vec3, PoseError> {
        self.landmarks
            .get(index)
            .map(Landmark::position)
            .ok_or(PoseError::MissingLandmark {
                index,
                found: self.landmarks.len(),
            })
    }

    pub fn point(&self, point: PointRef) -> Result<Vec3, PoseError> {
        match point {
            PointRef::Landmark(i) => self.position(i),
            PointRef::Derived(d) => derived_point(self, d),
        }
    }

    /// Minimum visibility over the landmarks a point depends on.
    pub fn point_visibility(&self, point: PointRef) -> f64 {
        point
            .constituents()
            .into_iter()
            .map(|i| self.landmarks.get(i).map_or(0.0, |l| l.visibility))
            .fold(f64::INFINITY, f64::min)
    }

    /// Copy of the frame with every landmark shifted by `offset`.
    pub fn translated(&self, offset: Vec3) -> LandmarkFrame {
        let mut out = self.clone();
        for lm in &mut out.landmarks {
            *lm = lm.with_position(lm.position() + offset);
        }
        out
    }

    /// Copy of the frame scaled by `factor` about `center`.
    pub fn scaled_about(&self, center: Vec3, factor: f64) -> LandmarkFrame {
        let mut out = self.clone();
        for lm in &mut out.landmarks {
            *lm = lm.with_position(center + (lm.position() - center) * factor);
        }
        out
    }
}

/// Arithmetic midpoint of the two landmarks behind `spec`.
pub fn derived_point(frame: &LandmarkFrame, spec: DerivedPoint) -> Result<Vec3, PoseError> {
    let (a, b) = spec.constituents();
    Ok(frame.position(a)?.midpoint(frame.position(b)?))
}

pub fn derived_point_by_name(frame: &LandmarkFrame, name: &str) -> Result<Vec3, PoseError> {
    let spec =
        DerivedPoint::from_name(name).ok_or_else(|| PoseError::UnknownSpecifier(name.into()))?;
    derived_point(frame, spec)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    LandmarkCount { found: usize },
    NonFinite { index: usize },
    Visibility { index: usize, value: f64 },
    Fsr { side: &'static str, value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LandmarkCount { found } => {
                write!(f, "landmark count: expected {LANDMARK_COUNT}, found {found}")
            }
            Violation::NonFinite { index } => {
                write!(f, "landmark {index}: non-finite coordinate")
            }
            Violation::Visibility { index, value } => {
                write!(f, "landmark {index}: visibility {value} outside [0, 1]")
            }
            Violation::Fsr { side, value } => {
                write!(f, "fsr {side}: {value} outside [0, 1]")
            }
        }
    }
}

/// Lists every structural problem with a frame. An empty list means valid.
pub fn validate_frame(frame: &LandmarkFrame) -> Vec<Violation> {
    let mut out = Vec::new();
    if frame.landmarks.len() != LANDMARK_COUNT {
        out.push(Violation::LandmarkCount {
            found: frame.landmarks.len(),
        });
    }
    for (index, lm) in frame.landmarks.iter().enumerate() {
        if !(lm.x.is_finite() && lm.y.is_finite() && lm.z.is_finite()) {
            out.push(Violation::NonFinite { index });
        }
        if !(0.0..=1.0).contains(&lm.visibility) {
            out.push(Violation::Visibility {
                index,
                value: lm.visibility,
            });
        }
    }
    if let Some(fsr) = frame.fsr {
        for (side, value) in [("left", fsr.left), ("right", fsr.right)] {
            if !(0.0..=1.0).contains(&value) {
                out.push(Violation::Fsr { side, value });
            }
        }
    }
    out
}

/// `Ok(())` for a valid frame, otherwise an error listing every violation.
pub fn ensure_valid(frame: &LandmarkFrame) -> Result<(), PoseError> {
    let violations = validate_frame(frame);
    if violations.is_empty() {
        Ok(())
    } else {
        let msg = violations
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ");
        Err(PoseError::InvalidFrame(msg))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialPosition {
    Sitting,
    Standing,
}

impl InitialPosition {
    /// Binary target encoding: standing = 1.
    pub fn as_class(self) -> usize {
        match self {
            InitialPosition::Sitting => 0,
            InitialPosition::Standing => 1,
        }
    }

    pub fn from_class(c: usize) -> Self {
        if c == 1 {
            InitialPosition::Standing
        } else {
            InitialPosition::Sitting
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InitialPosition::Sitting => "sitting",
            InitialPosition::Standing => "standing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskLabel {
    Standing,
    Sitting,
    BadPosture,
}

impl RiskLabel {
    pub const ALL: [RiskLabel; 3] = [RiskLabel::Standing, RiskLabel::Sitting, RiskLabel::BadPosture];

    pub fn as_class(self) -> usize {
        match self {
            RiskLabel::Standing => 0,
            RiskLabel::Sitting => 1,
            RiskLabel::BadPosture => 2,
        }
    }

    pub fn from_class(c: usize) -> Option<Self> {
        Self::ALL.get(c).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            RiskLabel::Standing => "standing",
            RiskLabel::Sitting => "sitting",
            RiskLabel::BadPosture => "bad_posture",
        }
    }

    /// Risk label implied by a posture name: anything other than plain
    /// standing or sitting counts as a bad posture.
    pub fn from_posture_name(name: &str) -> Self {
        match name {
            "standing" => RiskLabel::Standing,
            "sitting" => RiskLabel::Sitting,
            _ => RiskLabel::BadPosture,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelRecord {
    pub walker_choice: bool,
    pub initial_position: InitialPosition,
    pub posture_type: usize,
    pub risk_label: Option<RiskLabel>,
}

/// The default 17 posture classes. The order fixes the class ids.
pub const DEFAULT_POSTURES: [&str; 17] = [
    "standing",
    "sitting",
    "sit_to_stand",
    "stand_to_sit",
    "lean_forward",
    "lean_backward",
    "lean_left",
    "lean_right",
    "twist_left",
    "twist_right",
    "raise_left_arm",
    "raise_right_arm",
    "raise_both_arms",
    "elbow_fold_left",
    "elbow_fold_right",
    "head_down",
    "head_up",
];

/// Bijective class-id to class-name table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVocabulary {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelVocabulary {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self, PoseError> {
        let mut index = HashMap::with_capacity(names.len());
        let mut owned = Vec::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            let name = name.as_ref();
            if name.is_empty() {
                return Err(PoseError::Vocabulary(format!("class {i} has an empty name")));
            }
            if index.insert(name.to_string(), i).is_some() {
                return Err(PoseError::Vocabulary(format!("duplicate class name `{name}`")));
            }
            owned.push(name.to_string());
        }
        if owned.is_empty() {
            return Err(PoseError::Vocabulary("vocabulary is empty".into()));
        }
        Ok(LabelVocabulary { names: owned, index })
    }

    pub fn default_postures() -> Self {
        Self::new(&DEFAULT_POSTURES).expect("default vocabulary is well formed")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Risk label implied by a posture id.
    pub fn risk_of(&self, id: usize) -> Option<RiskLabel> {
        self.name(id).map(RiskLabel::from_posture_name)
    }
}

impl Default for LabelVocabulary {
    fn default() -> Self {
        Self::default_postures()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub frame: LandmarkFrame,
    pub labels: LabelRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub vocabulary: LabelVocabulary,
    pub provenance: BTreeMap<String, serde_json::Value>,
}

impl Dataset {
    pub fn new(vocabulary: LabelVocabulary) -> Self {
        Dataset {
            samples: Vec::new(),
            vocabulary,
            provenance: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn participants(&self) -> BTreeSet<&str> {
        self.samples
            .iter()
            .map(|s| s.frame.participant_id.as_str())
            .collect()
    }

    /// New dataset sharing this vocabulary and provenance with the selected samples.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            vocabulary: self.vocabulary.clone(),
            provenance: self.provenance.clone(),
        }
    }

    /// Checks labels against the vocabulary, per-participant timestamp order
    /// and every frame's structure.
    pub fn validate(&self) -> Result<(), PoseError> {
        if self.samples.is_empty() {
            return Err(PoseError::Dataset("no samples".into()));
        }
        let mut last_ts: HashMap<&str, i64> = HashMap::new();
        for (i, s) in self.samples.iter().enumerate() {
            if s.labels.posture_type >= self.vocabulary.len() {
                return Err(PoseError::Dataset(format!(
                    "sample {i}: posture id {} outside vocabulary of {}",
                    s.labels.posture_type,
                    self.vocabulary.len()
                )));
            }
            ensure_valid(&s.frame)
                .map_err(|e| PoseError::Dataset(format!("sample {i}: {e}")))?;
            let pid = s.frame.participant_id.as_str();
            if let Some(&prev) = last_ts.get(pid) {
                if s.frame.timestamp_ms < prev {
                    return Err(PoseError::Dataset(format!(
                        "sample {i}: timestamp {} precedes {prev} for participant `{pid}`",
                        s.frame.timestamp_ms
                    )));
                }
            }
            last_ts.insert(pid, s.frame.timestamp_ms);
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// A simple upright frame with every landmark at a distinct position.
    pub fn upright_frame() -> LandmarkFrame {
        let landmarks = (0..LANDMARK_COUNT)
            .map(|i| {
                let f = i as f64;
                Landmark::new(0.3 + 0.01 * f, 0.1 + 0.02 * f, 0.001 * f, 0.9)
            })
            .collect();
        LandmarkFrame {
            timestamp_ms: 0,
            participant_id: "p01".into(),
            view: View::FullBody,
            landmarks,
            fsr: Some(Fsr {
                left: 0.8,
                right: 0.8,
            }),
        }
    }
}
