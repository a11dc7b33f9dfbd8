//! Training-free pose classifier: calibrate a baseline, measure per-landmark
//! deviations from it and score eight poses with linear weight tables plus
//! handle-sensor fusion.

pub mod config;
pub mod debounce;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::DEFAULT_V_MIN;
use crate::geom::Vec3;
use crate::pose::topology::{
    LANDMARK_NAMES, LEFT_SHOULDER, LEFT_WRIST, NOSE, RIGHT_SHOULDER, RIGHT_WRIST,
};
use crate::pose::{validate_frame, DerivedPoint, Fsr, LandmarkFrame, PointRef, Violation, LANDMARK_COUNT};
pub use config::{ClassRule, GeometricConfig, COMPONENT_COUNT};
pub use debounce::{run_lengths, Debouncer};

/// Points whose signed displacements feed the class scores.
pub const KEY_POINTS: [PointRef; 7] = [
    PointRef::Landmark(NOSE),
    PointRef::Landmark(LEFT_SHOULDER),
    PointRef::Landmark(RIGHT_SHOULDER),
    PointRef::Landmark(LEFT_WRIST),
    PointRef::Landmark(RIGHT_WRIST),
    PointRef::Derived(DerivedPoint::MidShoulder),
    PointRef::Derived(DerivedPoint::MidHip),
];

/// Share of calibration frames in which every key point must be visible.
pub const CALIBRATION_VISIBLE_SHARE: f64 = 0.8;
pub const BASELINE_EPSILON: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum GeometricError {
    #[error("calibration needs at least {needed} frames, got {got}")]
    CalibrationInsufficient { needed: usize, got: usize },
    #[error("calibration occluded: {landmark} visible in only {visible} of {total} frames")]
    CalibrationOccluded {
        landmark: String,
        visible: usize,
        total: usize,
    },
    #[error("calibrated torso length {0} is degenerate")]
    DegenerateBaseline(f64),
    #[error("not calibrated")]
    NotCalibrated,
    #[error("invalid frame: {}", join_violations(.0))]
    InvalidFrame(Vec<Violation>),
    #[error("frame {index}: {source}")]
    AtFrame {
        index: usize,
        #[source]
        source: Box<GeometricError>,
    },
    #[error("geometric config: {0}")]
    Config(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometricPose {
    StandingStill,
    FallForward,
    FallBackward,
    FallLeft,
    FallRight,
    LiftingLeftHand,
    LiftingRightHand,
    Sitting,
}

impl GeometricPose {
    pub const ALL: [GeometricPose; 8] = [
        GeometricPose::StandingStill,
        GeometricPose::FallForward,
        GeometricPose::FallBackward,
        GeometricPose::FallLeft,
        GeometricPose::FallRight,
        GeometricPose::LiftingLeftHand,
        GeometricPose::LiftingRightHand,
        GeometricPose::Sitting,
    ];

    /// Poses with a score; `standing_still` is the fallback.
    pub const SCORED: [GeometricPose; 7] = [
        GeometricPose::FallForward,
        GeometricPose::FallBackward,
        GeometricPose::FallLeft,
        GeometricPose::FallRight,
        GeometricPose::LiftingLeftHand,
        GeometricPose::LiftingRightHand,
        GeometricPose::Sitting,
    ];

    /// Tie-break order, strongest first.
    pub const PRIORITY: [GeometricPose; 7] = [
        GeometricPose::Sitting,
        GeometricPose::LiftingLeftHand,
        GeometricPose::LiftingRightHand,
        GeometricPose::FallForward,
        GeometricPose::FallBackward,
        GeometricPose::FallLeft,
        GeometricPose::FallRight,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn scored_index(self) -> Option<usize> {
        self.index().checked_sub(1)
    }

    pub fn name(self) -> &'static str {
        match self {
            GeometricPose::StandingStill => "standing_still",
            GeometricPose::FallForward => "fall_forward",
            GeometricPose::FallBackward => "fall_backward",
            GeometricPose::FallLeft => "fall_left",
            GeometricPose::FallRight => "fall_right",
            GeometricPose::LiftingLeftHand => "lifting_left_hand",
            GeometricPose::LiftingRightHand => "lifting_right_hand",
            GeometricPose::Sitting => "sitting",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Default-vocabulary posture used to render this pose.
    pub fn template_class(self) -> &'static str {
        match self {
            GeometricPose::StandingStill => "standing",
            GeometricPose::FallForward => "lean_forward",
            GeometricPose::FallBackward => "lean_backward",
            GeometricPose::FallLeft => "lean_left",
            GeometricPose::FallRight => "lean_right",
            GeometricPose::LiftingLeftHand => "raise_left_arm",
            GeometricPose::LiftingRightHand => "raise_right_arm",
            GeometricPose::Sitting => "sitting",
        }
    }

    /// Everything except standing still counts as bad posture.
    pub fn is_bad_posture(self) -> bool {
        !matches!(self, GeometricPose::StandingStill | GeometricPose::Sitting)
    }
}

impl fmt::Display for GeometricPose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationBaseline {
    pub positions: [Vec3; LANDMARK_COUNT],
    /// Whether the landmark was visible in at least one calibration frame.
    pub observed: [bool; LANDMARK_COUNT],
    pub torso_length: f64,
    pub frame_count: usize,
    /// Timestamp of the last calibration frame.
    pub created_at_ms: i64,
}

impl CalibrationBaseline {
    pub fn point(&self, p: PointRef) -> Vec3 {
        match p {
            PointRef::Landmark(i) => self.positions[i],
            PointRef::Derived(d) => {
                let (a, b) = d.constituents();
                self.positions[a].midpoint(self.positions[b])
            }
        }
    }

    fn point_observed(&self, p: PointRef) -> bool {
        p.constituents().iter().all(|&i| self.observed[i])
    }
}

fn frame_error(v: Vec<Violation>) -> GeometricError {
    GeometricError::InvalidFrame(v)
}

/// Averages calibration frames into a baseline.
pub fn calibrate(
    frames: &[LandmarkFrame],
    config: &GeometricConfig,
) -> Result<CalibrationBaseline, GeometricError> {
    if frames.len() < config.n_cal_min {
        return Err(GeometricError::CalibrationInsufficient {
            needed: config.n_cal_min,
            got: frames.len(),
        });
    }
    for (index, f) in frames.iter().enumerate() {
        let v = validate_frame(f);
        if !v.is_empty() {
            return Err(GeometricError::AtFrame {
                index,
                source: Box::new(frame_error(v)),
            });
        }
    }
    for key in KEY_POINTS {
        for i in key.constituents() {
            let visible = frames
                .iter()
                .filter(|f| f.landmarks[i].visibility >= DEFAULT_V_MIN)
                .count();
            if (visible as f64) < CALIBRATION_VISIBLE_SHARE * frames.len() as f64 {
                return Err(GeometricError::CalibrationOccluded {
                    landmark: LANDMARK_NAMES[i].to_string(),
                    visible,
                    total: frames.len(),
                });
            }
        }
    }

    let mut positions = [Vec3::ZERO; LANDMARK_COUNT];
    let mut observed = [false; LANDMARK_COUNT];
    // incremental means, exact when all inputs are equal
    let mean = |points: &mut dyn Iterator<Item = Vec3>| -> Option<Vec3> {
        let mut m: Option<Vec3> = None;
        for (k, p) in points.enumerate() {
            m = Some(match m {
                None => p,
                Some(m) => m + (p - m) / (k + 1) as f64,
            });
        }
        m
    };
    for i in 0..LANDMARK_COUNT {
        let mut visible = frames
            .iter()
            .map(|f| &f.landmarks[i])
            .filter(|l| l.visibility >= DEFAULT_V_MIN)
            .map(|l| l.position());
        match mean(&mut visible) {
            Some(m) => {
                positions[i] = m;
                observed[i] = true;
            }
            None => {
                let mut all = frames.iter().map(|f| f.landmarks[i].position());
                positions[i] = mean(&mut all).expect("at least one frame");
            }
        }
    }
    let ms = positions[LEFT_SHOULDER].midpoint(positions[RIGHT_SHOULDER]);
    let (lh, rh) = DerivedPoint::MidHip.constituents();
    let torso_length = ms.distance(positions[lh].midpoint(positions[rh]));
    if !(torso_length > BASELINE_EPSILON) {
        return Err(GeometricError::DegenerateBaseline(torso_length));
    }
    Ok(CalibrationBaseline {
        positions,
        observed,
        torso_length,
        frame_count: frames.len(),
        created_at_ms: frames.last().map_or(0, |f| f.timestamp_ms),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationVector {
    /// Torso-normalized distance of each landmark from its baseline position.
    pub distances: [f64; LANDMARK_COUNT],
    /// Landmarks with no usable deviation (reported as 0).
    pub flagged: [bool; LANDMARK_COUNT],
    /// `(Δx, Δy, Δz)` per key point, torso-normalized, in `KEY_POINTS` order.
    pub components: [Vec3; KEY_POINTS.len()],
    pub key_flagged: [bool; KEY_POINTS.len()],
}

impl DeviationVector {
    pub fn zero() -> Self {
        DeviationVector {
            distances: [0.0; LANDMARK_COUNT],
            flagged: [false; LANDMARK_COUNT],
            components: [Vec3::ZERO; KEY_POINTS.len()],
            key_flagged: [false; KEY_POINTS.len()],
        }
    }

    /// Signed components flattened as `[p0.dx, p0.dy, p0.dz, p1.dx, ...]`.
    pub fn flat(&self) -> [f64; COMPONENT_COUNT] {
        let mut out = [0.0; COMPONENT_COUNT];
        for (k, c) in self.components.iter().enumerate() {
            out[3 * k..3 * k + 3].copy_from_slice(&c.to_array());
        }
        out
    }
}

pub fn deviation(
    frame: &LandmarkFrame,
    baseline: &CalibrationBaseline,
) -> Result<DeviationVector, GeometricError> {
    let v = validate_frame(frame);
    if !v.is_empty() {
        return Err(frame_error(v));
    }
    let scale = baseline.torso_length;
    let mut dev = DeviationVector::zero();
    for i in 0..LANDMARK_COUNT {
        let lm = &frame.landmarks[i];
        if lm.visibility >= DEFAULT_V_MIN && baseline.observed[i] {
            dev.distances[i] = lm.position().distance(baseline.positions[i]) / scale;
        } else {
            dev.flagged[i] = true;
        }
    }
    for (k, key) in KEY_POINTS.into_iter().enumerate() {
        if frame.point_visibility(key) >= DEFAULT_V_MIN && baseline.point_observed(key) {
            let p = frame.point(key).expect("validated frame has every landmark");
            dev.components[k] = (p - baseline.point(key)) / scale;
        } else {
            dev.key_flagged[k] = true;
        }
    }
    Ok(dev)
}

/// Per-pose scores indexed by [`GeometricPose::index`]; `standing_still` is always 0.
pub type PoseScores = [f64; 8];

pub fn scores(dev: &DeviationVector, fsr: Option<Fsr>, config: &GeometricConfig) -> PoseScores {
    let x = dev.flat();
    let mut out = [0.0; 8];
    for (pose, rule) in GeometricPose::SCORED.iter().zip(&config.rules) {
        let mut s: f64 = rule.weights.iter().zip(&x).map(|(w, v)| w * v).sum();
        let side = match pose {
            GeometricPose::LiftingLeftHand => fsr.map(|f| f.left),
            GeometricPose::LiftingRightHand => fsr.map(|f| f.right),
            _ => None,
        };
        if let Some(reading) = side {
            s += config.fsr_weight * (config.grip_min - reading).max(0.0);
        }
        out[pose.index()] = s;
    }
    out
}

/// Highest-scoring pose among those above their threshold, else `standing_still`.
pub fn classify_geometric(
    dev: &DeviationVector,
    fsr: Option<Fsr>,
    config: &GeometricConfig,
) -> (GeometricPose, PoseScores) {
    let s = scores(dev, fsr, config);
    (select(&s, config), s)
}

fn select(s: &PoseScores, config: &GeometricConfig) -> GeometricPose {
    let mut best: Option<(GeometricPose, f64)> = None;
    for pose in GeometricPose::PRIORITY {
        let score = s[pose.index()];
        let threshold = config.rule(pose).expect("scored pose").threshold;
        if score > threshold && best.is_none_or(|(_, b)| score > b) {
            best = Some((pose, score));
        }
    }
    best.map_or(GeometricPose::StandingStill, |(p, _)| p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamDecision {
    pub timestamp_ms: i64,
    pub raw: GeometricPose,
    pub pose: GeometricPose,
    pub scores: PoseScores,
}

/// Per-stream state: baseline plus debouncer.
#[derive(Debug, Clone)]
pub struct GeometricTracker {
    config: GeometricConfig,
    baseline: Option<CalibrationBaseline>,
    debouncer: Debouncer<GeometricPose>,
}

impl GeometricTracker {
    pub fn new(config: GeometricConfig) -> Self {
        let debouncer = Debouncer::new(config.debounce_frames);
        GeometricTracker {
            config,
            baseline: None,
            debouncer,
        }
    }

    pub fn with_baseline(config: GeometricConfig, baseline: CalibrationBaseline) -> Self {
        let mut t = Self::new(config);
        t.baseline = Some(baseline);
        t
    }

    pub fn config(&self) -> &GeometricConfig {
        &self.config
    }

    pub fn baseline(&self) -> Option<&CalibrationBaseline> {
        self.baseline.as_ref()
    }

    pub fn set_baseline(&mut self, baseline: CalibrationBaseline) {
        self.baseline = Some(baseline);
        self.debouncer.reset();
    }

    pub fn calibrate(&mut self, frames: &[LandmarkFrame]) -> Result<&CalibrationBaseline, GeometricError> {
        let b = calibrate(frames, &self.config)?;
        self.set_baseline(b);
        Ok(self.baseline.as_ref().expect("just set"))
    }

    pub fn reset(&mut self) {
        self.baseline = None;
        self.debouncer.reset();
    }

    pub fn push(&mut self, frame: &LandmarkFrame) -> Result<StreamDecision, GeometricError> {
        let baseline = self.baseline.as_ref().ok_or(GeometricError::NotCalibrated)?;
        let dev = deviation(frame, baseline)?;
        let (raw, scores) = classify_geometric(&dev, frame.fsr, &self.config);
        let pose = self.debouncer.push(raw);
        Ok(StreamDecision {
            timestamp_ms: frame.timestamp_ms,
            raw,
            pose,
            scores,
        })
    }
}

/// Classifies a stream frame by frame with debouncing.
pub fn classify_stream_geometric(
    frames: &[LandmarkFrame],
    baseline: Option<&CalibrationBaseline>,
    config: &GeometricConfig,
) -> Result<Vec<StreamDecision>, GeometricError> {
    let baseline = baseline.ok_or(GeometricError::NotCalibrated)?;
    let mut tracker = GeometricTracker::with_baseline(config.clone(), baseline.clone());
    frames
        .iter()
        .enumerate()
        .map(|(index, f)| {
            tracker.push(f).map_err(|e| GeometricError::AtFrame {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

/// `(timestamp, new pose)` wherever the debounced pose changes, starting with the first frame.
pub fn transitions(decisions: &[StreamDecision]) -> Vec<(i64, GeometricPose)> {
    decisions
        .iter()
        .enumerate()
        .filter(|(i, d)| *i == 0 || decisions[i - 1].pose != d.pose)
        .map(|(_, d)| (d.timestamp_ms, d.pose))
        .collect()
}
