//! Frame-local engineered features: torso-normalized joint distances and
//! joint/segment angles. See [`catalogue`] for the fixed 48-entry layout.

pub mod catalogue;
pub mod table;

use std::f64::consts::PI;

use thiserror::Error;

use crate::geom::Vec3;
use crate::matrix::FeatureMatrix;
use crate::pose::{validate_frame, Dataset, DerivedPoint, LandmarkFrame, PointRef, Violation};
pub use catalogue::{
    Direction, FeatureDef, FeatureEntry, FixedAxis, Plane, CATALOGUE, DISTANCE_COUNT,
    FEATURE_COUNT,
};
pub use table::{label_columns, LabelColumns};

pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_V_MIN: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("invalid frame: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Structural(Vec<Violation>),
    #[error("degenerate pose: torso length {0} below tolerance")]
    DegeneratePose(f64),
    #[error("degenerate angle: arm length {0} below tolerance")]
    DegenerateAngle(f64),
    #[error("feature spec: {0}")]
    Spec(String),
}

/// Which matrix layout a model consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// The 48 engineered features.
    Features,
    /// The 99 flattened landmark coordinates (x, y, z per landmark).
    RawLandmarks,
}

impl FeatureMode {
    pub fn n_cols(self) -> usize {
        match self {
            FeatureMode::Features => FEATURE_COUNT,
            FeatureMode::RawLandmarks => 3 * crate::pose::LANDMARK_COUNT,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpec {
    pub entries: Vec<FeatureEntry>,
    /// Landmarks below this visibility make every feature reading them invalid.
    pub v_min: f64,
    pub epsilon: f64,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec {
            entries: CATALOGUE.to_vec(),
            v_min: DEFAULT_V_MIN,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl FeatureSpec {
    pub fn with_v_min(v_min: f64) -> Self {
        FeatureSpec {
            v_min,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.entries.len() != FEATURE_COUNT {
            return Err(FeatureError::Spec(format!(
                "catalogue has {} entries, expected {FEATURE_COUNT}",
                self.entries.len()
            )));
        }
        for e in &self.entries {
            for p in e.def.points() {
                if p.constituents().iter().any(|&i| i >= crate::pose::LANDMARK_COUNT) {
                    return Err(FeatureError::Spec(format!("{}: unknown landmark", e.name)));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.v_min) {
            return Err(FeatureError::Spec(format!("v_min {} outside [0, 1]", self.v_min)));
        }
        Ok(())
    }
}

/// 48 values plus validity flags; invalid entries hold 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; FEATURE_COUNT],
    pub valid: [bool; FEATURE_COUNT],
}

impl FeatureVector {
    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }
}

/// Distance between shoulder and hip midpoints.
pub fn torso_length(frame: &LandmarkFrame, epsilon: f64) -> Result<f64, FeatureError> {
    let shoulder = crate::pose::derived_point(frame, DerivedPoint::MidShoulder)
        .map_err(|e| FeatureError::Spec(e.to_string()))?;
    let hip = crate::pose::derived_point(frame, DerivedPoint::MidHip)
        .map_err(|e| FeatureError::Spec(e.to_string()))?;
    let len = shoulder.distance(hip);
    if len < epsilon {
        Err(FeatureError::DegeneratePose(len))
    } else {
        Ok(len)
    }
}

fn angle_between(u: Vec3, v: Vec3, epsilon: f64) -> Result<f64, FeatureError> {
    let (nu, nv) = (u.norm(), v.norm());
    if nu <= epsilon {
        return Err(FeatureError::DegenerateAngle(nu));
    }
    if nv <= epsilon {
        return Err(FeatureError::DegenerateAngle(nv));
    }
    Ok(u.cross(v).norm().atan2(u.dot(v)))
}

/// Interior angle at `b` formed by `a` and `c`, in [0, pi].
pub fn angle(a: Vec3, b: Vec3, c: Vec3) -> Result<f64, FeatureError> {
    angle_with_epsilon(a, b, c, DEFAULT_EPSILON)
}

pub fn angle_with_epsilon(a: Vec3, b: Vec3, c: Vec3, epsilon: f64) -> Result<f64, FeatureError> {
    angle_between(a - b, c - b, epsilon)
}

/// Sine below which two directions count as collinear in [`signed_angle_2d`].
pub const COLLINEAR_SINE: f64 = 1e-12;

/// Counter-clockwise angle from `u` to `v`, in (-pi, pi].
pub fn signed_angle_2d(u: [f64; 2], v: [f64; 2]) -> Result<f64, FeatureError> {
    signed_angle_2d_with_epsilon(u, v, DEFAULT_EPSILON)
}

pub fn signed_angle_2d_with_epsilon(
    u: [f64; 2],
    v: [f64; 2],
    epsilon: f64,
) -> Result<f64, FeatureError> {
    let nu = u[0].hypot(u[1]);
    let nv = v[0].hypot(v[1]);
    if nu <= epsilon {
        return Err(FeatureError::DegenerateAngle(nu));
    }
    if nv <= epsilon {
        return Err(FeatureError::DegenerateAngle(nv));
    }
    let mut cross = u[0] * v[1] - u[1] * v[0];
    let dot = u[0] * v[0] + u[1] * v[1];
    // Collinear up to rounding: keep anti-parallel pairs at +pi rather than
    // letting the sign of a rounding residue pick -pi.
    if cross.abs() <= COLLINEAR_SINE * nu * nv {
        cross = 0.0;
    }
    let a = cross.atan2(dot);
    // atan2(-0, negative) is -pi
    Ok(if a <= -PI { PI } else { a })
}

fn project(v: Vec3, plane: Plane) -> [f64; 2] {
    match plane {
        Plane::Xy => [v.x, v.y],
        Plane::Zy => [v.z, v.y],
        Plane::Xz => [v.x, v.z],
    }
}

fn fixed_vector(axis: FixedAxis) -> Vec3 {
    match axis {
        FixedAxis::Up => Vec3::new(0.0, -1.0, 0.0),
        FixedAxis::ImageLeft => Vec3::new(-1.0, 0.0, 0.0),
    }
}

struct Points<'a> {
    frame: &'a LandmarkFrame,
    mid: [Vec3; 4],
}

impl Points<'_> {
    fn get(&self, p: PointRef) -> Vec3 {
        match p {
            PointRef::Landmark(i) => self.frame.landmarks[i].position(),
            PointRef::Derived(d) => self.mid[d as usize],
        }
    }

    fn direction(&self, d: Direction) -> Vec3 {
        match d {
            Direction::Fixed(axis) => fixed_vector(axis),
            Direction::Segment { from, to } => self.get(to) - self.get(from),
        }
    }
}

fn evaluate(
    def: &FeatureDef,
    pts: &Points<'_>,
    torso: f64,
    epsilon: f64,
) -> Result<f64, FeatureError> {
    match *def {
        FeatureDef::Distance { a, b } => Ok(pts.get(a).distance(pts.get(b)) / torso),
        FeatureDef::JointAngle { a, vertex, c } => {
            angle_with_epsilon(pts.get(a), pts.get(vertex), pts.get(c), epsilon)
        }
        FeatureDef::Inclination { from, to } => angle_between(
            pts.get(to) - pts.get(from),
            fixed_vector(FixedAxis::Up),
            epsilon,
        ),
        FeatureDef::SignedAngle {
            reference,
            target,
            plane,
        } => signed_angle_2d_with_epsilon(
            project(pts.direction(reference), plane),
            project(pts.direction(target), plane),
            epsilon,
        ),
    }
}

/// Computes the feature vector of one frame.
///
/// A feature is valid when every landmark it reads has visibility at least
/// `spec.v_min` and its geometry is non-degenerate. Distance features also
/// need a visible torso. A visible torso shorter than `spec.epsilon` fails the
/// whole frame.
pub fn extract_features(
    frame: &LandmarkFrame,
    spec: &FeatureSpec,
) -> Result<FeatureVector, FeatureError> {
    let violations = validate_frame(frame);
    if !violations.is_empty() {
        return Err(FeatureError::Structural(violations));
    }
    let mut mid = [Vec3::ZERO; 4];
    for d in DerivedPoint::ALL {
        let (a, b) = d.constituents();
        mid[d as usize] = frame.landmarks[a]
            .position()
            .midpoint(frame.landmarks[b].position());
    }
    let pts = Points { frame, mid };
    let visible = |p: PointRef| frame.point_visibility(p) >= spec.v_min;

    let torso_visible = visible(DerivedPoint::MidShoulder.into()) && visible(DerivedPoint::MidHip.into());
    let torso = if torso_visible {
        let t = mid[DerivedPoint::MidShoulder as usize].distance(mid[DerivedPoint::MidHip as usize]);
        if t < spec.epsilon {
            return Err(FeatureError::DegeneratePose(t));
        }
        Some(t)
    } else {
        None
    };

    let mut out = FeatureVector {
        values: [0.0; FEATURE_COUNT],
        valid: [false; FEATURE_COUNT],
    };
    for (k, entry) in spec.entries.iter().enumerate().take(FEATURE_COUNT) {
        if !entry.def.points().into_iter().all(visible) {
            continue;
        }
        let scale = match (entry.def.is_distance(), torso) {
            (true, None) => continue,
            (true, Some(t)) => t,
            (false, _) => 1.0,
        };
        if let Ok(v) = evaluate(&entry.def, &pts, scale, spec.epsilon) {
            out.values[k] = v;
            out.valid[k] = true;
        }
    }
    Ok(out)
}

#[derive(Debug, Error)]
#[error("{} of {total} frames failed extraction (first: sample {}: {})", failures.len(), failures[0].0, failures[0].1)]
pub struct BatchExtractError {
    pub total: usize,
    pub failures: Vec<(usize, FeatureError)>,
}

/// Feature matrix of a whole dataset, one row per sample in order.
pub fn batch_extract(dataset: &Dataset, spec: &FeatureSpec) -> Result<FeatureMatrix, BatchExtractError> {
    extract_frames(dataset.samples.iter().map(|s| &s.frame), spec)
}

pub fn extract_frames<'a>(
    frames: impl IntoIterator<Item = &'a LandmarkFrame>,
    spec: &FeatureSpec,
) -> Result<FeatureMatrix, BatchExtractError> {
    let mut m = FeatureMatrix::new(FEATURE_COUNT);
    let mut failures = Vec::new();
    let mut total = 0;
    for (i, frame) in frames.into_iter().enumerate() {
        total += 1;
        match extract_features(frame, spec) {
            Ok(fv) => m
                .push_row(&fv.values, &fv.valid)
                .expect("feature vectors have a fixed width"),
            Err(e) => failures.push((i, e)),
        }
    }
    if failures.is_empty() {
        Ok(m)
    } else {
        Err(BatchExtractError { total, failures })
    }
}

/// Flattened (x, y, z) coordinates of a frame; landmarks below `v_min` are missing.
pub fn raw_landmark_row(frame: &LandmarkFrame, v_min: f64) -> (Vec<f64>, Vec<bool>) {
    let mut values = Vec::with_capacity(99);
    let mut valid = Vec::with_capacity(99);
    for lm in &frame.landmarks {
        let ok = lm.visibility >= v_min;
        for v in [lm.x, lm.y, lm.z] {
            values.push(if ok { v } else { 0.0 });
            valid.push(ok);
        }
    }
    (values, valid)
}

pub fn raw_landmark_matrix(dataset: &Dataset, v_min: f64) -> Result<FeatureMatrix, BatchExtractError> {
    let mut m = FeatureMatrix::new(FeatureMode::RawLandmarks.n_cols());
    let mut failures = Vec::new();
    for (i, s) in dataset.samples.iter().enumerate() {
        let violations = validate_frame(&s.frame);
        if !violations.is_empty() {
            failures.push((i, FeatureError::Structural(violations)));
            continue;
        }
        let (values, valid) = raw_landmark_row(&s.frame, v_min);
        m.push_row(&values, &valid).expect("frames were validated");
    }
    if failures.is_empty() {
        Ok(m)
    } else {
        Err(BatchExtractError {
            total: dataset.len(),
            failures,
        })
    }
}

/// Builds the model input row for a single frame in the given mode.
pub fn frame_row(
    frame: &LandmarkFrame,
    mode: FeatureMode,
    spec: &FeatureSpec,
) -> Result<(Vec<f64>, Vec<bool>), FeatureError> {
    match mode {
        FeatureMode::Features => {
            let fv = extract_features(frame, spec)?;
            Ok((fv.values.to_vec(), fv.valid.to_vec()))
        }
        FeatureMode::RawLandmarks => {
            let violations = validate_frame(frame);
            if !violations.is_empty() {
                return Err(FeatureError::Structural(violations));
            }
            Ok(raw_landmark_row(frame, spec.v_min))
        }
    }
}

pub fn dataset_matrix(
    dataset: &Dataset,
    mode: FeatureMode,
    spec: &FeatureSpec,
) -> Result<FeatureMatrix, BatchExtractError> {
    match mode {
        FeatureMode::Features => batch_extract(dataset, spec),
        FeatureMode::RawLandmarks => raw_landmark_matrix(dataset, spec.v_min),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::test_support::upright_frame;
    use crate::pose::topology::*;
    use std::f64::consts::FRAC_PI_2;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    fn set(frame: &mut LandmarkFrame, i: usize, p: Vec3) {
        frame.landmarks[i] = frame.landmarks[i].with_position(p);
    }

    #[test]
    fn torso_length_examples() {
        let mut f = upright_frame();
        for (i, p) in [
            (LEFT_SHOULDER, v(0.0, 0.0, 0.0)),
            (RIGHT_SHOULDER, v(0.0, 0.0, 0.0)),
            (LEFT_HIP, v(0.0, 0.5, 0.0)),
            (RIGHT_HIP, v(0.0, 0.5, 0.0)),
        ] {
            set(&mut f, i, p);
        }
        assert_eq!(torso_length(&f, DEFAULT_EPSILON).unwrap(), 0.5);

        set(&mut f, LEFT_HIP, v(0.3, 0.4, 0.0));
        set(&mut f, RIGHT_HIP, v(0.3, 0.4, 0.0));
        assert!((torso_length(&f, DEFAULT_EPSILON).unwrap() - 0.5).abs() < 1e-15);

        set(&mut f, LEFT_HIP, v(0.0, 0.0, 0.0));
        set(&mut f, RIGHT_HIP, v(0.0, 0.0, 0.0));
        assert!(matches!(
            torso_length(&f, DEFAULT_EPSILON),
            Err(FeatureError::DegeneratePose(_))
        ));
        assert!(matches!(
            extract_features(&f, &FeatureSpec::default()),
            Err(FeatureError::DegeneratePose(_))
        ));
    }

    #[test]
    fn angle_examples() {
        let o = Vec3::ZERO;
        assert!((angle(v(1.0, 0.0, 0.0), o, v(0.0, 1.0, 0.0)).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((angle(v(1.0, 0.0, 0.0), o, v(-1.0, 0.0, 0.0)).unwrap() - PI).abs() < 1e-15);
        assert_eq!(angle(v(1.0, 0.0, 0.0), o, v(1.0, 0.0, 0.0)).unwrap(), 0.0);
        assert!(matches!(
            angle(o, o, v(1.0, 0.0, 0.0)),
            Err(FeatureError::DegenerateAngle(_))
        ));
    }

    #[test]
    fn signed_angle_examples() {
        assert!((signed_angle_2d([1.0, 0.0], [0.0, 1.0]).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(signed_angle_2d([0.2, 0.7], [0.2, 0.7]).unwrap(), 0.0);
        assert!((signed_angle_2d([1.0, 0.0], [0.0, -1.0]).unwrap() + FRAC_PI_2).abs() < 1e-15);
        // opposite vectors land on +pi, never -pi
        assert_eq!(signed_angle_2d([1.0, 0.0], [-1.0, -0.0]).unwrap(), PI);
        assert_eq!(signed_angle_2d([0.3, 0.6], [-0.3, -0.6 - 1e-17]).unwrap(), PI);
        assert_eq!(signed_angle_2d([1.0, 0.0], [-1.0, -1e-17]).unwrap(), PI);
        assert_eq!(signed_angle_2d([1.0, -0.0], [-1.0, 0.0]).unwrap(), PI);
        assert!(signed_angle_2d([0.0, 0.0], [1.0, 0.0]).is_err());
    }

    #[test]
    fn invisible_legs_only_invalidate_leg_features() {
        let mut f = upright_frame();
        for i in LEG_LANDMARKS {
            f.landmarks[i].visibility = 0.1;
        }
        let fv = extract_features(&f, &FeatureSpec::default()).unwrap();
        for (k, e) in CATALOGUE.iter().enumerate() {
            let uses_legs = e
                .def
                .points()
                .iter()
                .any(|p| p.constituents().iter().any(|i| LEG_LANDMARKS.contains(i)));
            assert_eq!(fv.valid[k], !uses_legs, "{}", e.name);
            if !fv.valid[k] {
                assert_eq!(fv.values[k], 0.0);
            }
        }
    }

    #[test]
    fn batch_reports_failing_indices() {
        let mut ds = Dataset::new(crate::pose::LabelVocabulary::default_postures());
        assert_eq!(batch_extract(&ds, &FeatureSpec::default()).unwrap().n_rows(), 0);

        let labels = crate::pose::LabelRecord {
            walker_choice: true,
            initial_position: crate::pose::InitialPosition::Standing,
            posture_type: 0,
            risk_label: None,
        };
        let good = upright_frame();
        let mut degenerate = upright_frame();
        for i in [LEFT_SHOULDER, RIGHT_SHOULDER, LEFT_HIP, RIGHT_HIP] {
            set(&mut degenerate, i, v(0.5, 0.5, 0.0));
        }
        for frame in [good.clone(), good.clone()] {
            ds.samples.push(crate::pose::Sample { frame, labels });
        }
        let m = batch_extract(&ds, &FeatureSpec::default()).unwrap();
        assert_eq!(m.row(0), m.row(1));

        ds.samples.push(crate::pose::Sample {
            frame: degenerate,
            labels,
        });
        let err = batch_extract(&ds, &FeatureSpec::default()).unwrap_err();
        assert_eq!(err.failures.len(), 1);
        assert_eq!(err.failures[0].0, 2);
        assert!(err.to_string().contains("sample 2"));
    }

    #[test]
    fn structural_errors_match_validation() {
        let mut f = upright_frame();
        f.landmarks.pop();
        assert!(matches!(
            extract_features(&f, &FeatureSpec::default()),
            Err(FeatureError::Structural(_))
        ));
    }

    fn grid_frame(cells: &[(i32, i32, i32, bool)]) -> LandmarkFrame {
        let mut f = upright_frame();
        for (lm, &(x, y, z, visible)) in f.landmarks.iter_mut().zip(cells) {
            *lm = crate::pose::Landmark::new(
                x as f64 / 1024.0,
                y as f64 / 1024.0,
                z as f64 / 1024.0,
                if visible { 0.9 } else { 0.2 },
            );
        }
        f
    }

    proptest::proptest! {
        #[test]
        fn translation_is_exact_on_a_dyadic_grid(
            cells in proptest::collection::vec((0i32..1024, 0i32..1024, -256i32..256, proptest::bool::weighted(0.9)), 33),
            t in (-256i32..256, -256i32..256, -256i32..256),
        ) {
            let f = grid_frame(&cells);
            let offset = v(t.0 as f64 / 1024.0, t.1 as f64 / 1024.0, t.2 as f64 / 1024.0);
            let spec = FeatureSpec::default();
            proptest::prop_assert_eq!(extract_features(&f, &spec), extract_features(&f.translated(offset), &spec));
        }

        #[test]
        fn scaling_changes_features_by_rounding_only(
            cells in proptest::collection::vec((0i32..1024, 0i32..1024, -256i32..256, proptest::bool::weighted(0.9)), 33),
            factor in 0.5f64..2.0,
        ) {
            let f = grid_frame(&cells);
            let spec = FeatureSpec::default();
            let center = f.position(0).unwrap();
            match (extract_features(&f, &spec), extract_features(&f.scaled_about(center, factor), &spec)) {
                (Ok(a), Ok(b)) => {
                    proptest::prop_assert_eq!(a.valid, b.valid);
                    for (x, y) in a.values.iter().zip(b.values) {
                        proptest::prop_assert!((x - y).abs() <= 1e-9, "{} vs {}", x, y);
                    }
                }
                (a, b) => proptest::prop_assert_eq!(a.is_err(), b.is_err()),
            }
        }
    }
}
