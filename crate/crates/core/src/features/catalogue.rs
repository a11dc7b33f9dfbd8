//! The 48-entry feature catalogue. Indices are stable: f01 is entry 0.
//!
//! Entries 1-24 are torso-normalized distances, 25-48 are angles in radians.
//! Image "up" is the -y direction. Signed angles are measured
//! counter-clockwise in the named projection plane.

use crate::pose::topology::*;
use crate::pose::{DerivedPoint, PointRef};

/// A fixed direction in image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedAxis {
    /// (0, -1, 0)
    Up,
    /// (-1, 0, 0); a camera-facing subject's left-ear to right-ear line.
    ImageLeft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Fixed(FixedAxis),
    Segment { from: PointRef, to: PointRef },
}

/// Projection plane for signed angles, as the ordered pair of 2-D components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Plane {
    /// (x, y)
    Xy,
    /// (z, y)
    Zy,
    /// (x, z)
    Xz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureDef {
    /// Euclidean distance divided by torso length.
    Distance { a: PointRef, b: PointRef },
    /// Interior angle at `vertex`, in [0, pi].
    JointAngle {
        a: PointRef,
        vertex: PointRef,
        c: PointRef,
    },
    /// Unsigned angle between a segment and image up, in [0, pi].
    Inclination { from: PointRef, to: PointRef },
    /// Signed angle from `reference` to `target` in a plane, in (-pi, pi].
    SignedAngle {
        reference: Direction,
        target: Direction,
        plane: Plane,
    },
}

impl FeatureDef {
    pub fn is_distance(&self) -> bool {
        matches!(self, FeatureDef::Distance { .. })
    }

    pub fn is_signed(&self) -> bool {
        matches!(self, FeatureDef::SignedAngle { .. })
    }

    /// Every point the feature reads.
    pub fn points(&self) -> Vec<PointRef> {
        fn dir(d: &Direction, out: &mut Vec<PointRef>) {
            if let Direction::Segment { from, to } = d {
                out.push(*from);
                out.push(*to);
            }
        }
        let mut out = Vec::new();
        match self {
            FeatureDef::Distance { a, b } => out.extend([*a, *b]),
            FeatureDef::JointAngle { a, vertex, c } => out.extend([*a, *vertex, *c]),
            FeatureDef::Inclination { from, to } => out.extend([*from, *to]),
            FeatureDef::SignedAngle {
                reference, target, ..
            } => {
                dir(reference, &mut out);
                dir(target, &mut out);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureEntry {
    pub name: &'static str,
    pub def: FeatureDef,
}

const fn lm(i: usize) -> PointRef {
    PointRef::Landmark(i)
}

const MID_SHOULDER: PointRef = PointRef::Derived(DerivedPoint::MidShoulder);
const MID_HIP: PointRef = PointRef::Derived(DerivedPoint::MidHip);
const MID_EAR: PointRef = PointRef::Derived(DerivedPoint::MidEar);
const MID_ANKLE: PointRef = PointRef::Derived(DerivedPoint::MidAnkle);

const fn dist(name: &'static str, a: PointRef, b: PointRef) -> FeatureEntry {
    FeatureEntry {
        name,
        def: FeatureDef::Distance { a, b },
    }
}

const fn joint(name: &'static str, a: usize, vertex: usize, c: usize) -> FeatureEntry {
    FeatureEntry {
        name,
        def: FeatureDef::JointAngle {
            a: lm(a),
            vertex: lm(vertex),
            c: lm(c),
        },
    }
}

const fn incl(name: &'static str, from: PointRef, to: PointRef) -> FeatureEntry {
    FeatureEntry {
        name,
        def: FeatureDef::Inclination { from, to },
    }
}

const fn signed(
    name: &'static str,
    reference: Direction,
    target: Direction,
    plane: Plane,
) -> FeatureEntry {
    FeatureEntry {
        name,
        def: FeatureDef::SignedAngle {
            reference,
            target,
            plane,
        },
    }
}

const fn seg(from: PointRef, to: PointRef) -> Direction {
    Direction::Segment { from, to }
}

pub const FEATURE_COUNT: usize = 48;
pub const DISTANCE_COUNT: usize = 24;

pub const CATALOGUE: [FeatureEntry; FEATURE_COUNT] = [
    dist("wrist_l_shoulder_l", lm(LEFT_WRIST), lm(LEFT_SHOULDER)),
    dist("wrist_r_shoulder_r", lm(RIGHT_WRIST), lm(RIGHT_SHOULDER)),
    dist("wrist_l_hip_l", lm(LEFT_WRIST), lm(LEFT_HIP)),
    dist("wrist_r_hip_r", lm(RIGHT_WRIST), lm(RIGHT_HIP)),
    dist("wrist_l_wrist_r", lm(LEFT_WRIST), lm(RIGHT_WRIST)),
    dist("elbow_l_hip_l", lm(LEFT_ELBOW), lm(LEFT_HIP)),
    dist("elbow_r_hip_r", lm(RIGHT_ELBOW), lm(RIGHT_HIP)),
    dist("nose_mid_shoulder", lm(NOSE), MID_SHOULDER),
    dist("nose_mid_hip", lm(NOSE), MID_HIP),
    dist("shoulder_l_shoulder_r", lm(LEFT_SHOULDER), lm(RIGHT_SHOULDER)),
    dist("hip_l_hip_r", lm(LEFT_HIP), lm(RIGHT_HIP)),
    dist("ankle_l_hip_l", lm(LEFT_ANKLE), lm(LEFT_HIP)),
    dist("ankle_r_hip_r", lm(RIGHT_ANKLE), lm(RIGHT_HIP)),
    dist("knee_l_knee_r", lm(LEFT_KNEE), lm(RIGHT_KNEE)),
    dist("ankle_l_ankle_r", lm(LEFT_ANKLE), lm(RIGHT_ANKLE)),
    dist("nose_wrist_l", lm(NOSE), lm(LEFT_WRIST)),
    dist("nose_wrist_r", lm(NOSE), lm(RIGHT_WRIST)),
    dist("ear_l_shoulder_l", lm(LEFT_EAR), lm(LEFT_SHOULDER)),
    dist("ear_r_shoulder_r", lm(RIGHT_EAR), lm(RIGHT_SHOULDER)),
    dist("wrist_l_knee_l", lm(LEFT_WRIST), lm(LEFT_KNEE)),
    dist("wrist_r_knee_r", lm(RIGHT_WRIST), lm(RIGHT_KNEE)),
    dist("shoulder_l_hip_r", lm(LEFT_SHOULDER), lm(RIGHT_HIP)),
    dist("shoulder_r_hip_l", lm(RIGHT_SHOULDER), lm(LEFT_HIP)),
    dist("mid_shoulder_mid_ankle", MID_SHOULDER, MID_ANKLE),
    joint("elbow_l", LEFT_SHOULDER, LEFT_ELBOW, LEFT_WRIST),
    joint("elbow_r", RIGHT_SHOULDER, RIGHT_ELBOW, RIGHT_WRIST),
    joint("shoulder_l", LEFT_ELBOW, LEFT_SHOULDER, LEFT_HIP),
    joint("shoulder_r", RIGHT_ELBOW, RIGHT_SHOULDER, RIGHT_HIP),
    joint("hip_l", LEFT_SHOULDER, LEFT_HIP, LEFT_KNEE),
    joint("hip_r", RIGHT_SHOULDER, RIGHT_HIP, RIGHT_KNEE),
    joint("knee_l", LEFT_HIP, LEFT_KNEE, LEFT_ANKLE),
    joint("knee_r", RIGHT_HIP, RIGHT_KNEE, RIGHT_ANKLE),
    FeatureEntry {
        name: "neck",
        def: FeatureDef::JointAngle {
            a: lm(NOSE),
            vertex: MID_SHOULDER,
            c: MID_HIP,
        },
    },
    signed(
        "trunk_pitch",
        Direction::Fixed(FixedAxis::Up),
        seg(MID_HIP, MID_SHOULDER),
        Plane::Zy,
    ),
    signed(
        "trunk_roll",
        Direction::Fixed(FixedAxis::Up),
        seg(MID_HIP, MID_SHOULDER),
        Plane::Xy,
    ),
    signed(
        "trunk_twist",
        seg(lm(RIGHT_HIP), lm(LEFT_HIP)),
        seg(lm(RIGHT_SHOULDER), lm(LEFT_SHOULDER)),
        Plane::Xz,
    ),
    signed(
        "head_tilt",
        Direction::Fixed(FixedAxis::ImageLeft),
        seg(lm(LEFT_EAR), lm(RIGHT_EAR)),
        Plane::Xy,
    ),
    incl("wrist_l_elevation", lm(LEFT_SHOULDER), lm(LEFT_WRIST)),
    incl("wrist_r_elevation", lm(RIGHT_SHOULDER), lm(RIGHT_WRIST)),
    incl("forearm_l", lm(LEFT_ELBOW), lm(LEFT_WRIST)),
    incl("forearm_r", lm(RIGHT_ELBOW), lm(RIGHT_WRIST)),
    incl("upper_arm_l", lm(LEFT_SHOULDER), lm(LEFT_ELBOW)),
    incl("upper_arm_r", lm(RIGHT_SHOULDER), lm(RIGHT_ELBOW)),
    incl("thigh_l", lm(LEFT_HIP), lm(LEFT_KNEE)),
    incl("thigh_r", lm(RIGHT_HIP), lm(RIGHT_KNEE)),
    incl("shin_l", lm(LEFT_KNEE), lm(LEFT_ANKLE)),
    incl("shin_r", lm(RIGHT_KNEE), lm(RIGHT_ANKLE)),
    incl("gaze", MID_EAR, lm(NOSE)),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalogue_shape() {
        assert_eq!(CATALOGUE.len(), FEATURE_COUNT);
        assert_eq!(
            CATALOGUE.iter().filter(|e| e.def.is_distance()).count(),
            DISTANCE_COUNT
        );
        assert!(CATALOGUE[..DISTANCE_COUNT].iter().all(|e| e.def.is_distance()));
        assert_eq!(CATALOGUE.iter().filter(|e| e.def.is_signed()).count(), 4);
        let mut names: Vec<_> = CATALOGUE.iter().map(|e| e.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), FEATURE_COUNT);
        for e in &CATALOGUE {
            for p in e.def.points() {
                assert!(p.constituents().iter().all(|&i| i < LANDMARK_COUNT));
            }
        }
    }
}
