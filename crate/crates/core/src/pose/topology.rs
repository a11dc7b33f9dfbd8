//! The fixed 33-point body landmark layout emitted by the upstream pose detector.
//!
//! Indices follow the detector's published order. Left/right refer to the
//! subject's own sides, so for a person facing the camera the left landmarks
//! appear on the image's right (larger `x`).

use std::fmt;

use serde::{Deserialize, Serialize};

pub const LANDMARK_COUNT: usize = 33;

pub const NOSE: usize = 0;
pub const LEFT_EYE_INNER: usize = 1;
pub const LEFT_EYE: usize = 2;
pub const LEFT_EYE_OUTER: usize = 3;
pub const RIGHT_EYE_INNER: usize = 4;
pub const RIGHT_EYE: usize = 5;
pub const RIGHT_EYE_OUTER: usize = 6;
pub const LEFT_EAR: usize = 7;
pub const RIGHT_EAR: usize = 8;
pub const MOUTH_LEFT: usize = 9;
pub const MOUTH_RIGHT: usize = 10;
pub const LEFT_SHOULDER: usize = 11;
pub const RIGHT_SHOULDER: usize = 12;
pub const LEFT_ELBOW: usize = 13;
pub const RIGHT_ELBOW: usize = 14;
pub const LEFT_WRIST: usize = 15;
pub const RIGHT_WRIST: usize = 16;
pub const LEFT_PINKY: usize = 17;
pub const RIGHT_PINKY: usize = 18;
pub const LEFT_INDEX: usize = 19;
pub const RIGHT_INDEX: usize = 20;
pub const LEFT_THUMB: usize = 21;
pub const RIGHT_THUMB: usize = 22;
pub const LEFT_HIP: usize = 23;
pub const RIGHT_HIP: usize = 24;
pub const LEFT_KNEE: usize = 25;
pub const RIGHT_KNEE: usize = 26;
pub const LEFT_ANKLE: usize = 27;
pub const RIGHT_ANKLE: usize = 28;
pub const LEFT_HEEL: usize = 29;
pub const RIGHT_HEEL: usize = 30;
pub const LEFT_FOOT_INDEX: usize = 31;
pub const RIGHT_FOOT_INDEX: usize = 32;

/// Landmark names in index order.
pub const LANDMARK_NAMES: [&str; LANDMARK_COUNT] = [
    "nose",
    "left_eye_inner",
    "left_eye",
    "left_eye_outer",
    "right_eye_inner",
    "right_eye",
    "right_eye_outer",
    "left_ear",
    "right_ear",
    "mouth_left",
    "mouth_right",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_pinky",
    "right_pinky",
    "left_index",
    "right_index",
    "left_thumb",
    "right_thumb",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
    "left_heel",
    "right_heel",
    "left_foot_index",
    "right_foot_index",
];

/// `(left, right)` partner pairs. The nose is the only unpaired landmark.
pub const SYMMETRIC_PAIRS: [(usize, usize); 16] = [
    (LEFT_EYE_INNER, RIGHT_EYE_INNER),
    (LEFT_EYE, RIGHT_EYE),
    (LEFT_EYE_OUTER, RIGHT_EYE_OUTER),
    (LEFT_EAR, RIGHT_EAR),
    (MOUTH_LEFT, MOUTH_RIGHT),
    (LEFT_SHOULDER, RIGHT_SHOULDER),
    (LEFT_ELBOW, RIGHT_ELBOW),
    (LEFT_WRIST, RIGHT_WRIST),
    (LEFT_PINKY, RIGHT_PINKY),
    (LEFT_INDEX, RIGHT_INDEX),
    (LEFT_THUMB, RIGHT_THUMB),
    (LEFT_HIP, RIGHT_HIP),
    (LEFT_KNEE, RIGHT_KNEE),
    (LEFT_ANKLE, RIGHT_ANKLE),
    (LEFT_HEEL, RIGHT_HEEL),
    (LEFT_FOOT_INDEX, RIGHT_FOOT_INDEX),
];

/// Landmarks that leave the frame in an upper-body camera view.
pub const LEG_LANDMARKS: [usize; 8] = [
    LEFT_KNEE,
    RIGHT_KNEE,
    LEFT_ANKLE,
    RIGHT_ANKLE,
    LEFT_HEEL,
    RIGHT_HEEL,
    LEFT_FOOT_INDEX,
    RIGHT_FOOT_INDEX,
];

/// Returns the mirror partner of a landmark, or the landmark itself for the nose.
pub fn mirror(index: usize) -> Option<usize> {
    if index == NOSE {
        return Some(NOSE);
    }
    SYMMETRIC_PAIRS.iter().find_map(|&(l, r)| {
        if l == index {
            Some(r)
        } else if r == index {
            Some(l)
        } else {
            None
        }
    })
}

pub fn landmark_index(name: &str) -> Option<usize> {
    LANDMARK_NAMES.iter().position(|n| *n == name)
}

/// Midpoints used by features and the geometric classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivedPoint {
    MidShoulder,
    MidHip,
    MidEar,
    MidAnkle,
}

impl DerivedPoint {
    pub const ALL: [DerivedPoint; 4] = [
        DerivedPoint::MidShoulder,
        DerivedPoint::MidHip,
        DerivedPoint::MidEar,
        DerivedPoint::MidAnkle,
    ];

    pub fn constituents(self) -> (usize, usize) {
        match self {
            DerivedPoint::MidShoulder => (LEFT_SHOULDER, RIGHT_SHOULDER),
            DerivedPoint::MidHip => (LEFT_HIP, RIGHT_HIP),
            DerivedPoint::MidEar => (LEFT_EAR, RIGHT_EAR),
            DerivedPoint::MidAnkle => (LEFT_ANKLE, RIGHT_ANKLE),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DerivedPoint::MidShoulder => "mid_shoulder",
            DerivedPoint::MidHip => "mid_hip",
            DerivedPoint::MidEar => "mid_ear",
            DerivedPoint::MidAnkle => "mid_ankle",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.name() == name)
    }
}

/// A point on the body: either a raw landmark or a derived midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointRef {
    Landmark(usize),
    Derived(DerivedPoint),
}

impl PointRef {
    /// Raw landmark indices this point depends on.
    pub fn constituents(self) -> Vec<usize> {
        match self {
            PointRef::Landmark(i) => vec![i],
            PointRef::Derived(d) => {
                let (a, b) = d.constituents();
                vec![a, b]
            }
        }
    }

    pub fn name(self) -> String {
        match self {
            PointRef::Landmark(i) => LANDMARK_NAMES
                .get(i)
                .map(|s| s.to_string())
                .unwrap_or_else(|| format!("landmark_{i}")),
            PointRef::Derived(d) => d.name().to_string(),
        }
    }
}

impl From<DerivedPoint> for PointRef {
    fn from(d: DerivedPoint) -> Self {
        PointRef::Derived(d)
    }
}

impl fmt::Display for PointRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn indices_are_distinct_and_in_range() {
        let all: Vec<usize> = vec![
            NOSE,
            LEFT_EYE_INNER,
            LEFT_EYE,
            LEFT_EYE_OUTER,
            RIGHT_EYE_INNER,
            RIGHT_EYE,
            RIGHT_EYE_OUTER,
            LEFT_EAR,
            RIGHT_EAR,
            MOUTH_LEFT,
            MOUTH_RIGHT,
            LEFT_SHOULDER,
            RIGHT_SHOULDER,
            LEFT_ELBOW,
            RIGHT_ELBOW,
            LEFT_WRIST,
            RIGHT_WRIST,
            LEFT_PINKY,
            RIGHT_PINKY,
            LEFT_INDEX,
            RIGHT_INDEX,
            LEFT_THUMB,
            RIGHT_THUMB,
            LEFT_HIP,
            RIGHT_HIP,
            LEFT_KNEE,
            RIGHT_KNEE,
            LEFT_ANKLE,
            RIGHT_ANKLE,
            LEFT_HEEL,
            RIGHT_HEEL,
            LEFT_FOOT_INDEX,
            RIGHT_FOOT_INDEX,
        ];
        assert_eq!(all.len(), LANDMARK_COUNT);
        let set: HashSet<_> = all.iter().copied().collect();
        assert_eq!(set.len(), LANDMARK_COUNT);
        assert!(all.iter().all(|&i| i < LANDMARK_COUNT));
        for (i, name) in LANDMARK_NAMES.iter().enumerate() {
            assert_eq!(landmark_index(name), Some(i));
        }
    }

    #[test]
    fn every_side_has_a_partner() {
        for (i, &name) in LANDMARK_NAMES.iter().enumerate() {
            let m = mirror(i).expect("partner");
            assert_eq!(mirror(m), Some(i));
            if name.contains("left") {
                assert_eq!(LANDMARK_NAMES[m], name.replace("left", "right"));
            }
        }
    }
}
