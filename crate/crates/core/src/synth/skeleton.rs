//! Parametric stick figure.
//!
//! The body is built in a body frame measured in torso lengths: origin at the
//! hip midpoint, `+X` towards the subject's left, `+Y` up, `+Z` towards the
//! camera. It is then grounded (lowest foot point on the floor) and mapped to
//! normalized image coordinates: `x = 0.5 + s·X`, `y = FLOOR_Y − s·Y`,
//! `z = −s·Z` with `s = IMAGE_SCALE`.
//!
//! Segment lengths (torso = 1): shoulder half-width 0.36, hip half-width
//! 0.2, upper arm 0.55, forearm 0.5, thigh 0.85, shin 0.8. An upright figure
//! with both arms straight out sideways therefore has a wrist-to-wrist span of
//! 2 × (0.36 + 0.55 + 0.5) = 2.82 torso lengths.

use crate::geom::Vec3;
use crate::pose::topology::*;
use crate::pose::LANDMARK_COUNT;

pub const IMAGE_SCALE: f64 = 0.24;
pub const IMAGE_CENTER_X: f64 = 0.5;
pub const FLOOR_Y: f64 = 0.95;

pub const SHOULDER_HALF_WIDTH: f64 = 0.36;
pub const HIP_HALF_WIDTH: f64 = 0.2;
pub const UPPER_ARM: f64 = 0.55;
pub const FOREARM: f64 = 0.5;
pub const THIGH: f64 = 0.85;
pub const SHIN: f64 = 0.8;

/// Arm posture, angles in degrees relative to the trunk.
///
/// Each segment starts hanging straight down, is flexed forward by `*_flex`
/// (towards the camera) and then abducted sideways by `*_abd` (away from the
/// body midline).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmPose {
    pub upper_flex: f64,
    pub upper_abd: f64,
    pub fore_flex: f64,
    pub fore_abd: f64,
}

impl ArmPose {
    pub const HANGING: ArmPose = ArmPose::new(0.0, 8.0, 8.0, 6.0);
    /// Hands on the walker handles in front of the hips.
    pub const GRIP: ArmPose = ArmPose::new(25.0, 8.0, 75.0, 0.0);
    pub const RAISED: ArmPose = ArmPose::new(165.0, 12.0, 172.0, 10.0);
    /// Elbow bent with the hand brought up towards the shoulder.
    pub const FOLDED: ArmPose = ArmPose::new(12.0, 10.0, 150.0, 0.0);
    pub const T: ArmPose = ArmPose::new(0.0, 90.0, 0.0, 90.0);

    pub const fn new(upper_flex: f64, upper_abd: f64, fore_flex: f64, fore_abd: f64) -> Self {
        ArmPose {
            upper_flex,
            upper_abd,
            fore_flex,
            fore_abd,
        }
    }
}

/// Whole-body posture, angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyPose {
    /// Forward lean towards the camera (negative leans back).
    pub trunk_pitch: f64,
    /// Lean towards the subject's left (negative leans right).
    pub trunk_roll: f64,
    /// Upper-body rotation turning the chest towards the subject's left.
    pub trunk_twist: f64,
    /// Chin down (negative looks up).
    pub head_pitch: f64,
    pub left_arm: ArmPose,
    pub right_arm: ArmPose,
    pub hip_flex: f64,
    pub knee_flex: f64,
}

impl BodyPose {
    pub const UPRIGHT: BodyPose = BodyPose {
        trunk_pitch: 0.0,
        trunk_roll: 0.0,
        trunk_twist: 0.0,
        head_pitch: 0.0,
        left_arm: ArmPose::HANGING,
        right_arm: ArmPose::HANGING,
        hip_flex: 0.0,
        knee_flex: 0.0,
    };
}

fn segment_direction(flex: f64, abd: f64, side: f64) -> Vec3 {
    Vec3::new(0.0, -1.0, 0.0)
        .rotate_x(-flex.to_radians())
        .rotate_z(side * abd.to_radians())
}

fn arm(points: &mut [Vec3; LANDMARK_COUNT], pose: ArmPose, side: f64, ids: [usize; 6]) {
    let [shoulder, elbow, wrist, pinky, index, thumb] = ids;
    let upper = segment_direction(pose.upper_flex, pose.upper_abd, side);
    let fore = segment_direction(pose.fore_flex, pose.fore_abd, side);
    let outward = Vec3::new(side, 0.0, 0.0);
    points[elbow] = points[shoulder] + upper * UPPER_ARM;
    points[wrist] = points[elbow] + fore * FOREARM;
    points[pinky] = points[wrist] + fore * 0.13 + outward * 0.03;
    points[index] = points[wrist] + fore * 0.15 - outward * 0.02;
    points[thumb] = points[wrist] + fore * 0.07 - outward * 0.05 + Vec3::new(0.0, 0.0, 0.02);
}

/// Body-frame landmark positions before grounding.
pub fn body_points(pose: &BodyPose) -> [Vec3; LANDMARK_COUNT] {
    let mut p = [Vec3::ZERO; LANDMARK_COUNT];
    let neck = Vec3::new(0.0, 1.0, 0.0);

    // head, relative to the neck base
    let head: [(usize, Vec3); 11] = [
        (NOSE, Vec3::new(0.0, 0.42, 0.14)),
        (LEFT_EYE_INNER, Vec3::new(0.04, 0.48, 0.12)),
        (LEFT_EYE, Vec3::new(0.075, 0.485, 0.11)),
        (LEFT_EYE_OUTER, Vec3::new(0.11, 0.48, 0.1)),
        (RIGHT_EYE_INNER, Vec3::new(-0.04, 0.48, 0.12)),
        (RIGHT_EYE, Vec3::new(-0.075, 0.485, 0.11)),
        (RIGHT_EYE_OUTER, Vec3::new(-0.11, 0.48, 0.1)),
        (LEFT_EAR, Vec3::new(0.16, 0.44, 0.0)),
        (RIGHT_EAR, Vec3::new(-0.16, 0.44, 0.0)),
        (MOUTH_LEFT, Vec3::new(0.05, 0.34, 0.12)),
        (MOUTH_RIGHT, Vec3::new(-0.05, 0.34, 0.12)),
    ];
    for (i, offset) in head {
        p[i] = neck + offset.rotate_x(pose.head_pitch.to_radians());
    }
    p[LEFT_SHOULDER] = Vec3::new(SHOULDER_HALF_WIDTH, 1.0, 0.0);
    p[RIGHT_SHOULDER] = Vec3::new(-SHOULDER_HALF_WIDTH, 1.0, 0.0);
    arm(
        &mut p,
        pose.left_arm,
        1.0,
        [LEFT_SHOULDER, LEFT_ELBOW, LEFT_WRIST, LEFT_PINKY, LEFT_INDEX, LEFT_THUMB],
    );
    arm(
        &mut p,
        pose.right_arm,
        -1.0,
        [RIGHT_SHOULDER, RIGHT_ELBOW, RIGHT_WRIST, RIGHT_PINKY, RIGHT_INDEX, RIGHT_THUMB],
    );

    // trunk rotation about the hip midpoint: twist, then pitch, then roll
    let upper_body = [
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
    ];
    for i in upper_body {
        p[i] = p[i]
            .rotate_y(pose.trunk_twist.to_radians())
            .rotate_x(pose.trunk_pitch.to_radians())
            .rotate_z(-pose.trunk_roll.to_radians());
    }

    let thigh = segment_direction(pose.hip_flex, 0.0, 1.0);
    let shin = segment_direction(pose.hip_flex - pose.knee_flex, 0.0, 1.0);
    for (side, hip, knee, ankle, heel, foot) in [
        (1.0, LEFT_HIP, LEFT_KNEE, LEFT_ANKLE, LEFT_HEEL, LEFT_FOOT_INDEX),
        (-1.0, RIGHT_HIP, RIGHT_KNEE, RIGHT_ANKLE, RIGHT_HEEL, RIGHT_FOOT_INDEX),
    ] {
        p[hip] = Vec3::new(side * HIP_HALF_WIDTH, 0.0, 0.0);
        p[knee] = p[hip] + thigh * THIGH;
        p[ankle] = p[knee] + shin * SHIN;
        p[heel] = p[ankle] + Vec3::new(0.0, -0.06, -0.06);
        p[foot] = p[ankle] + Vec3::new(side * 0.03, -0.08, 0.2);
    }
    p
}

/// Normalized image coordinates of a pose, grounded on the floor.
pub fn image_points(pose: &BodyPose) -> [Vec3; LANDMARK_COUNT] {
    let body = body_points(pose);
    let floor = [LEFT_HEEL, RIGHT_HEEL, LEFT_FOOT_INDEX, RIGHT_FOOT_INDEX]
        .iter()
        .map(|&i| body[i].y)
        .fold(f64::INFINITY, f64::min);
    body.map(|b| {
        Vec3::new(
            IMAGE_CENTER_X + IMAGE_SCALE * b.x,
            FLOOR_Y - IMAGE_SCALE * (b.y - floor),
            -IMAGE_SCALE * b.z,
        )
    })
}
