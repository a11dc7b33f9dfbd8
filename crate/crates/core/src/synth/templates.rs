//! Posture templates for the default vocabulary and the eight geometric poses.
//!
//! | class            | trunk (pitch/roll/twist) | head | arms (L / R)       | legs (hip/knee) |
//! |------------------|--------------------------|------|--------------------|-----------------|
//! | standing         | 0 / 0 / 0                | 0    | grip / grip        | 0 / 0           |
//! | sitting          | 0 / 0 / 0                | 0    | grip / grip        | 90 / 90         |
//! | sit_to_stand     | 38 / 0 / 0               | 0    | grip / grip        | 55 / 65         |
//! | stand_to_sit     | 15 / 0 / 0               | 0    | grip / grip        | 70 / 105        |
//! | lean_forward     | 30 / 0 / 0               | 0    | grip / grip        | 0 / 0           |
//! | lean_backward    | -25 / 0 / 0              | 0    | grip / grip        | 0 / 0           |
//! | lean_left        | 0 / 25 / 0               | 0    | grip / grip        | 0 / 0           |
//! | lean_right       | 0 / -25 / 0              | 0    | grip / grip        | 0 / 0           |
//! | twist_left       | 0 / 0 / 60               | 0    | grip / grip        | 0 / 0           |
//! | twist_right      | 0 / 0 / -60              | 0    | grip / grip        | 0 / 0           |
//! | raise_left_arm   | 0 / 0 / 0                | 0    | raised / grip      | 0 / 0           |
//! | raise_right_arm  | 0 / 0 / 0                | 0    | grip / raised      | 0 / 0           |
//! | raise_both_arms  | 0 / 0 / 0                | 0    | raised / raised    | 0 / 0           |
//! | elbow_fold_left  | 0 / 0 / 0                | 0    | folded / grip      | 0 / 0           |
//! | elbow_fold_right | 0 / 0 / 0                | 0    | grip / folded      | 0 / 0           |
//! | head_down        | 0 / 0 / 0                | 45   | grip / grip        | 0 / 0           |
//! | head_up          | 0 / 0 / 0                | -60  | grip / grip        | 0 / 0           |
//!
//! "grip" means hands on the walker handles; when the walker is absent a
//! gripping arm hangs at the side instead. Angles are degrees.

use crate::geom::Vec3;
use crate::geometric::GeometricPose;
use crate::pose::{Fsr, InitialPosition, Landmark, View, LANDMARK_COUNT};

use super::skeleton::{image_points, ArmPose, BodyPose};

pub const TEMPLATE_VISIBILITY: f64 = 0.99;
pub const GRIP_PRESSURE: f64 = 0.8;

/// How walker use is assigned within a participant's block of frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkerRule {
    Always,
    Never,
    /// First half of the block with the walker, second half without.
    Alternate,
}

/// A labelled posture: body parameters plus label assignment rules.
#[derive(Debug, Clone, PartialEq)]
pub struct PostureClass {
    pub name: String,
    pub pose: BodyPose,
    pub walker: WalkerRule,
    pub initial_position: InitialPosition,
}

/// Rendered canonical landmarks of one class.
#[derive(Debug, Clone, PartialEq)]
pub struct PostureTemplate {
    pub name: String,
    pub landmarks: Vec<Landmark>,
    pub fsr: Option<Fsr>,
    pub views: Vec<View>,
}

impl PostureTemplate {
    pub fn render(name: &str, pose: &BodyPose, with_walker: bool) -> Self {
        let mut pose = *pose;
        let grips = |arm: ArmPose| arm == ArmPose::GRIP;
        let fsr = if with_walker {
            let pressure = |arm: ArmPose| if grips(arm) { GRIP_PRESSURE } else { 0.0 };
            Some(Fsr {
                left: pressure(pose.left_arm),
                right: pressure(pose.right_arm),
            })
        } else {
            if grips(pose.left_arm) {
                pose.left_arm = ArmPose::HANGING;
            }
            if grips(pose.right_arm) {
                pose.right_arm = ArmPose::HANGING;
            }
            None
        };
        let landmarks = image_points(&pose)
            .iter()
            .map(|p| Landmark::new(p.x, p.y, p.z, TEMPLATE_VISIBILITY))
            .collect();
        PostureTemplate {
            name: name.to_string(),
            landmarks,
            fsr,
            views: vec![View::FullBody, View::UpperBody],
        }
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.landmarks.iter().map(Landmark::position).collect()
    }
}

#[allow(clippy::too_many_arguments)]
const fn body(
    pitch: f64,
    roll: f64,
    twist: f64,
    head: f64,
    left: ArmPose,
    right: ArmPose,
    hip: f64,
    knee: f64,
) -> BodyPose {
    BodyPose {
        trunk_pitch: pitch,
        trunk_roll: roll,
        trunk_twist: twist,
        head_pitch: head,
        left_arm: left,
        right_arm: right,
        hip_flex: hip,
        knee_flex: knee,
    }
}

const G: ArmPose = ArmPose::GRIP;
const R: ArmPose = ArmPose::RAISED;
const F: ArmPose = ArmPose::FOLDED;

/// Body parameters for a default-vocabulary class name.
pub fn default_pose(name: &str) -> Option<BodyPose> {
    let p = match name {
        "standing" => body(0.0, 0.0, 0.0, 0.0, G, G, 0.0, 0.0),
        "sitting" => body(0.0, 0.0, 0.0, 0.0, G, G, 90.0, 90.0),
        "sit_to_stand" => body(38.0, 0.0, 0.0, 0.0, G, G, 55.0, 65.0),
        "stand_to_sit" => body(15.0, 0.0, 0.0, 0.0, G, G, 70.0, 105.0),
        "lean_forward" => body(30.0, 0.0, 0.0, 0.0, G, G, 0.0, 0.0),
        "lean_backward" => body(-25.0, 0.0, 0.0, 0.0, G, G, 0.0, 0.0),
        "lean_left" => body(0.0, 25.0, 0.0, 0.0, G, G, 0.0, 0.0),
        "lean_right" => body(0.0, -25.0, 0.0, 0.0, G, G, 0.0, 0.0),
        "twist_left" => body(0.0, 0.0, 60.0, 0.0, G, G, 0.0, 0.0),
        "twist_right" => body(0.0, 0.0, -60.0, 0.0, G, G, 0.0, 0.0),
        "raise_left_arm" => body(0.0, 0.0, 0.0, 0.0, R, G, 0.0, 0.0),
        "raise_right_arm" => body(0.0, 0.0, 0.0, 0.0, G, R, 0.0, 0.0),
        "raise_both_arms" => body(0.0, 0.0, 0.0, 0.0, R, R, 0.0, 0.0),
        "elbow_fold_left" => body(0.0, 0.0, 0.0, 0.0, F, G, 0.0, 0.0),
        "elbow_fold_right" => body(0.0, 0.0, 0.0, 0.0, G, F, 0.0, 0.0),
        "head_down" => body(0.0, 0.0, 0.0, 45.0, G, G, 0.0, 0.0),
        "head_up" => body(0.0, 0.0, 0.0, -60.0, G, G, 0.0, 0.0),
        _ => return None,
    };
    Some(p)
}

/// Label rules for the default vocabulary.
pub fn default_classes() -> Vec<PostureClass> {
    crate::pose::DEFAULT_POSTURES
        .iter()
        .map(|&name| {
            let initial_position = match name {
                "sitting" | "sit_to_stand" => InitialPosition::Sitting,
                _ => InitialPosition::Standing,
            };
            let walker = match name {
                "raise_both_arms" => WalkerRule::Never,
                _ => WalkerRule::Alternate,
            };
            PostureClass {
                name: name.to_string(),
                pose: default_pose(name).expect("every default posture has a template"),
                walker,
                initial_position,
            }
        })
        .collect()
}

/// Upright figure with both arms straight out sideways, no walker.
pub fn t_pose() -> PostureTemplate {
    let pose = BodyPose {
        left_arm: ArmPose::T,
        right_arm: ArmPose::T,
        ..BodyPose::UPRIGHT
    };
    PostureTemplate::render("t_pose", &pose, false)
}

/// Template used for each geometric pose in scripted sessions (walker in use).
pub fn geometric_template(pose: GeometricPose) -> PostureTemplate {
    let class = match pose {
        GeometricPose::StandingStill => "standing",
        GeometricPose::FallForward => "lean_forward",
        GeometricPose::FallBackward => "lean_backward",
        GeometricPose::FallLeft => "lean_left",
        GeometricPose::FallRight => "lean_right",
        GeometricPose::LiftingLeftHand => "raise_left_arm",
        GeometricPose::LiftingRightHand => "raise_right_arm",
        GeometricPose::Sitting => "sitting",
    };
    let body = default_pose(class).expect("geometric poses map onto default postures");
    PostureTemplate::render(pose.name(), &body, true)
}

pub(crate) fn template_positions(t: &PostureTemplate) -> [Vec3; LANDMARK_COUNT] {
    let mut out = [Vec3::ZERO; LANDMARK_COUNT];
    for (o, l) in out.iter_mut().zip(&t.landmarks) {
        *o = l.position();
    }
    out
}
