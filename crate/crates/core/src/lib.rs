//! Posture classification for smart-walker users from 33-point body landmarks.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod features;
pub mod geom;
pub mod geometric;
pub mod matrix;
pub mod pose;
pub mod serve;
pub mod svm;
pub mod synth;
pub mod gbt;
pub mod eval;
pub mod workflow;
