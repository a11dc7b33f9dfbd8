//! Newline-delimited JSON messages exchanged with the classification service.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometric::GeometricPose;
use crate::pose::io::FrameRecord;
use crate::pose::RiskLabel;

/// One request line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum WireMessage {
    Frame(FrameRecord),
    /// Average the next `frames` frame messages into a new baseline.
    Calibrate { frames: usize },
    /// Drop the baseline, debounce and alert state.
    Reset,
    Configure(ConfigureRequest),
}

/// Session settings; absent fields are left unchanged.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigureRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub use_models: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alert_frames: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub debounce_frames: Option<usize>,
    /// Per-class geometric thresholds keyed by pose name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub thresholds: BTreeMap<String, f64>,
}

/// Geometric part of a frame response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum GeometricStatus {
    Ok {
        pose: GeometricPose,
        raw: GeometricPose,
        scores: BTreeMap<String, f64>,
    },
    NotCalibrated,
    Calibrating { collected: usize, needed: usize },
    Calibrated { frames: usize },
    Error { message: String },
}

impl GeometricStatus {
    pub fn pose(&self) -> Option<GeometricPose> {
        match self {
            GeometricStatus::Ok { pose, .. } => Some(*pose),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputPrediction {
    pub class: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelOutputs {
    pub walker_choice: OutputPrediction,
    pub initial_position: OutputPrediction,
    pub posture_type: OutputPrediction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub risk: Option<OutputPrediction>,
}

/// Where the risk label of a response came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskSource {
    RiskModel,
    PostureModel,
    Geometric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub ts: i64,
    pub geometric: GeometricStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub models: Option<ModelOutputs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub risk_label: Option<RiskLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub risk_source: Option<RiskSource>,
    pub alert: bool,
    pub latency_ms: f64,
}

/// One response line.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Response {
    Result(ClassifyResponse),
    Ack { request: String },
    Error { error: String, message: String },
}

impl Response {
    pub fn error(kind: &str, message: impl Into<String>) -> Self {
        Response::Error {
            error: kind.into(),
            message: message.into(),
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("responses serialize")
    }
}

pub fn parse_message(line: &str) -> Result<WireMessage, serde_json::Error> {
    serde_json::from_str(line)
}
