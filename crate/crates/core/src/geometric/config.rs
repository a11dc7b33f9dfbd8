//! Weight tables and thresholds for the geometric classifier.
//!
//! File format (JSON, unknown keys rejected):
//!
//! ```json
//! {
//!   "version": 1,
//!   "grip_min": 0.5,
//!   "fsr_weight": 2.0,
//!   "debounce_frames": 5,
//!   "n_cal_min": 10,
//!   "classes": {
//!     "sitting": { "threshold": 0.4, "weights": { "mid_hip.dy": 1.0 } },
//!     "...": {}
//!   }
//! }
//! ```
//!
//! `classes` must name each of the seven scored poses (every pose except
//! `standing_still`, the fallback). Weight keys are `<point>.<dx|dy|dz>` over
//! the key points `nose`, `left_shoulder`, `right_shoulder`, `left_wrist`,
//! `right_wrist`, `mid_shoulder`, `mid_hip`; omitted keys weigh 0.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GeometricError, GeometricPose, KEY_POINTS};

pub const CONFIG_VERSION: u32 = 1;
pub const COMPONENT_COUNT: usize = 3 * KEY_POINTS.len();

const DEFAULT_CONFIG: &str = include_str!("../../config/geometric_default.json");
const AXES: [&str; 3] = ["dx", "dy", "dz"];

/// Name of signed component `j`, e.g. `mid_hip.dy`.
pub fn component_name(j: usize) -> String {
    format!("{}.{}", KEY_POINTS[j / 3].name(), AXES[j % 3])
}

pub fn component_index(name: &str) -> Option<usize> {
    (0..COMPONENT_COUNT).find(|&j| component_name(j) == name)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassRule {
    pub weights: [f64; COMPONENT_COUNT],
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometricConfig {
    /// Indexed like [`GeometricPose::SCORED`].
    pub rules: [ClassRule; 7],
    pub grip_min: f64,
    pub fsr_weight: f64,
    pub debounce_frames: usize,
    pub n_cal_min: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassFile {
    threshold: f64,
    weights: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    version: u32,
    grip_min: f64,
    fsr_weight: f64,
    debounce_frames: usize,
    n_cal_min: usize,
    classes: BTreeMap<String, ClassFile>,
}

impl Default for GeometricConfig {
    fn default() -> Self {
        GeometricConfig::from_json(DEFAULT_CONFIG).expect("bundled geometric config is valid")
    }
}

impl GeometricConfig {
    pub fn rule(&self, pose: GeometricPose) -> Option<&ClassRule> {
        pose.scored_index().map(|i| &self.rules[i])
    }

    pub fn rule_mut(&mut self, pose: GeometricPose) -> Option<&mut ClassRule> {
        pose.scored_index().map(move |i| &mut self.rules[i])
    }

    /// Minimum length of a debounced run.
    pub fn min_dwell(&self) -> usize {
        self.debounce_frames.div_ceil(2)
    }

    pub fn validate(&self) -> Result<(), GeometricError> {
        let bad = |m: String| Err(GeometricError::Config(m));
        for (pose, rule) in GeometricPose::SCORED.iter().zip(&self.rules) {
            if !(rule.threshold > 0.0 && rule.threshold.is_finite()) {
                return bad(format!("{}: threshold must be positive", pose.name()));
            }
            if rule.weights.iter().any(|w| !w.is_finite()) {
                return bad(format!("{}: weights must be finite", pose.name()));
            }
        }
        if !(0.0..=1.0).contains(&self.grip_min) {
            return bad("grip_min must lie in [0, 1]".into());
        }
        if !(self.fsr_weight >= 0.0 && self.fsr_weight.is_finite()) {
            return bad("fsr_weight must be non-negative".into());
        }
        if self.debounce_frames == 0 {
            return bad("debounce_frames must be at least 1".into());
        }
        if self.n_cal_min == 0 {
            return bad("n_cal_min must be at least 1".into());
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, GeometricError> {
        let file: ConfigFile =
            serde_json::from_str(text).map_err(|e| GeometricError::Config(e.to_string()))?;
        if file.version != CONFIG_VERSION {
            return Err(GeometricError::Config(format!(
                "unsupported config version {}",
                file.version
            )));
        }
        let mut classes = file.classes;
        let mut rules = Vec::with_capacity(7);
        for pose in GeometricPose::SCORED {
            let class = classes
                .remove(pose.name())
                .ok_or_else(|| GeometricError::Config(format!("missing class {}", pose.name())))?;
            let mut weights = [0.0; COMPONENT_COUNT];
            for (key, w) in class.weights {
                let j = component_index(&key).ok_or_else(|| {
                    GeometricError::Config(format!("{}: unknown component {key}", pose.name()))
                })?;
                weights[j] = w;
            }
            rules.push(ClassRule {
                weights,
                threshold: class.threshold,
            });
        }
        if let Some(extra) = classes.keys().next() {
            return Err(GeometricError::Config(format!("unknown class {extra}")));
        }
        let config = GeometricConfig {
            rules: rules.try_into().expect("seven scored classes"),
            grip_min: file.grip_min,
            fsr_weight: file.fsr_weight,
            debounce_frames: file.debounce_frames,
            n_cal_min: file.n_cal_min,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        let classes = GeometricPose::SCORED
            .iter()
            .zip(&self.rules)
            .map(|(pose, rule)| {
                let weights = rule
                    .weights
                    .iter()
                    .enumerate()
                    .filter(|(_, w)| **w != 0.0)
                    .map(|(j, w)| (component_name(j), *w))
                    .collect();
                (
                    pose.name().to_string(),
                    ClassFile {
                        threshold: rule.threshold,
                        weights,
                    },
                )
            })
            .collect();
        let file = ConfigFile {
            version: CONFIG_VERSION,
            grip_min: self.grip_min,
            fsr_weight: self.fsr_weight,
            debounce_frames: self.debounce_frames,
            n_cal_min: self.n_cal_min,
            classes,
        };
        serde_json::to_string_pretty(&file).expect("config serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GeometricError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| GeometricError::Config(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json(&text)
    }

    /// Copy with every weight, threshold and the fusion weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> GeometricConfig {
        let mut out = self.clone();
        for rule in &mut out.rules {
            rule.threshold *= factor;
            for w in &mut rule.weights {
                *w *= factor;
            }
        }
        out.fsr_weight *= factor;
        out
    }
}
