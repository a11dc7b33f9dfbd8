//! Newton-boosted regression trees with exact greedy splits.
//!
//! Binary targets use the logistic loss, multiclass targets the softmax
//! cross-entropy with one tree per class per round. Invalid cells of the input
//! matrix are treated as missing and follow a learned default direction.

pub mod multi;
mod train;
pub mod tree;

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::FeatureMatrix;
pub use multi::{train_multi_output, train_single_risk, MultiOutputGBT, OutputName};
pub use train::{best_root_split, train_gbt, SplitCandidate};
pub use tree::{Node, RegressionTree};

pub const MODEL_FORMAT: &str = "walkerpose-gbt";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum GbtError {
    #[error("empty training input")]
    EmptyInput,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("row {row}: label {label} outside 0..{classes}")]
    Label {
        row: usize,
        label: usize,
        classes: usize,
    },
    #[error("row {row}, column {col}: non-finite value")]
    NonFinite { row: usize, col: usize },
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("missing label column {0}")]
    Schema(String),
    #[error("model format: {0}")]
    Format(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    BinaryLogistic,
    Softmax { classes: usize },
}

impl Objective {
    /// Number of margins (and trees per round).
    pub fn n_outputs(self) -> usize {
        match self {
            Objective::BinaryLogistic => 1,
            Objective::Softmax { classes } => classes,
        }
    }

    pub fn n_classes(self) -> usize {
        match self {
            Objective::BinaryLogistic => 2,
            Objective::Softmax { classes } => classes,
        }
    }

    /// Loss of one sample at the given margins.
    pub fn loss(self, margins: &[f64], label: usize) -> f64 {
        match self {
            Objective::BinaryLogistic => {
                let m = margins[0];
                // log(1 + e^m) - y m, stable for large |m|
                let softplus = m.max(0.0) + (-m.abs()).exp().ln_1p();
                softplus - if label == 1 { m } else { 0.0 }
            }
            Objective::Softmax { .. } => {
                let max = margins.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + margins.iter().map(|m| (m - max).exp()).sum::<f64>().ln();
                lse - margins[label]
            }
        }
    }

    /// Gradient and hessian diagonal of [`Objective::loss`] with respect to the margins.
    pub fn gradients(self, margins: &[f64], label: usize, out: &mut [(f64, f64)]) {
        match self {
            Objective::BinaryLogistic => {
                let p = sigmoid(margins[0]);
                let y = if label == 1 { 1.0 } else { 0.0 };
                out[0] = (p - y, p * (1.0 - p));
            }
            Objective::Softmax { .. } => {
                let p = softmax(margins);
                for (k, o) in out.iter_mut().enumerate() {
                    let y = if k == label { 1.0 } else { 0.0 };
                    *o = (p[k] - y, p[k] * (1.0 - p[k]));
                }
            }
        }
    }

    /// Class probabilities from margins.
    pub fn probabilities(self, margins: &[f64]) -> Vec<f64> {
        match self {
            Objective::BinaryLogistic => {
                let p = sigmoid(margins[0]);
                vec![1.0 - p, p]
            }
            Objective::Softmax { .. } => softmax(margins),
        }
    }
}

pub fn sigmoid(m: f64) -> f64 {
    if m >= 0.0 {
        1.0 / (1.0 + (-m).exp())
    } else {
        let e = m.exp();
        e / (1.0 + e)
    }
}

pub fn softmax(margins: &[f64]) -> Vec<f64> {
    let max = margins.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = margins.iter().map(|m| (m - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Index of the largest value, ties to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GBTParams {
    pub learning_rate: f64,
    pub l2_reg: f64,
    pub min_split_gain: f64,
    pub max_depth: usize,
    pub n_rounds: usize,
    pub min_child_hessian: f64,
    pub objective: Objective,
    /// Initial probability of the positive class for binary objectives.
    pub base_score: f64,
    pub seed: u64,
}

impl Default for GBTParams {
    fn default() -> Self {
        GBTParams {
            learning_rate: 0.3,
            l2_reg: 1.0,
            min_split_gain: 0.0,
            max_depth: 6,
            n_rounds: 100,
            min_child_hessian: 1.0,
            objective: Objective::BinaryLogistic,
            base_score: 0.5,
            seed: 0,
        }
    }
}

impl GBTParams {
    pub fn with_objective(self, objective: Objective) -> Self {
        GBTParams { objective, ..self }
    }

    pub fn validate(&self) -> Result<(), GbtError> {
        let bad = |m: &str| Err(GbtError::Params(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must lie in (0, 1]");
        }
        if !(self.l2_reg >= 0.0) || !self.l2_reg.is_finite() {
            return bad("l2_reg must be non-negative");
        }
        if !(self.min_split_gain >= 0.0) || !(self.min_child_hessian >= 0.0) {
            return bad("min_split_gain and min_child_hessian must be non-negative");
        }
        if self.max_depth == 0 || self.n_rounds == 0 {
            return bad("max_depth and n_rounds must be at least 1");
        }
        if !(self.base_score > 0.0 && self.base_score < 1.0) {
            return bad("base_score must lie in (0, 1)");
        }
        if let Objective::Softmax { classes } = self.objective {
            if classes < 2 {
                return bad("softmax needs at least 2 classes");
            }
        }
        Ok(())
    }

    /// Starting margins before any tree.
    pub fn base_margin(&self) -> Vec<f64> {
        match self.objective {
            Objective::BinaryLogistic => vec![(self.base_score / (1.0 - self.base_score)).ln()],
            Objective::Softmax { classes } => vec![0.0; classes],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GBTModel {
    pub params: GBTParams,
    pub n_features: usize,
    pub base_margin: Vec<f64>,
    /// Round-major: tree `r * n_outputs + k` is round `r`, output `k`.
    pub trees: Vec<RegressionTree>,
    /// Mean training loss before the first round and after each round.
    pub loss_history: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile<T> {
    format: String,
    version: u32,
    model: T,
}

pub(crate) fn to_versioned_json<T: Serialize>(format: &str, model: &T) -> String {
    serde_json::to_string(&ModelFile {
        format: format.to_string(),
        version: MODEL_VERSION,
        model,
    })
    .expect("models serialize")
}

pub(crate) fn from_versioned_json<T: for<'de> Deserialize<'de>>(
    format: &str,
    text: &str,
) -> Result<T, GbtError> {
    let head: serde_json::Value =
        serde_json::from_str(text).map_err(|e| GbtError::Format(e.to_string()))?;
    let found_format = head.get("format").and_then(|v| v.as_str()).unwrap_or("");
    if found_format != format {
        return Err(GbtError::Format(format!(
            "expected format {format}, found `{found_format}`"
        )));
    }
    let version = head.get("version").and_then(|v| v.as_u64());
    if version != Some(u64::from(MODEL_VERSION)) {
        return Err(GbtError::Format(format!(
            "unsupported version {version:?}, expected {MODEL_VERSION}"
        )));
    }
    let file: ModelFile<T> =
        serde_json::from_value(head).map_err(|e| GbtError::Format(e.to_string()))?;
    Ok(file.model)
}

impl GBTModel {
    pub fn n_outputs(&self) -> usize {
        self.params.objective.n_outputs()
    }

    pub fn n_classes(&self) -> usize {
        self.params.objective.n_classes()
    }

    pub fn n_rounds(&self) -> usize {
        self.trees.len() / self.n_outputs()
    }

    fn check_width(&self, n: usize) -> Result<(), GbtError> {
        if n != self.n_features {
            return Err(GbtError::Shape(format!(
                "model expects {} features, got {n}",
                self.n_features
            )));
        }
        Ok(())
    }

    pub fn predict_margin(&self, values: &[f64], valid: &[bool]) -> Result<Vec<f64>, GbtError> {
        self.check_width(values.len())?;
        self.check_width(valid.len())?;
        let k = self.n_outputs();
        let mut m = self.base_margin.clone();
        for (t, tree) in self.trees.iter().enumerate() {
            m[t % k] += tree.predict(values, valid);
        }
        Ok(m)
    }

    pub fn predict_proba(&self, values: &[f64], valid: &[bool]) -> Result<Vec<f64>, GbtError> {
        Ok(self.params.objective.probabilities(&self.predict_margin(values, valid)?))
    }

    pub fn predict_class(&self, values: &[f64], valid: &[bool]) -> Result<usize, GbtError> {
        Ok(argmax(&self.predict_proba(values, valid)?))
    }

    pub fn predict_matrix(&self, x: &FeatureMatrix) -> Result<Vec<usize>, GbtError> {
        self.check_width(x.n_cols())?;
        (0..x.n_rows())
            .map(|i| self.predict_class(x.row(i), x.row_valid(i)))
            .collect()
    }

    pub fn accuracy(&self, x: &FeatureMatrix, y: &[usize]) -> Result<f64, GbtError> {
        let pred = self.predict_matrix(x)?;
        if pred.len() != y.len() {
            return Err(GbtError::Shape(format!("{} rows, {} labels", pred.len(), y.len())));
        }
        if y.is_empty() {
            return Err(GbtError::EmptyInput);
        }
        let correct = pred.iter().zip(y).filter(|(a, b)| a == b).count();
        Ok(correct as f64 / y.len() as f64)
    }

    pub fn to_json(&self) -> String {
        to_versioned_json(MODEL_FORMAT, self)
    }

    pub fn from_json(text: &str) -> Result<Self, GbtError> {
        let model: GBTModel = from_versioned_json(MODEL_FORMAT, text)?;
        model.check_consistent()?;
        Ok(model)
    }

    pub(crate) fn check_consistent(&self) -> Result<(), GbtError> {
        self.params
            .validate()
            .map_err(|e| GbtError::Format(e.to_string()))?;
        let k = self.n_outputs();
        if self.base_margin.len() != k || !self.trees.len().is_multiple_of(k) {
            return Err(GbtError::Format("tree count does not match the objective".into()));
        }
        for tree in &self.trees {
            tree.check(self.n_features).map_err(GbtError::Format)?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), GbtError> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(self.to_json().as_bytes())?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GbtError> {
        let mut text = String::new();
        BufReader::new(File::open(path)?).read_to_string(&mut text)?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf_model(objective: Objective, n_features: usize) -> GBTModel {
        let params = GBTParams::default().with_objective(objective);
        GBTModel {
            params,
            n_features,
            base_margin: params.base_margin(),
            trees: Vec::new(),
            loss_history: Vec::new(),
        }
    }

    #[test]
    fn zero_round_binary_is_one_half() {
        let m = leaf_model(Objective::BinaryLogistic, 2);
        assert_eq!(m.predict_proba(&[0.0, 1.0], &[true, true]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(m.predict_class(&[0.0, 1.0], &[true, true]).unwrap(), 0);
    }

    #[test]
    fn equal_softmax_margins_are_uniform() {
        let p = softmax(&[2.5; 4]);
        assert!(p.iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn shape_mismatch() {
        let m = leaf_model(Objective::Softmax { classes: 3 }, 4);
        assert!(matches!(m.predict_margin(&[0.0; 3], &[true; 3]), Err(GbtError::Shape(_))));
    }

    #[test]
    fn logistic_loss_is_stable() {
        let o = Objective::BinaryLogistic;
        assert!((o.loss(&[800.0], 1)).abs() < 1e-12);
        assert!((o.loss(&[-800.0], 1) - 800.0).abs() < 1e-9);
        assert!((o.loss(&[0.0], 0) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn params_validation() {
        assert!(GBTParams::default().validate().is_ok());
        let p = GBTParams {
            learning_rate: 1.5,
            ..GBTParams::default()
        };
        assert!(p.validate().is_err());
        let p = GBTParams {
            max_depth: 0,
            ..GBTParams::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn wrong_version_is_rejected() {
        let m = leaf_model(Objective::BinaryLogistic, 1);
        let text = m.to_json().replace("\"version\":1", "\"version\":2");
        assert!(matches!(GBTModel::from_json(&text), Err(GbtError::Format(_))));
        let json = m.to_json();
        assert!(GBTModel::from_json(&json[..json.len() / 2]).is_err());
    }
}
