//! One-vs-rest linear SVM trained with Pegasos-style stochastic subgradient
//! steps on standardized features.
//!
//! Each class model minimizes `λ/2·‖w‖² + mean(max(0, 1 − y·w·x̂))` where `x̂`
//! is the standardized input with a constant 1 appended (the bias is the last
//! weight and is regularized with the rest). Steps use the rate `1/(λt)`,
//! each iterate is projected onto the ball of radius `1/√λ`, and the model
//! keeps the running average of the iterates. Missing cells standardize to 0.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::table::LabelColumns;
use crate::gbt::{argmax, OutputName};
use crate::matrix::FeatureMatrix;

pub const SVM_FORMAT: &str = "walkerpose-svm";
pub const SVM_VERSION: u32 = 1;
pub const STD_EPSILON: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("degenerate target: {0}")]
    DegenerateTarget(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("row {row}, column {col}: non-finite value")]
    NonFinite { row: usize, col: usize },
    #[error("model format: {0}")]
    Format(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SVMParams {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SVMParams {
    fn default() -> Self {
        SVMParams {
            lambda: 1e-4,
            epochs: 50,
            seed: 0,
        }
    }
}

impl SVMParams {
    pub fn validate(&self) -> Result<(), SvmError> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(SvmError::Params("lambda must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(SvmError::Params("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-column mean and standard deviation over valid cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &FeatureMatrix) -> Self {
        let d = x.n_cols();
        let mut mean = vec![0.0; d];
        let mut std = vec![1.0; d];
        for j in 0..d {
            let vals: Vec<f64> = (0..x.n_rows()).filter_map(|i| x.cell(i, j)).collect();
            if vals.is_empty() {
                continue;
            }
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / vals.len() as f64;
            mean[j] = m;
            std[j] = if var.sqrt() < STD_EPSILON { 1.0 } else { var.sqrt() };
        }
        Standardizer { mean, std }
    }

    pub fn identity(d: usize) -> Self {
        Standardizer {
            mean: vec![0.0; d],
            std: vec![1.0; d],
        }
    }

    pub fn standardize(&self, values: &[f64], valid: &[bool]) -> Vec<f64> {
        values
            .iter()
            .zip(valid)
            .enumerate()
            .map(|(j, (&v, &ok))| if ok { (v - self.mean[j]) / self.std[j] } else { 0.0 })
            .collect()
    }

    pub fn destandardize(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .enumerate()
            .map(|(j, &v)| v * self.std[j] + self.mean[j])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSVMModel {
    pub params: SVMParams,
    pub n_classes: usize,
    pub n_features: usize,
    /// One weight vector per class, features first and the bias last.
    pub weights: Vec<Vec<f64>>,
    pub standardizer: Standardizer,
    /// Objective of each class's averaged iterate after every epoch.
    pub objective_history: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn augmented_rows(x: &FeatureMatrix, s: &Standardizer) -> Vec<Vec<f64>> {
    (0..x.n_rows())
        .map(|i| {
            let mut z = s.standardize(x.row(i), x.row_valid(i));
            z.push(1.0);
            z
        })
        .collect()
}

/// `λ/2·‖w‖² + mean hinge loss` of a binary model on ±1 targets.
pub fn hinge_objective(w: &[f64], rows: &[Vec<f64>], signs: &[f64], lambda: f64) -> f64 {
    let hinge: f64 = rows
        .iter()
        .zip(signs)
        .map(|(z, &y)| (1.0 - y * dot(w, z)).max(0.0))
        .sum();
    0.5 * lambda * dot(w, w) + hinge / rows.len() as f64
}

fn train_binary(
    rows: &[Vec<f64>],
    signs: &[f64],
    params: &SVMParams,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, Vec<f64>) {
    let d = rows[0].len();
    let lambda = params.lambda;
    let radius = 1.0 / lambda.sqrt();
    let mut w = vec![0.0; d];
    let mut avg = vec![0.0; d];
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut history = Vec::with_capacity(params.epochs);
    let mut t = 0u64;
    for _ in 0..params.epochs {
        order.shuffle(rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let z = &rows[i];
            let violated = signs[i] * dot(&w, z) < 1.0;
            let shrink = 1.0 - eta * lambda;
            for wj in &mut w {
                *wj *= shrink;
            }
            if violated {
                for (wj, zj) in w.iter_mut().zip(z) {
                    *wj += eta * signs[i] * zj;
                }
            }
            let norm = dot(&w, &w).sqrt();
            if norm > radius {
                let f = radius / norm;
                for wj in &mut w {
                    *wj *= f;
                }
            }
            let inv = 1.0 / t as f64;
            for (a, wj) in avg.iter_mut().zip(&w) {
                *a += (wj - *a) * inv;
            }
        }
        history.push(hinge_objective(&avg, rows, signs, lambda));
    }
    (avg, history)
}

pub fn train_svm(
    x: &FeatureMatrix,
    y: &[usize],
    n_classes: usize,
    params: &SVMParams,
) -> Result<LinearSVMModel, SvmError> {
    params.validate()?;
    if x.n_rows() == 0 || y.len() != x.n_rows() {
        return Err(SvmError::Shape(format!("{} rows, {} labels", x.n_rows(), y.len())));
    }
    if let Some(&bad) = y.iter().find(|&&l| l >= n_classes) {
        return Err(SvmError::Shape(format!("label {bad} outside 0..{n_classes}")));
    }
    for i in 0..x.n_rows() {
        for j in 0..x.n_cols() {
            if x.is_valid(i, j) && !x.get(i, j).is_finite() {
                return Err(SvmError::NonFinite { row: i, col: j });
            }
        }
    }
    if n_classes < 2 || y.iter().all(|&l| l == y[0]) {
        return Err(SvmError::DegenerateTarget(
            "at least two classes must be present".into(),
        ));
    }
    let standardizer = Standardizer::fit(x);
    let rows = augmented_rows(x, &standardizer);
    let mut weights = Vec::with_capacity(n_classes);
    let mut objective_history = Vec::with_capacity(n_classes);
    for c in 0..n_classes {
        let signs: Vec<f64> = y.iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(c as u64);
        let (w, h) = train_binary(&rows, &signs, params, &mut rng);
        weights.push(w);
        objective_history.push(h);
    }
    Ok(LinearSVMModel {
        params: *params,
        n_classes,
        n_features: x.n_cols(),
        weights,
        standardizer,
        objective_history,
    })
}

impl LinearSVMModel {
    /// Per-class margins of an already standardized input (without the bias entry).
    pub fn margins_standardized(&self, z: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|w| dot(&w[..z.len()], z) + w[z.len()])
            .collect()
    }

    pub fn predict(&self, values: &[f64], valid: &[bool]) -> Result<(usize, Vec<f64>), SvmError> {
        if values.len() != self.n_features || valid.len() != self.n_features {
            return Err(SvmError::Shape(format!(
                "model expects {} features, got {}",
                self.n_features,
                values.len()
            )));
        }
        let m = self.margins_standardized(&self.standardizer.standardize(values, valid));
        Ok((argmax(&m), m))
    }

    pub fn predict_matrix(&self, x: &FeatureMatrix) -> Result<Vec<usize>, SvmError> {
        (0..x.n_rows())
            .map(|i| self.predict(x.row(i), x.row_valid(i)).map(|p| p.0))
            .collect()
    }

    pub fn accuracy(&self, x: &FeatureMatrix, y: &[usize]) -> Result<f64, SvmError> {
        let p = self.predict_matrix(x)?;
        if p.len() != y.len() || y.is_empty() {
            return Err(SvmError::Shape(format!("{} rows, {} labels", p.len(), y.len())));
        }
        Ok(p.iter().zip(y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64)
    }

    /// Copy with every weight (and bias) multiplied by `c`.
    pub fn scaled(&self, c: f64) -> LinearSVMModel {
        let mut out = self.clone();
        for w in &mut out.weights {
            for v in w.iter_mut() {
                *v *= c;
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        crate::gbt::to_versioned_json(SVM_FORMAT, self)
    }

    pub fn from_json(text: &str) -> Result<Self, SvmError> {
        let m: LinearSVMModel = crate::gbt::from_versioned_json(SVM_FORMAT, text)
            .map_err(|e| SvmError::Format(e.to_string()))?;
        let d = m.n_features;
        if m.weights.len() != m.n_classes
            || m.weights.iter().any(|w| w.len() != d + 1)
            || m.standardizer.mean.len() != d
            || m.standardizer.std.len() != d
        {
            return Err(SvmError::Format("inconsistent dimensions".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SvmError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SvmError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// One SVM per output of the multi-output task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiOutputSVM {
    pub walker_choice: LinearSVMModel,
    pub initial_position: LinearSVMModel,
    pub posture_type: LinearSVMModel,
}

pub const MULTI_SVM_FORMAT: &str = "walkerpose-multi-svm";

impl MultiOutputSVM {
    pub fn model(&self, output: OutputName) -> &LinearSVMModel {
        match output {
            OutputName::WalkerChoice => &self.walker_choice,
            OutputName::InitialPosition => &self.initial_position,
            OutputName::PostureType => &self.posture_type,
        }
    }

    pub fn to_json(&self) -> String {
        crate::gbt::to_versioned_json(MULTI_SVM_FORMAT, self)
    }

    pub fn from_json(text: &str) -> Result<Self, SvmError> {
        let m: MultiOutputSVM = crate::gbt::from_versioned_json(MULTI_SVM_FORMAT, text)
            .map_err(|e| SvmError::Format(e.to_string()))?;
        for name in OutputName::ALL {
            LinearSVMModel::from_json(&m.model(name).to_json())?;
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SvmError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SvmError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Trains the three outputs; binary outputs use two classes, posture `posture_classes`.
pub fn train_multi_svm(
    x: &FeatureMatrix,
    labels: &LabelColumns,
    params: &SVMParams,
    posture_classes: usize,
) -> Result<MultiOutputSVM, SvmError> {
    Ok(MultiOutputSVM {
        walker_choice: train_svm(x, &labels.walker, 2, params)?,
        initial_position: train_svm(x, &labels.init, 2, params)?,
        posture_type: train_svm(x, &labels.posture, posture_classes, params)?,
    })
}
