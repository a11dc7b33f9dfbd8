//! Three independent boosted models over one feature matrix, plus the
//! single three-way risk model.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{from_versioned_json, to_versioned_json, train_gbt, GBTModel, GBTParams, GbtError, Objective};
use crate::features::table::LabelColumns;
use crate::matrix::FeatureMatrix;

pub const MULTI_FORMAT: &str = "walkerpose-multi-gbt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputName {
    WalkerChoice,
    InitialPosition,
    PostureType,
}

impl OutputName {
    pub const ALL: [OutputName; 3] = [
        OutputName::WalkerChoice,
        OutputName::InitialPosition,
        OutputName::PostureType,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OutputName::WalkerChoice => "walker_choice",
            OutputName::InitialPosition => "initial_position",
            OutputName::PostureType => "posture_type",
        }
    }

    pub fn labels(self, columns: &LabelColumns) -> &[usize] {
        match self {
            OutputName::WalkerChoice => &columns.walker,
            OutputName::InitialPosition => &columns.init,
            OutputName::PostureType => &columns.posture,
        }
    }
}

impl fmt::Display for OutputName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiOutputGBT {
    pub walker_choice: GBTModel,
    pub initial_position: GBTModel,
    pub posture_type: GBTModel,
}

/// Predicted class of each output for one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultiPrediction {
    pub walker_choice: usize,
    pub initial_position: usize,
    pub posture_type: usize,
}

impl MultiOutputGBT {
    pub fn model(&self, output: OutputName) -> &GBTModel {
        match output {
            OutputName::WalkerChoice => &self.walker_choice,
            OutputName::InitialPosition => &self.initial_position,
            OutputName::PostureType => &self.posture_type,
        }
    }

    pub fn n_features(&self) -> usize {
        self.posture_type.n_features
    }

    pub fn predict(&self, values: &[f64], valid: &[bool]) -> Result<MultiPrediction, GbtError> {
        Ok(MultiPrediction {
            walker_choice: self.walker_choice.predict_class(values, valid)?,
            initial_position: self.initial_position.predict_class(values, valid)?,
            posture_type: self.posture_type.predict_class(values, valid)?,
        })
    }

    /// Accuracy per output, in [`OutputName::ALL`] order.
    pub fn accuracies(&self, x: &FeatureMatrix, labels: &LabelColumns) -> Result<[f64; 3], GbtError> {
        let mut out = [0.0; 3];
        for (o, name) in out.iter_mut().zip(OutputName::ALL) {
            *o = self.model(name).accuracy(x, name.labels(labels))?;
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        to_versioned_json(MULTI_FORMAT, self)
    }

    pub fn from_json(text: &str) -> Result<Self, GbtError> {
        let m: MultiOutputGBT = from_versioned_json(MULTI_FORMAT, text)?;
        for name in OutputName::ALL {
            m.model(name).check_consistent()?;
        }
        if m.walker_choice.n_features != m.n_features() || m.initial_position.n_features != m.n_features() {
            return Err(GbtError::Format("outputs disagree on the feature count".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), GbtError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GbtError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Trains walker choice and initial position as binary tasks and posture type
/// as a `posture_classes`-way softmax, concurrently. Returns the models and
/// their training accuracies.
pub fn train_multi_output(
    x: &FeatureMatrix,
    labels: &LabelColumns,
    params: &GBTParams,
    posture_classes: usize,
) -> Result<(MultiOutputGBT, [f64; 3]), GbtError> {
    for name in OutputName::ALL {
        if name.labels(labels).len() != x.n_rows() {
            return Err(GbtError::Schema(format!(
                "{name} has {} labels for {} rows",
                name.labels(labels).len(),
                x.n_rows()
            )));
        }
    }
    let binary = params.with_objective(Objective::BinaryLogistic);
    let posture = params.with_objective(Objective::Softmax {
        classes: posture_classes,
    });
    let (walker, init, post) = std::thread::scope(|s| {
        let w = s.spawn(|| train_gbt(x, &labels.walker, &binary));
        let i = s.spawn(|| train_gbt(x, &labels.init, &binary));
        let p = train_gbt(x, &labels.posture, &posture);
        (
            w.join().expect("training thread panicked"),
            i.join().expect("training thread panicked"),
            p,
        )
    });
    let model = MultiOutputGBT {
        walker_choice: walker?,
        initial_position: init?,
        posture_type: post?,
    };
    let acc = model.accuracies(x, labels)?;
    Ok((model, acc))
}

/// Three-way standing / sitting / bad-posture model.
pub fn train_single_risk(
    x: &FeatureMatrix,
    risk: &[usize],
    params: &GBTParams,
) -> Result<GBTModel, GbtError> {
    train_gbt(x, risk, &params.with_objective(Objective::Softmax { classes: 3 }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (FeatureMatrix, LabelColumns) {
        let mut x = FeatureMatrix::new(3);
        let mut labels = LabelColumns::default();
        for i in 0..60 {
            let a = (i % 2) as f64;
            let b = ((i / 2) % 2) as f64;
            let c = (i % 5) as f64;
            x.push_row(&[a + 0.01 * i as f64, b, c], &[true; 3]).unwrap();
            labels.walker.push(i % 2);
            labels.init.push((i / 2) % 2);
            labels.posture.push(i % 5);
        }
        (x, labels)
    }

    #[test]
    fn separable_toy_tasks_fit_exactly() {
        let (x, labels) = toy();
        let params = GBTParams {
            n_rounds: 20,
            min_child_hessian: 0.1,
            ..GBTParams::default()
        };
        let (m, acc) = train_multi_output(&x, &labels, &params, 5).unwrap();
        assert_eq!(acc, [1.0, 1.0, 1.0]);
        assert_eq!(m.posture_type.n_outputs(), 5);
        let back = MultiOutputGBT::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn constant_walker_predicts_true() {
        let (x, mut labels) = toy();
        labels.walker = vec![1; 60];
        let params = GBTParams {
            n_rounds: 5,
            ..GBTParams::default()
        };
        let (m, _) = train_multi_output(&x, &labels, &params, 5).unwrap();
        assert!(m.walker_choice.predict_matrix(&x).unwrap().iter().all(|&p| p == 1));
        assert!(m.walker_choice.predict_class(&[9.0, 9.0, 9.0], &[true; 3]).unwrap() == 1);
    }

    #[test]
    fn missing_column_is_a_schema_error() {
        let (x, mut labels) = toy();
        labels.init.clear();
        let e = train_multi_output(&x, &labels, &GBTParams::default(), 5).unwrap_err();
        assert!(matches!(e, GbtError::Schema(_)));
    }

    #[test]
    fn all_bad_posture_risk_is_constant() {
        let (x, _) = toy();
        let params = GBTParams {
            n_rounds: 4,
            ..GBTParams::default()
        };
        let m = train_single_risk(&x, &[2; 60], &params).unwrap();
        assert_eq!(m.n_classes(), 3);
        assert!(m.predict_matrix(&x).unwrap().iter().all(|&p| p == 2));
    }
}
