//! End-to-end runs shared by the command line tool and the examples:
//! loading inputs, training, evaluating and writing outputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::eval::{evaluate, split_dataset, Report, Section, Split, SplitSpec};
use crate::features::table::{label_columns, read_feature_csv, LabelColumns};
use crate::features::{dataset_matrix, FeatureMode, FeatureSpec};
use crate::gbt::{
    train_multi_output, train_single_risk, GBTModel, GBTParams, MultiOutputGBT, OutputName,
};
use crate::matrix::FeatureMatrix;
use crate::pose::io::read_dataset;
use crate::pose::{Dataset, LabelVocabulary, RiskLabel};
use crate::svm::{train_multi_svm, train_svm, LinearSVMModel, MultiOutputSVM, SVMParams, MULTI_SVM_FORMAT, SVM_FORMAT};

pub const MODEL_GBT_MULTI: &str = "GBT multi-output";
pub const MODEL_GBT_RISK: &str = "GBT single-output";
pub const MODEL_SVM: &str = "SVM";
pub const RISK_OUTPUT: &str = "risk_label";

/// Failure classified by the exit status it maps to.
#[derive(Debug, Error)]
pub enum WorkflowError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("internal: {0}")]
    Internal(String),
}

impl WorkflowError {
    pub fn exit_code(&self) -> i32 {
        match self {
            WorkflowError::Usage(_) => 1,
            WorkflowError::Data(_) => 2,
            WorkflowError::Internal(_) => 3,
        }
    }
}

macro_rules! data_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for WorkflowError {
            fn from(e: $t) -> Self {
                WorkflowError::Data(e.to_string())
            }
        }
    )*};
}

data_errors!(
    std::io::Error,
    crate::pose::io::DatasetIoError,
    crate::pose::PoseError,
    crate::features::BatchExtractError,
    crate::features::FeatureError,
    crate::features::table::CsvError,
    crate::gbt::GbtError,
    crate::svm::SvmError,
    crate::eval::EvalError,
    crate::synth::SynthError,
    crate::geometric::GeometricError,
    crate::serve::ServeError
);

/// Removes every registered file unless [`OutputGuard::commit`] is called.
#[derive(Debug, Default)]
pub struct OutputGuard {
    paths: Vec<PathBuf>,
    committed: bool,
}

impl OutputGuard {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn write(&mut self, path: impl AsRef<Path>, contents: impl AsRef<[u8]>) -> Result<(), WorkflowError> {
        let path = path.as_ref().to_path_buf();
        self.paths.push(path.clone());
        std::fs::write(&path, contents)
            .map_err(|e| WorkflowError::Data(format!("{}: {e}", path.display())))
    }

    /// Registers a file written by other code.
    pub fn track(&mut self, path: impl AsRef<Path>) {
        self.paths.push(path.as_ref().to_path_buf());
    }

    pub fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for OutputGuard {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.paths {
                let _ = std::fs::remove_file(p);
            }
        }
    }
}

/// Features plus every target column, with risk always filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub x: FeatureMatrix,
    pub labels: LabelColumns,
    pub risk: Vec<usize>,
    pub vocabulary: LabelVocabulary,
}

pub fn risk_column(labels: &LabelColumns, vocabulary: &LabelVocabulary) -> Result<Vec<usize>, WorkflowError> {
    if let Some(r) = &labels.risk {
        return Ok(r.clone());
    }
    labels
        .posture
        .iter()
        .map(|&p| {
            vocabulary
                .risk_of(p)
                .map(RiskLabel::as_class)
                .ok_or_else(|| WorkflowError::Data(format!("posture id {p} outside the vocabulary")))
        })
        .collect()
}

pub fn dataset_table(dataset: &Dataset, mode: FeatureMode, spec: &FeatureSpec) -> Result<Table, WorkflowError> {
    let x = dataset_matrix(dataset, mode, spec)?;
    let labels = label_columns(dataset);
    let risk = risk_column(&labels, &dataset.vocabulary)?;
    Ok(Table {
        x,
        labels,
        risk,
        vocabulary: dataset.vocabulary.clone(),
    })
}

fn is_feature_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Reads a feature CSV (default vocabulary) or a dataset NDJSON file.
pub fn load_table(path: &Path, mode: FeatureMode, spec: &FeatureSpec) -> Result<Table, WorkflowError> {
    let with_path = |e: WorkflowError| match e {
        WorkflowError::Data(m) => WorkflowError::Data(format!("{}: {m}", path.display())),
        other => other,
    };
    if is_feature_csv(path) {
        if mode != FeatureMode::Features {
            return Err(WorkflowError::Usage("feature CSV files hold engineered features only".into()));
        }
        let (x, labels) = read_feature_csv(path).map_err(|e| with_path(e.into()))?;
        let vocabulary = LabelVocabulary::default_postures();
        let risk = risk_column(&labels, &vocabulary).map_err(with_path)?;
        Ok(Table {
            x,
            labels,
            risk,
            vocabulary,
        })
    } else {
        let dataset = read_dataset(path).map_err(|e| with_path(e.into()))?;
        dataset_table(&dataset, mode, spec).map_err(with_path)
    }
}

/// Any persisted model, recognized by its format tag.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    MultiGbt(MultiOutputGBT),
    RiskGbt(GBTModel),
    MultiSvm(MultiOutputSVM),
    RiskSvm(LinearSVMModel),
}

impl AnyModel {
    pub fn from_json(text: &str) -> Result<Self, WorkflowError> {
        let v: serde_json::Value =
            serde_json::from_str(text).map_err(|e| WorkflowError::Data(format!("model file: {e}")))?;
        match v.get("format").and_then(|f| f.as_str()) {
            Some(crate::gbt::multi::MULTI_FORMAT) => Ok(AnyModel::MultiGbt(MultiOutputGBT::from_json(text)?)),
            Some(crate::gbt::MODEL_FORMAT) => Ok(AnyModel::RiskGbt(GBTModel::from_json(text)?)),
            Some(MULTI_SVM_FORMAT) => Ok(AnyModel::MultiSvm(MultiOutputSVM::from_json(text)?)),
            Some(SVM_FORMAT) => Ok(AnyModel::RiskSvm(LinearSVMModel::from_json(text)?)),
            other => Err(WorkflowError::Data(format!("unrecognized model format {other:?}"))),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, WorkflowError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| WorkflowError::Data(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        match self {
            AnyModel::MultiGbt(m) => m.to_json(),
            AnyModel::RiskGbt(m) => m.to_json(),
            AnyModel::MultiSvm(m) => m.to_json(),
            AnyModel::RiskSvm(m) => m.to_json(),
        }
    }

    pub fn report_name(&self) -> &'static str {
        match self {
            AnyModel::MultiGbt(_) => MODEL_GBT_MULTI,
            AnyModel::RiskGbt(_) => MODEL_GBT_RISK,
            AnyModel::MultiSvm(_) | AnyModel::RiskSvm(_) => MODEL_SVM,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            AnyModel::MultiGbt(m) => m.n_features(),
            AnyModel::RiskGbt(m) => m.n_features,
            AnyModel::MultiSvm(m) => m.posture_type.n_features,
            AnyModel::RiskSvm(m) => m.n_features,
        }
    }

    /// Predictions per output name for every row of `x`, with the class count.
    pub fn predict_outputs(&self, x: &FeatureMatrix) -> Result<Vec<OutputPredictions>, WorkflowError> {
        Ok(match self {
            AnyModel::MultiGbt(m) => OutputName::ALL
                .iter()
                .map(|&o| Ok((o.name(), m.model(o).predict_matrix(x)?, m.model(o).n_classes())))
                .collect::<Result<_, WorkflowError>>()?,
            AnyModel::RiskGbt(m) => vec![(RISK_OUTPUT, m.predict_matrix(x)?, m.n_classes())],
            AnyModel::MultiSvm(m) => OutputName::ALL
                .iter()
                .map(|&o| Ok((o.name(), m.model(o).predict_matrix(x)?, m.model(o).n_classes)))
                .collect::<Result<_, WorkflowError>>()?,
            AnyModel::RiskSvm(m) => vec![(RISK_OUTPUT, m.predict_matrix(x)?, m.n_classes)],
        })
    }

    /// Metrics of every output the model produces, appended to `report` under `section`.
    pub fn evaluate_into(&self, table: &Table, section: Section, report: &mut Report) -> Result<(), WorkflowError> {
        if self.n_features() != table.x.n_cols() {
            return Err(WorkflowError::Data(format!(
                "model expects {} features, input has {}",
                self.n_features(),
                table.x.n_cols()
            )));
        }
        for (output, predicted, k) in self.predict_outputs(&table.x)? {
            let truth = truth_column(table, output);
            report.push(self.report_name(), output, section, evaluate(truth, &predicted, k)?);
        }
        Ok(())
    }
}

fn truth_column<'a>(table: &'a Table, output: &str) -> &'a [usize] {
    match output {
        "walker_choice" => &table.labels.walker,
        "initial_position" => &table.labels.init,
        "posture_type" => &table.labels.posture,
        _ => &table.risk,
    }
}

/// Output name, predicted class per row, and class count.
pub type OutputPredictions = (&'static str, Vec<usize>, usize);

/// Settings of a full split / train / evaluate run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub split: SplitSpec,
    pub gbt: GBTParams,
    pub svm: SVMParams,
    pub feature_mode: FeatureMode,
    pub feature_spec: FeatureSpec,
    pub train_risk: bool,
    pub train_svm: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            split: SplitSpec::default(),
            gbt: GBTParams::default(),
            svm: SVMParams::default(),
            feature_mode: FeatureMode::Features,
            feature_spec: FeatureSpec::default(),
            train_risk: true,
            train_svm: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub split: Split,
    pub report: Report,
    pub multi: MultiOutputGBT,
    /// Training accuracy of each output in [`OutputName::ALL`] order.
    pub train_accuracy: [f64; 3],
    pub risk: Option<GBTModel>,
    pub risk_train_accuracy: Option<f64>,
    pub svm: Option<MultiOutputSVM>,
    pub svm_risk: Option<LinearSVMModel>,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
}

fn subset(table: &Table, idx: &[usize]) -> Table {
    Table {
        x: table.x.select_rows(idx),
        labels: table.labels.select(idx),
        risk: idx.iter().map(|&i| table.risk[i]).collect(),
        vocabulary: table.vocabulary.clone(),
    }
}

/// Splits the dataset, trains every model on the pooled training part and
/// evaluates on the pooled test part and on the held-out participants.
pub fn run_pipeline(dataset: &Dataset, config: &PipelineConfig) -> Result<PipelineRun, WorkflowError> {
    let mut timings = BTreeMap::new();
    let t = Instant::now();
    let table = dataset_table(dataset, config.feature_mode, &config.feature_spec)?;
    let split = split_dataset(dataset, &config.split)?;
    timings.insert("features".to_string(), t.elapsed().as_secs_f64());
    let train = subset(&table, &split.train);
    let sections = [
        (Section::TrainingAndValidation, subset(&table, &split.test)),
        (Section::Prediction, subset(&table, &split.holdout)),
    ];
    let posture_classes = dataset.vocabulary.len();

    let t = Instant::now();
    let (multi, train_accuracy) = train_multi_output(&train.x, &train.labels, &config.gbt, posture_classes)?;
    timings.insert("gbt_multi".to_string(), t.elapsed().as_secs_f64());

    let (risk, risk_train_accuracy) = if config.train_risk {
        let t = Instant::now();
        let m = train_single_risk(&train.x, &train.risk, &config.gbt)?;
        let acc = m.accuracy(&train.x, &train.risk)?;
        timings.insert("gbt_risk".to_string(), t.elapsed().as_secs_f64());
        (Some(m), Some(acc))
    } else {
        (None, None)
    };

    let (svm, svm_risk) = if config.train_svm {
        let t = Instant::now();
        let multi_svm = train_multi_svm(&train.x, &train.labels, &config.svm, posture_classes)?;
        let risk_svm = train_svm(&train.x, &train.risk, RiskLabel::ALL.len(), &config.svm)?;
        timings.insert("svm".to_string(), t.elapsed().as_secs_f64());
        (Some(multi_svm), Some(risk_svm))
    } else {
        (None, None)
    };

    let mut models = vec![AnyModel::MultiGbt(multi.clone())];
    models.extend(risk.clone().map(AnyModel::RiskGbt));
    models.extend(svm.clone().map(AnyModel::MultiSvm));
    models.extend(svm_risk.clone().map(AnyModel::RiskSvm));
    let mut report = Report::default();
    for model in &models {
        for (section, part) in &sections {
            if part.x.n_rows() > 0 {
                model.evaluate_into(part, *section, &mut report)?;
            }
        }
    }
    Ok(PipelineRun {
        split,
        report,
        multi,
        train_accuracy,
        risk,
        risk_train_accuracy,
        svm,
        svm_risk,
        timings,
    })
}

impl PipelineRun {
    /// Writes `report.txt`, `metrics.csv`, `f1_comparison.csv`, `report.json`
    /// and the trained models into `dir`.
    pub fn write_outputs(&self, dir: &Path) -> Result<Vec<PathBuf>, WorkflowError> {
        std::fs::create_dir_all(dir)?;
        let mut guard = OutputGuard::new();
        let mut files: Vec<(String, String)> = vec![
            ("report.txt".into(), self.report.to_text()),
            ("metrics.csv".into(), self.report.to_csv()),
            ("f1_comparison.csv".into(), self.report.f1_comparison_csv()),
            ("report.json".into(), self.report.to_json()),
            ("gbt_multi.json".into(), self.multi.to_json()),
        ];
        if let Some(m) = &self.risk {
            files.push(("gbt_risk.json".into(), m.to_json()));
        }
        if let Some(m) = &self.svm {
            files.push(("svm_multi.json".into(), m.to_json()));
        }
        if let Some(m) = &self.svm_risk {
            files.push(("svm_risk.json".into(), m.to_json()));
        }
        let mut written = Vec::new();
        for (name, body) in files {
            let p = dir.join(name);
            guard.write(&p, body)?;
            written.push(p);
        }
        guard.commit();
        Ok(written)
    }
}
