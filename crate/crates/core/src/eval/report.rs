use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::MetricsReport;
use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    /// Held-back 20% of the pooled participants.
    TrainingAndValidation,
    /// Participants never seen in training.
    Prediction,
}

impl Section {
    pub const ALL: [Section; 2] = [Section::TrainingAndValidation, Section::Prediction];

    pub fn title(self) -> &'static str {
        match self {
            Section::TrainingAndValidation => "Training and Validation",
            Section::Prediction => "Prediction",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Section::TrainingAndValidation => "training_and_validation",
            Section::Prediction => "prediction",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.key() == key)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub model: String,
    pub output: String,
    pub section: Section,
    pub metrics: MetricsReport,
}

/// One line of the metrics CSV (macro averages).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub model: String,
    pub section: Section,
    pub output: String,
    pub accuracy: f64,
    pub precision: f64,
    pub f1: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub n_samples: u64,
}

pub const METRICS_CSV_HEADER: &str = "model,section,output,accuracy,precision,f1,sensitivity,specificity,n";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    pub evaluations: Vec<Evaluation>,
}

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for i in items {
        if !out.iter().any(|o| o == i) {
            out.push(i.to_string());
        }
    }
    out
}

impl Report {
    pub fn push(&mut self, model: &str, output: &str, section: Section, metrics: MetricsReport) {
        self.evaluations.push(Evaluation {
            model: model.to_string(),
            output: output.to_string(),
            section,
            metrics,
        });
    }

    pub fn models(&self) -> Vec<String> {
        first_seen(self.evaluations.iter().map(|e| e.model.as_str()))
    }

    pub fn outputs(&self) -> Vec<String> {
        first_seen(self.evaluations.iter().map(|e| e.output.as_str()))
    }

    pub fn get(&self, model: &str, output: &str, section: Section) -> Option<&Evaluation> {
        self.evaluations
            .iter()
            .find(|e| e.model == model && e.output == output && e.section == section)
    }

    /// One table per model, each with both sections and the five metric columns (macro averages).
    pub fn to_text(&self) -> String {
        let outputs = self.outputs();
        let width = outputs.iter().map(String::len).max().unwrap_or(6).max(6);
        let mut s = String::new();
        for model in self.models() {
            let outputs: Vec<&String> = outputs
                .iter()
                .filter(|o| self.evaluations.iter().any(|e| e.model == model && &e.output == *o))
                .collect();
            let _ = writeln!(s, "{model}");
            for section in Section::ALL {
                let _ = writeln!(s, "  {}", section.title());
                let _ = writeln!(
                    s,
                    "    {:<width$}  {:>8}  {:>9}  {:>8}  {:>11}  {:>11}",
                    "Output", "Accuracy", "Precision", "F1 Score", "Sensitivity", "Specificity"
                );
                for &output in &outputs {
                    match self.get(&model, output, section) {
                        Some(e) => {
                            let m = &e.metrics;
                            let _ = writeln!(
                                s,
                                "    {:<width$}  {:>8.3}  {:>9.3}  {:>8.3}  {:>11.3}  {:>11.3}",
                                output,
                                m.accuracy,
                                m.macro_avg.precision,
                                m.macro_avg.f1,
                                m.macro_avg.sensitivity,
                                m.macro_avg.specificity
                            );
                        }
                        None => {
                            let _ = writeln!(s, "    {output:<width$}  (no evaluation)");
                        }
                    }
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn rows(&self) -> Vec<MetricRow> {
        self.evaluations
            .iter()
            .map(|e| MetricRow {
                model: e.model.clone(),
                section: e.section,
                output: e.output.clone(),
                accuracy: e.metrics.accuracy,
                precision: e.metrics.macro_avg.precision,
                f1: e.metrics.macro_avg.f1,
                sensitivity: e.metrics.macro_avg.sensitivity,
                specificity: e.metrics.macro_avg.specificity,
                n_samples: e.metrics.n_samples,
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(METRICS_CSV_HEADER);
        s.push('\n');
        for r in self.rows() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                r.model,
                r.section.key(),
                r.output,
                r.accuracy,
                r.precision,
                r.f1,
                r.sensitivity,
                r.specificity,
                r.n_samples
            );
        }
        s
    }

    /// Macro F1 of every model side by side, one line per output and section.
    pub fn f1_comparison_csv(&self) -> String {
        let models = self.models();
        let mut s = String::from("output,section");
        for m in &models {
            s.push(',');
            s.push_str(m);
        }
        s.push('\n');
        for output in self.outputs() {
            for section in Section::ALL {
                let _ = write!(s, "{output},{}", section.key());
                for m in &models {
                    s.push(',');
                    if let Some(e) = self.get(m, &output, section) {
                        let _ = write!(s, "{}", e.metrics.macro_avg.f1);
                    }
                }
                s.push('\n');
            }
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        serde_json::from_str(text).map_err(|e| EvalError::Format(e.to_string()))
    }
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricRow>, EvalError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| EvalError::Format(e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    if header.join(",") != METRICS_CSV_HEADER {
        return Err(EvalError::Format("unexpected metrics CSV header".into()));
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| EvalError::Format(e.to_string()))?;
        let bad = |what: &str| EvalError::Format(format!("row {}: bad {what}", i + 2));
        let num = |k: usize, what: &str| rec[k].parse::<f64>().map_err(|_| bad(what));
        out.push(MetricRow {
            model: rec[0].to_string(),
            section: Section::from_key(&rec[1]).ok_or_else(|| bad("section"))?,
            output: rec[2].to_string(),
            accuracy: num(3, "accuracy")?,
            precision: num(4, "precision")?,
            f1: num(5, "f1")?,
            sensitivity: num(6, "sensitivity")?,
            specificity: num(7, "specificity")?,
            n_samples: rec[8].parse().map_err(|_| bad("n"))?,
        });
    }
    Ok(out)
}
