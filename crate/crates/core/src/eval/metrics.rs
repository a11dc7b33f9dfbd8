use serde::{Deserialize, Serialize};

use super::EvalError;

/// Counts with rows = true class, columns = predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
    pub class_names: Vec<String>,
}

impl ConfusionMatrix {
    pub fn from_counts(rows: &[Vec<u64>]) -> Result<Self, EvalError> {
        let k = rows.len();
        if k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(EvalError::Shape("confusion matrix must be square and non-empty".into()));
        }
        Ok(ConfusionMatrix {
            k,
            counts: rows.concat(),
            class_names: (0..k).map(|c| c.to_string()).collect(),
        })
    }

    pub fn with_names(mut self, names: &[String]) -> Self {
        if names.len() == self.k {
            self.class_names = names.to_vec();
        }
        self
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.k + predicted]
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.k).map(<[u64]>::to_vec).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k).map(|c| self.get(c, c)).sum()
    }
}

pub fn confusion(truth: &[usize], predicted: &[usize], k: usize) -> Result<ConfusionMatrix, EvalError> {
    if truth.len() != predicted.len() {
        return Err(EvalError::Shape(format!(
            "{} true labels, {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    if truth.is_empty() {
        return Err(EvalError::Shape("no labels".into()));
    }
    if k == 0 {
        return Err(EvalError::Shape("class count must be at least 1".into()));
    }
    let mut m = ConfusionMatrix {
        k,
        counts: vec![0; k * k],
        class_names: (0..k).map(|c| c.to_string()).collect(),
    };
    for (&t, &p) in truth.iter().zip(predicted) {
        if t >= k || p >= k {
            return Err(EvalError::Label { label: t.max(p), classes: k });
        }
        m.counts[t * k + p] += 1;
    }
    Ok(m)
}

/// One-vs-rest scores of a single class. Undefined ratios are 0 and flagged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub name: String,
    pub support: u64,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
    pub precision: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub f1: f64,
    pub precision_undefined: bool,
    pub sensitivity_undefined: bool,
    pub specificity_undefined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub f1: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub macro_avg: Averages,
    /// Averaged with each class weighted by its support.
    pub weighted_avg: Averages,
    pub n_samples: u64,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

/// F1 as the harmonic mean of precision and sensitivity (0 when both are 0).
pub fn f1_score(precision: f64, sensitivity: f64) -> f64 {
    if precision + sensitivity > 0.0 {
        2.0 * precision * sensitivity / (precision + sensitivity)
    } else {
        0.0
    }
}

/// Metrics of one class from its one-vs-rest counts.
pub fn class_metrics(name: &str, tp: u64, fp: u64, fn_: u64, tn: u64) -> ClassMetrics {
    let (precision, precision_undefined) = ratio(tp, tp + fp);
    let (sensitivity, sensitivity_undefined) = ratio(tp, tp + fn_);
    let (specificity, specificity_undefined) = ratio(tn, tn + fp);
    ClassMetrics {
        name: name.to_string(),
        support: tp + fn_,
        tp,
        fp,
        fn_,
        tn,
        precision,
        sensitivity,
        specificity,
        f1: f1_score(precision, sensitivity),
        precision_undefined,
        sensitivity_undefined,
        specificity_undefined,
    }
}

/// Macro and support-weighted averages, summed in class order.
pub fn averages(per_class: &[ClassMetrics]) -> (Averages, Averages) {
    let k = per_class.len() as f64;
    let total: u64 = per_class.iter().map(|c| c.support).sum();
    let mut m = Averages {
        precision: 0.0,
        f1: 0.0,
        sensitivity: 0.0,
        specificity: 0.0,
    };
    let mut w = m;
    for c in per_class {
        m.precision += c.precision;
        m.f1 += c.f1;
        m.sensitivity += c.sensitivity;
        m.specificity += c.specificity;
        let s = c.support as f64;
        w.precision += s * c.precision;
        w.f1 += s * c.f1;
        w.sensitivity += s * c.sensitivity;
        w.specificity += s * c.specificity;
    }
    for (a, d) in [(&mut m, k), (&mut w, total as f64)] {
        a.precision /= d;
        a.f1 /= d;
        a.sensitivity /= d;
        a.specificity /= d;
    }
    (m, w)
}

pub fn metrics(matrix: &ConfusionMatrix) -> Result<MetricsReport, EvalError> {
    let total = matrix.total();
    if total == 0 {
        return Err(EvalError::EmptyEvaluation);
    }
    let k = matrix.k();
    let per_class: Vec<ClassMetrics> = (0..k)
        .map(|c| {
            let tp = matrix.get(c, c);
            let row: u64 = (0..k).map(|j| matrix.get(c, j)).sum();
            let col: u64 = (0..k).map(|i| matrix.get(i, c)).sum();
            let fn_ = row - tp;
            let fp = col - tp;
            class_metrics(&matrix.class_names[c], tp, fp, fn_, total - tp - fp - fn_)
        })
        .collect();
    let (macro_avg, weighted_avg) = averages(&per_class);
    Ok(MetricsReport {
        accuracy: matrix.trace() as f64 / total as f64,
        per_class,
        macro_avg,
        weighted_avg,
        n_samples: total,
    })
}

/// Confusion matrix and metrics in one step.
pub fn evaluate(truth: &[usize], predicted: &[usize], k: usize) -> Result<MetricsReport, EvalError> {
    metrics(&confusion(truth, predicted, k)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_two_class_example() {
        let m = confusion(&[0, 0, 1, 1], &[0, 1, 1, 1], 2).unwrap();
        assert_eq!(m.rows(), vec![vec![1, 1], vec![0, 2]]);
        let r = metrics(&m).unwrap();
        assert_eq!(r.accuracy, 0.75);
        let (c0, c1) = (&r.per_class[0], &r.per_class[1]);
        assert_eq!((c0.precision, c0.sensitivity, c0.specificity), (1.0, 0.5, 1.0));
        assert!((c0.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((c1.precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!((c1.sensitivity, c1.specificity), (1.0, 0.5));
        assert!((c1.f1 - 0.8).abs() < 1e-15);
    }

    #[test]
    fn diagonal_is_perfect() {
        let m = confusion(&[0, 1, 2, 2], &[0, 1, 2, 2], 3).unwrap();
        let r = metrics(&m).unwrap();
        assert_eq!(r.accuracy, 1.0);
        for c in &r.per_class {
            assert_eq!((c.precision, c.sensitivity, c.specificity, c.f1), (1.0, 1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn single_class_specificity_is_flagged() {
        let r = metrics(&ConfusionMatrix::from_counts(&[vec![5]]).unwrap()).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.per_class[0].specificity, 0.0);
        assert!(r.per_class[0].specificity_undefined);
    }

    #[test]
    fn errors() {
        assert!(matches!(confusion(&[], &[], 2), Err(EvalError::Shape(_))));
        assert!(matches!(confusion(&[0], &[0, 1], 2), Err(EvalError::Shape(_))));
        let zero = ConfusionMatrix::from_counts(&[vec![0, 0], vec![0, 0]]).unwrap();
        assert!(matches!(metrics(&zero), Err(EvalError::EmptyEvaluation)));
    }

    proptest! {
        #[test]
        fn bounded_and_consistent(labels in proptest::collection::vec((0usize..5, 0usize..5), 1..200)) {
            let (t, p): (Vec<usize>, Vec<usize>) = labels.into_iter().unzip();
            let r = evaluate(&t, &p, 5).unwrap();
            let mean_f1: f64 = r.per_class.iter().map(|c| c.f1).sum::<f64>() / 5.0;
            prop_assert!((r.macro_avg.f1 - mean_f1).abs() < 1e-12);
            for c in &r.per_class {
                for v in [c.precision, c.sensitivity, c.specificity, c.f1] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
            if r.per_class.iter().all(|c| c.support > 0) {
                prop_assert!((r.accuracy - r.weighted_avg.sensitivity).abs() < 1e-12);
            }
        }
    }
}
