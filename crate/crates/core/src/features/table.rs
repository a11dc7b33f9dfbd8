//! Label columns and the feature CSV interchange format
//! (`f01..f48,v01..v48,walker,init,posture`).

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use super::FEATURE_COUNT;
use crate::matrix::FeatureMatrix;
use crate::pose::Dataset;

/// Integer-encoded targets, one entry per sample.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelColumns {
    /// 1 when a walker is used.
    pub walker: Vec<usize>,
    /// 1 = standing, 0 = sitting.
    pub init: Vec<usize>,
    pub posture: Vec<usize>,
    /// Present only when every sample carries a risk label.
    pub risk: Option<Vec<usize>>,
}

impl LabelColumns {
    pub fn len(&self) -> usize {
        self.posture.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posture.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> LabelColumns {
        let pick = |v: &Vec<usize>| indices.iter().map(|&i| v[i]).collect::<Vec<_>>();
        LabelColumns {
            walker: pick(&self.walker),
            init: pick(&self.init),
            posture: pick(&self.posture),
            risk: self.risk.as_ref().map(pick),
        }
    }
}

pub fn label_columns(dataset: &Dataset) -> LabelColumns {
    let risk: Option<Vec<usize>> = dataset
        .samples
        .iter()
        .map(|s| s.labels.risk_label.map(|r| r.as_class()))
        .collect();
    LabelColumns {
        walker: dataset
            .samples
            .iter()
            .map(|s| usize::from(s.labels.walker_choice))
            .collect(),
        init: dataset
            .samples
            .iter()
            .map(|s| s.labels.initial_position.as_class())
            .collect(),
        posture: dataset.samples.iter().map(|s| s.labels.posture_type).collect(),
        risk: if dataset.is_empty() { None } else { risk },
    }
}

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: {message}")]
    Format { row: usize, message: String },
}

pub fn csv_header() -> Vec<String> {
    let mut h: Vec<String> = (1..=FEATURE_COUNT).map(|i| format!("f{i:02}")).collect();
    h.extend((1..=FEATURE_COUNT).map(|i| format!("v{i:02}")));
    h.extend(["walker", "init", "posture"].map(String::from));
    h
}

pub fn write_feature_csv_to<W: Write>(
    w: W,
    matrix: &FeatureMatrix,
    labels: &LabelColumns,
) -> Result<(), CsvError> {
    if matrix.n_cols() != FEATURE_COUNT || labels.len() != matrix.n_rows() {
        return Err(CsvError::Format {
            row: 0,
            message: format!(
                "{}x{} matrix with {} label rows",
                matrix.n_rows(),
                matrix.n_cols(),
                labels.len()
            ),
        });
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(csv_header())?;
    let mut rec = Vec::with_capacity(2 * FEATURE_COUNT + 3);
    for i in 0..matrix.n_rows() {
        rec.clear();
        rec.extend(matrix.row(i).iter().map(|v| v.to_string()));
        rec.extend(matrix.row_valid(i).iter().map(|&b| u8::from(b).to_string()));
        rec.push(labels.walker[i].to_string());
        rec.push(labels.init[i].to_string());
        rec.push(labels.posture[i].to_string());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_feature_csv_from<R: Read>(r: R) -> Result<(FeatureMatrix, LabelColumns), CsvError> {
    let mut reader = csv::Reader::from_reader(r);
    let header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    if header != csv_header() {
        return Err(CsvError::Format {
            row: 1,
            message: "unexpected header".into(),
        });
    }
    let mut m = FeatureMatrix::new(FEATURE_COUNT);
    let mut labels = LabelColumns::default();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let bad = |message: String| CsvError::Format { row, message };
        let num = |k: usize| -> Result<f64, CsvError> {
            rec[k]
                .parse::<f64>()
                .map_err(|e| bad(format!("column {}: {e}", k + 1)))
        };
        let int = |k: usize| -> Result<usize, CsvError> {
            rec[k]
                .parse::<usize>()
                .map_err(|e| bad(format!("column {}: {e}", k + 1)))
        };
        let values = (0..FEATURE_COUNT).map(num).collect::<Result<Vec<_>, _>>()?;
        let valid = (FEATURE_COUNT..2 * FEATURE_COUNT)
            .map(|k| int(k).map(|v| v == 1))
            .collect::<Result<Vec<_>, _>>()?;
        m.push_row(&values, &valid).map_err(|e| bad(e.to_string()))?;
        let walker = int(2 * FEATURE_COUNT)?;
        let init = int(2 * FEATURE_COUNT + 1)?;
        if walker > 1 || init > 1 {
            return Err(bad("walker and init must be 0 or 1".into()));
        }
        labels.walker.push(walker);
        labels.init.push(init);
        labels.posture.push(int(2 * FEATURE_COUNT + 2)?);
    }
    Ok((m, labels))
}

pub fn write_feature_csv(
    path: impl AsRef<Path>,
    matrix: &FeatureMatrix,
    labels: &LabelColumns,
) -> Result<(), CsvError> {
    write_feature_csv_to(std::io::BufWriter::new(File::create(path)?), matrix, labels)
}

pub fn read_feature_csv(path: impl AsRef<Path>) -> Result<(FeatureMatrix, LabelColumns), CsvError> {
    read_feature_csv_from(std::io::BufReader::new(File::open(path)?))
}
