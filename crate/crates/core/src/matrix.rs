use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("shape mismatch: {0}")]
pub struct ShapeError(pub String);

/// Dense row-major feature matrix with a per-cell validity mask.
///
/// Invalid cells hold the sentinel 0; tree learners treat them as missing.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl FeatureMatrix {
    pub fn new(n_cols: usize) -> Self {
        FeatureMatrix {
            n_rows: 0,
            n_cols,
            values: Vec::new(),
            valid: Vec::new(),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ShapeError> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut m = FeatureMatrix::new(n_cols);
        for r in rows {
            m.push_row(r, &vec![true; r.len()])?;
        }
        Ok(m)
    }

    pub fn from_parts(
        n_rows: usize,
        n_cols: usize,
        values: Vec<f64>,
        valid: Vec<bool>,
    ) -> Result<Self, ShapeError> {
        if values.len() != n_rows * n_cols || valid.len() != values.len() {
            return Err(ShapeError(format!(
                "{} values / {} flags for a {n_rows}x{n_cols} matrix",
                values.len(),
                valid.len()
            )));
        }
        Ok(FeatureMatrix {
            n_rows,
            n_cols,
            values,
            valid,
        })
    }

    pub fn push_row(&mut self, values: &[f64], valid: &[bool]) -> Result<(), ShapeError> {
        if values.len() != self.n_cols || valid.len() != self.n_cols {
            return Err(ShapeError(format!(
                "row of {} values / {} flags, matrix has {} columns",
                values.len(),
                valid.len(),
                self.n_cols
            )));
        }
        self.values.extend_from_slice(values);
        self.valid.extend_from_slice(valid);
        self.n_rows += 1;
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_empty(&self) -> bool {
        self.n_rows == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn row_valid(&self, i: usize) -> &[bool] {
        &self.valid[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols + j]
    }

    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.valid[i * self.n_cols + j]
    }

    /// Value of a cell, or `None` when it is flagged missing.
    pub fn cell(&self, i: usize, j: usize) -> Option<f64> {
        let k = i * self.n_cols + j;
        self.valid[k].then_some(self.values[k])
    }

    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        let mut out = FeatureMatrix::new(self.n_cols);
        out.values.reserve(indices.len() * self.n_cols);
        for &i in indices {
            out.values.extend_from_slice(self.row(i));
            out.valid.extend_from_slice(self.row_valid(i));
        }
        out.n_rows = indices.len();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_and_selection() {
        let m = FeatureMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(m.n_rows(), 3);
        assert_eq!(m.row(1), &[3.0, 4.0]);
        let s = m.select_rows(&[2, 0]);
        assert_eq!(s.row(0), &[5.0, 6.0]);
        assert_eq!(s.row(1), &[1.0, 2.0]);
        let mut bad = FeatureMatrix::new(2);
        assert!(bad.push_row(&[1.0], &[true]).is_err());
    }
}
