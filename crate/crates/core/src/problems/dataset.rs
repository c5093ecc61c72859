use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Sample labels: `±1` reals for binary problems, one-hot rows otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum Labels {
    Binary(Vec<f64>),
    OneHot(Matrix),
}

/// Dense sample set `{(x_i, y_i)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Labels,
}

impl Dataset {
    pub fn binary(features: Matrix, labels: Vec<f64>) -> Result<Self> {
        check_rows(&features)?;
        if labels.len() != features.rows() {
            return Err(Error::Shape {
                expected: features.rows(),
                found: labels.len(),
            });
        }
        if let Some(bad) = labels.iter().find(|y| **y != 1.0 && **y != -1.0) {
            return Err(Error::invalid(format!("binary label {bad} is not +1 or -1")));
        }
        Ok(Dataset {
            features,
            labels: Labels::Binary(labels),
        })
    }

    pub fn one_hot(features: Matrix, labels: Matrix) -> Result<Self> {
        check_rows(&features)?;
        if labels.rows() != features.rows() {
            return Err(Error::Shape {
                expected: features.rows(),
                found: labels.rows(),
            });
        }
        for i in 0..labels.rows() {
            let row = labels.row(i);
            let ones = row.iter().filter(|v| **v == 1.0).count();
            let zeros = row.iter().filter(|v| **v == 0.0).count();
            if ones != 1 || ones + zeros != row.len() {
                return Err(Error::invalid(format!("label row {i} is not one-hot")));
            }
        }
        Ok(Dataset {
            features,
            labels: Labels::OneHot(labels),
        })
    }

    /// Convenience constructor for binary data given as nested rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], labels: Vec<f64>) -> Result<Self> {
        Dataset::binary(Matrix::from_rows(rows)?, labels)
    }

    pub fn n(&self) -> usize {
        self.features.rows()
    }

    pub fn d(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    pub fn binary_labels(&self) -> Option<&[f64]> {
        match &self.labels {
            Labels::Binary(y) => Some(y),
            Labels::OneHot(_) => None,
        }
    }

    pub fn is_binary(&self) -> bool {
        matches!(self.labels, Labels::Binary(_))
    }

    /// Rows selected by `indices`, in order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let n = self.n();
        if indices.is_empty() {
            return Err(Error::invalid("empty subset"));
        }
        if let Some(bad) = indices.iter().find(|i| **i >= n) {
            return Err(Error::invalid(format!("index {bad} out of range for n = {n}")));
        }
        let rows: Vec<&[f64]> = indices.iter().map(|&i| self.row(i)).collect();
        let features = Matrix::from_rows(&rows)?;
        match &self.labels {
            Labels::Binary(y) => Dataset::binary(features, indices.iter().map(|&i| y[i]).collect()),
            Labels::OneHot(m) => {
                let lrows: Vec<&[f64]> = indices.iter().map(|&i| m.row(i)).collect();
                Dataset::one_hot(features, Matrix::from_rows(&lrows)?)
            }
        }
    }

    /// Same features with a replacement set of binary labels.
    pub fn relabel(&self, labels: Vec<f64>) -> Result<Dataset> {
        Dataset::binary(self.features.clone(), labels)
    }
}

fn check_rows(features: &Matrix) -> Result<()> {
    if features.rows() == 0 {
        return Err(Error::invalid("dataset needs at least one sample"));
    }
    if features.cols() == 0 {
        return Err(Error::invalid("dataset needs at least one feature"));
    }
    Ok(())
}
