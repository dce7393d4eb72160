use crate::{Error, Result};

/// Labeled dense matrix; rows are usually topics and columns features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn new(row_labels: Vec<String>, col_labels: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != row_labels.len() || values.iter().any(|r| r.len() != col_labels.len()) {
            return Err(Error::invalid("feature matrix shape does not match its labels"));
        }
        Ok(Self { row_labels, col_labels, values })
    }

    pub fn n_rows(&self) -> usize {
        self.values.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn transpose(&self) -> Self {
        let values = (0..self.n_cols())
            .map(|j| self.values.iter().map(|r| r[j]).collect())
            .collect();
        Self {
            row_labels: self.col_labels.clone(),
            col_labels: self.row_labels.clone(),
            values,
        }
    }

    pub fn permute_rows(&self, order: &[usize]) -> Self {
        Self {
            row_labels: order.iter().map(|&i| self.row_labels[i].clone()).collect(),
            col_labels: self.col_labels.clone(),
            values: order.iter().map(|&i| self.values[i].clone()).collect(),
        }
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("pearson: lengths differ ({} vs {})", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::invalid(format!("pearson: need at least 3 points, got {}", x.len())));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::invalid("pearson: correlation undefined for a constant series"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Standardizes each row to mean 0 and population SD 1. Rows with zero
/// variance become all zeros.
pub fn zscore_rows(m: &FeatureMatrix) -> FeatureMatrix {
    let values = m
        .values
        .iter()
        .zip(&m.row_labels)
        .map(|(row, label)| {
            if row.is_empty() {
                return Vec::new();
            }
            let mu = mean(row);
            let sd = (row.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / row.len() as f64).sqrt();
            let scale = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if !(sd > 1e-14 * scale.max(f64::MIN_POSITIVE)) {
                log::warn!("row {label:?} has zero variance; z-scores set to 0");
                return vec![0.0; row.len()];
            }
            row.iter().map(|v| (v - mu) / sd).collect()
        })
        .collect();
    FeatureMatrix {
        row_labels: m.row_labels.clone(),
        col_labels: m.col_labels.clone(),
        values,
    }
}
