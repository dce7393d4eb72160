//! L2-regularized logistic regression fitted by Newton's method on
//! standardized features; a linear baseline for the boosted trees.

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use super::gbdt::sigmoid;
use super::Classifier;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticConfig {
    pub l2: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self { l2: 1e-4, max_iter: 50, tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Logistic {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub intercept: f64,
    pub coef: Vec<f64>,
}

impl Logistic {
    fn raw(&self, x: &[f64]) -> f64 {
        self.intercept
            + self
                .coef
                .iter()
                .zip(x.iter().zip(self.mean.iter().zip(&self.scale)))
                .map(|(c, (v, (m, s)))| c * (v - m) / s)
                .sum::<f64>()
    }
}

impl Classifier for Logistic {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.raw(x))
    }

    fn to_json(&self) -> Value {
        json!({
            "kind": "logistic",
            "mean": self.mean,
            "scale": self.scale,
            "intercept": self.intercept,
            "coef": self.coef,
        })
    }
}

pub fn train_logistic(x: &[Vec<f64>], y: &[bool], weights: &[f64], cfg: &LogisticConfig) -> Result<Logistic> {
    if x.len() != y.len() || x.len() != weights.len() {
        return Err(Error::invalid("features, labels and weights differ in length"));
    }
    if !(y.iter().any(|&l| l) && y.iter().any(|&l| !l)) {
        return Err(Error::invalid("training set must contain both classes"));
    }
    let n = x.len();
    let d = x[0].len();
    let mut mean = vec![0.0; d];
    for r in x {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / n as f64;
        }
    }
    let mut scale = vec![0.0; d];
    for r in x {
        for ((s, v), m) in scale.iter_mut().zip(r).zip(&mean) {
            *s += (v - m).powi(2) / n as f64;
        }
    }
    let scale: Vec<f64> = scale.iter().map(|v| if *v > 0.0 { v.sqrt() } else { 1.0 }).collect();
    let z: Vec<Vec<f64>> = x
        .iter()
        .map(|r| {
            std::iter::once(1.0)
                .chain(r.iter().zip(mean.iter().zip(&scale)).map(|(v, (m, s))| (v - m) / s))
                .collect()
        })
        .collect();
    let p = d + 1;
    let mut beta = DVector::<f64>::zeros(p);
    for _ in 0..cfg.max_iter {
        let mut hess = DMatrix::<f64>::zeros(p, p);
        let mut grad = DVector::<f64>::zeros(p);
        for ((row, &label), &w) in z.iter().zip(y).zip(weights) {
            let eta: f64 = row.iter().zip(beta.iter()).map(|(a, b)| a * b).sum();
            let mu = sigmoid(eta);
            let r = w * (mu - if label { 1.0 } else { 0.0 });
            let h = w * (mu * (1.0 - mu)).max(1e-12);
            for i in 0..p {
                grad[i] += r * row[i];
                let hi = h * row[i];
                for j in i..p {
                    hess[(i, j)] += hi * row[j];
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                hess[(i, j)] = hess[(j, i)];
            }
            if i > 0 {
                hess[(i, i)] += cfg.l2 * n as f64;
                grad[i] += cfg.l2 * n as f64 * beta[i];
            }
        }
        let step = hess
            .cholesky()
            .ok_or_else(|| Error::invalid("logistic regression Hessian is not positive definite"))?
            .solve(&grad);
        beta -= &step;
        if step.norm() < cfg.tol {
            break;
        }
    }
    Ok(Logistic {
        mean,
        scale,
        intercept: beta[0],
        coef: beta.iter().skip(1).copied().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::onset::balanced_weights;
    use crate::onset::metrics::auroc;
    use rand::{Rng, SeedableRng};

    #[test]
    fn recovers_linear_signal() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let x: Vec<Vec<f64>> = (0..3000).map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]).collect();
        let y: Vec<bool> = x
            .iter()
            .map(|r| rng.gen_bool(sigmoid(2.0 * r[0] - 1.0 * r[1])))
            .collect();
        let m = train_logistic(&x, &y, &vec![1.0; x.len()], &LogisticConfig::default()).unwrap();
        let c0 = m.coef[0] / m.scale[0];
        let c1 = m.coef[1] / m.scale[1];
        assert!((c0 - 2.0).abs() < 0.3 && (c1 + 1.0).abs() < 0.3, "{c0} {c1}");
        let s: Vec<f64> = x.iter().map(|r| m.predict_proba(r)).collect();
        assert!(auroc(&s, &y).unwrap() > 0.8);
    }

    #[test]
    fn constant_feature_is_harmless() {
        let x: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64, 1.0]).collect();
        let y: Vec<bool> = (0..100).map(|i| i % 3 == 0 || i > 80).collect();
        let m = train_logistic(&x, &y, &balanced_weights(&y), &LogisticConfig::default()).unwrap();
        assert!(m.coef.iter().all(|c| c.is_finite()));
    }
}
