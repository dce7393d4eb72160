use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsReport {
    pub auroc: f64,
    pub auprc: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub threshold: f64,
    pub positive_rate: f64,
}

fn check(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::invalid("scores and labels differ in length"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("NaN score"));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::invalid("metrics need both positive and negative labels"));
    }
    Ok((pos, neg))
}

/// Indices sorted by descending score, grouped into runs of equal scores.
fn tie_groups(scores: &[f64]) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in idx {
        match groups.last_mut() {
            Some(g) if scores[g[0]] == scores[i] => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Area under the ROC curve from the Mann-Whitney rank statistic, with
/// tied scores sharing their mid-rank.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = check(scores, labels)?;
    let mut groups = tie_groups(scores);
    groups.reverse();
    let mut rank_sum = 0.0;
    let mut seen = 0usize;
    for g in &groups {
        let mid = seen as f64 + (g.len() as f64 + 1.0) / 2.0;
        rank_sum += mid * g.iter().filter(|&&i| labels[i]).count() as f64;
        seen += g.len();
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos as f64 * neg as f64))
}

/// Average precision: sum over score thresholds of (R_i - R_{i-1}) * P_i.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, _) = check(scores, labels)?;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut ap = 0.0;
    for g in tie_groups(scores) {
        let gp = g.iter().filter(|&&i| labels[i]).count();
        tp += gp;
        fp += g.len() - gp;
        if gp > 0 {
            ap += (gp as f64 / pos as f64) * (tp as f64 / (tp + fp) as f64);
        }
    }
    Ok(ap)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn at(scores: &[f64], labels: &[bool], threshold: f64) -> Self {
        let mut c = Confusion { tp: 0, fp: 0, fn_: 0 };
        for (&s, &l) in scores.iter().zip(labels) {
            match (s >= threshold, l) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                _ => {}
            }
        }
        c
    }

    pub fn precision(&self) -> f64 {
        if self.tp + self.fp == 0 {
            0.0
        } else {
            self.tp as f64 / (self.tp + self.fp) as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.tp + self.fn_ == 0 {
            0.0
        } else {
            self.tp as f64 / (self.tp + self.fn_) as f64
        }
    }

    pub fn f1(&self) -> f64 {
        let d = 2 * self.tp + self.fp + self.fn_;
        if d == 0 {
            0.0
        } else {
            (2 * self.tp) as f64 / d as f64
        }
    }

    /// Exact comparison of F1 values via integer cross-multiplication.
    fn f1_cmp(&self, other: &Confusion) -> std::cmp::Ordering {
        let a = (2 * self.tp) as u128 * (2 * other.tp + other.fp + other.fn_) as u128;
        let b = (2 * other.tp) as u128 * (2 * self.tp + self.fp + self.fn_) as u128;
        a.cmp(&b)
    }
}

/// Threshold maximizing F1 on validation scores, considering every distinct
/// score (predict positive when `score >= threshold`). Ties go to the lower
/// threshold.
pub fn tune_threshold(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::invalid("scores and labels differ in length"));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    if pos == 0 {
        return Err(Error::invalid("threshold tuning needs at least one positive"));
    }
    let mut best: Option<(Confusion, f64)> = None;
    let (mut tp, mut fp) = (0usize, 0usize);
    for g in tie_groups(scores) {
        let gp = g.iter().filter(|&&i| labels[i]).count();
        tp += gp;
        fp += g.len() - gp;
        let c = Confusion { tp, fp, fn_: pos - tp };
        let thr = scores[g[0]];
        if best.as_ref().map_or(true, |(b, _)| c.f1_cmp(b).is_ge()) {
            best = Some((c, thr));
        }
    }
    Ok(best.expect("non-empty scores").1)
}

pub fn compute_metrics(scores: &[f64], labels: &[bool], threshold: f64) -> Result<MetricsReport> {
    let (pos, _) = check(scores, labels)?;
    let c = Confusion::at(scores, labels, threshold);
    Ok(MetricsReport {
        auroc: auroc(scores, labels)?,
        auprc: average_precision(scores, labels)?,
        f1: c.f1(),
        precision: c.precision(),
        recall: c.recall(),
        threshold,
        positive_rate: pos as f64 / labels.len() as f64,
    })
}
