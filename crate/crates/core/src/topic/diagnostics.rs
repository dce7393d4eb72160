use std::collections::BTreeMap;

use super::TopicAssignment;
use crate::{Error, Result};

/// Fewest non-outlier topics a valid model may have.
pub const MIN_TOPICS: usize = 10;
/// Largest share of blocks a single topic may hold in a valid model.
pub const MAX_LARGEST_SHARE: f64 = 0.35;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TopicModelDiagnostics {
    /// Number of distinct non-outlier topics.
    pub k: usize,
    pub s_max: f64,
    pub h_norm: f64,
    pub c_npmi: Option<f64>,
    pub score: Option<f64>,
    pub valid: bool,
}

impl TopicModelDiagnostics {
    /// Builds diagnostics from per-topic block counts (outliers excluded).
    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let mut counts: Vec<usize> = counts.iter().copied().filter(|&c| c > 0).collect();
        // order-free summation: identical results under topic relabeling
        counts.sort_unstable();
        let n: usize = counts.iter().sum();
        if n == 0 {
            return Err(Error::invalid("no non-outlier assignments"));
        }
        let k = counts.len();
        let p: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        let s_max = p.iter().copied().fold(0.0, f64::max);
        let h_norm = if k == 1 {
            0.0
        } else {
            let h: f64 = -p.iter().map(|&q| q * q.ln()).sum::<f64>();
            // uniform distributions give exactly 1
            if counts.iter().all(|&c| c == counts[0]) {
                1.0
            } else {
                (h / (k as f64).ln()).clamp(0.0, 1.0)
            }
        };
        Ok(Self {
            k,
            s_max,
            h_norm,
            c_npmi: None,
            score: None,
            valid: k >= MIN_TOPICS && s_max <= MAX_LARGEST_SHARE,
        })
    }

    /// Fills in coherence and the composite score.
    pub fn with_coherence(mut self, c_npmi: f64) -> Self {
        self.c_npmi = Some(c_npmi);
        self.score = Some(composite_score(self.h_norm, c_npmi, self.s_max));
        self
    }

    /// Human-readable list of violated validity constraints.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.k < MIN_TOPICS {
            v.push(format!("K = {} < {MIN_TOPICS}", self.k));
        }
        if self.s_max > MAX_LARGEST_SHARE {
            v.push(format!("s_max = {:.4} > {MAX_LARGEST_SHARE}", self.s_max));
        }
        v
    }
}

/// Topic count `K`, largest-topic share and normalized entropy (natural log)
/// over non-outlier blocks.
pub fn diagnostics(assignments: &[TopicAssignment]) -> Result<TopicModelDiagnostics> {
    let mut counts: BTreeMap<i32, usize> = BTreeMap::new();
    for a in assignments.iter().filter(|a| !a.is_outlier()) {
        *counts.entry(a.topic_id).or_default() += 1;
    }
    if counts.is_empty() {
        return Err(Error::invalid("every assignment is an outlier"));
    }
    TopicModelDiagnostics::from_counts(&counts.into_values().collect::<Vec<_>>())
}

/// `S = H_norm + C_npmi - 2 s_max`.
pub fn composite_score(h_norm: f64, c_npmi: f64, s_max: f64) -> f64 {
    h_norm + c_npmi - 2.0 * s_max
}

/// Picks the block size with the highest composite score among valid
/// candidates; ties go to the smaller block size.
pub fn select_model(candidates: &BTreeMap<u32, TopicModelDiagnostics>) -> Result<u32> {
    if candidates.is_empty() {
        return Err(Error::invalid("no candidate models"));
    }
    let mut best: Option<(u32, f64)> = None;
    for (&size, d) in candidates {
        if !d.valid {
            continue;
        }
        let s = d
            .score
            .ok_or_else(|| Error::invalid(format!("candidate {size} s has no composite score")))?;
        if best.map_or(true, |(_, b)| s > b) {
            best = Some((size, s));
        }
    }
    best.map(|(size, _)| size).ok_or_else(|| {
        let detail = candidates
            .iter()
            .map(|(size, d)| format!("{size} s: {}", d.violations().join(", ")))
            .collect::<Vec<_>>()
            .join("; ");
        Error::invalid(format!("no valid candidate model ({detail})"))
    })
}
