use std::collections::BTreeMap;

use super::{dot, l2_norm, normalize_embedding, DescriptorRecord, TopicAssignment, TopicDescriptor, OUTLIER};
use crate::timeline::UNIT_NORM_TOL;
use crate::{Error, Result};

/// Minimum cosine similarity for centroid reassignment.
pub const DEFAULT_CENTROID_THRESHOLD: f64 = 0.30;

/// Per-topic centroid: the mean of member unit embeddings, renormalized.
pub fn compute_centroids(assignments: &[TopicAssignment]) -> Result<BTreeMap<i32, Vec<f64>>> {
    let mut sums: BTreeMap<i32, (Vec<f64>, usize)> = BTreeMap::new();
    for a in assignments.iter().filter(|a| !a.is_outlier()) {
        let entry = sums
            .entry(a.topic_id)
            .or_insert_with(|| (vec![0.0; a.embedding.len()], 0));
        if entry.0.len() != a.embedding.len() {
            return Err(Error::invalid(format!(
                "topic {}: embeddings of different lengths",
                a.topic_id
            )));
        }
        for (s, x) in entry.0.iter_mut().zip(&a.embedding) {
            *s += x;
        }
        entry.1 += 1;
    }
    sums.into_iter()
        .map(|(topic, (sum, n))| {
            let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
            let c = normalize_embedding(&mean)
                .map_err(|_| Error::invalid(format!("topic {topic}: member embeddings cancel out")))?;
            Ok((topic, c))
        })
        .collect()
}

/// Turns descriptor records into descriptors, recomputing missing centroids
/// from `training` assignments. A topic with neither a centroid nor members
/// cannot attract outliers and is dropped with a warning.
pub fn resolve_descriptors(
    records: Vec<DescriptorRecord>,
    training: &[TopicAssignment],
) -> Result<Vec<TopicDescriptor>> {
    let needs_centroids = records.iter().any(|r| r.centroid.is_none());
    let computed = if needs_centroids {
        compute_centroids(training)?
    } else {
        BTreeMap::new()
    };
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        let centroid = match r.centroid {
            Some(c) => {
                let n = l2_norm(&c);
                if (n - 1.0).abs() > UNIT_NORM_TOL {
                    return Err(Error::invariant(format!(
                        "topic {}: centroid norm {n} is not 1",
                        r.topic_id
                    )));
                }
                c
            }
            None => match computed.get(&r.topic_id) {
                Some(c) => c.clone(),
                None => {
                    log::warn!("topic {} has no centroid and no members; skipped", r.topic_id);
                    continue;
                }
            },
        };
        out.push(TopicDescriptor {
            topic_id: r.topic_id,
            top_words: r.top_words,
            centroid,
        });
    }
    Ok(out)
}

/// Reassigns outliers to the most similar topic centroid when that cosine
/// similarity reaches `threshold`. Non-outliers pass through untouched.
pub fn centroid_reassign(
    assignments: &[TopicAssignment],
    descriptors: &[TopicDescriptor],
    threshold: f64,
) -> Result<Vec<TopicAssignment>> {
    let targets: Vec<&TopicDescriptor> = descriptors.iter().filter(|d| d.topic_id >= 0).collect();
    if targets.is_empty() {
        return Err(Error::invalid("no topic descriptors to reassign against"));
    }
    assignments
        .iter()
        .map(|a| {
            if !a.is_outlier() {
                return Ok(a.clone());
            }
            let mut best: Option<(i32, f64)> = None;
            for d in &targets {
                if d.centroid.len() != a.embedding.len() {
                    return Err(Error::invalid(format!(
                        "topic {} centroid has {} dims, block {} embedding has {}",
                        d.topic_id,
                        d.centroid.len(),
                        a.block_index,
                        a.embedding.len()
                    )));
                }
                let sim = dot(&a.embedding, &d.centroid);
                if best.map_or(true, |(_, b)| sim > b) {
                    best = Some((d.topic_id, sim));
                }
            }
            let mut out = a.clone();
            if let Some((topic, sim)) = best {
                if sim >= threshold {
                    out.topic_id = topic;
                }
            }
            Ok(out)
        })
        .collect()
}

/// Replaces an isolated outlier whose two neighbours share the same topic.
/// Single pass over the original sequence; fills never cascade.
pub fn gap_fill(sequence: &[i32]) -> Vec<i32> {
    let mut out = sequence.to_vec();
    for i in 1..sequence.len().saturating_sub(1) {
        let (prev, cur, next) = (sequence[i - 1], sequence[i], sequence[i + 1]);
        if cur == OUTLIER && prev >= 0 && prev == next {
            out[i] = prev;
        }
    }
    out
}
