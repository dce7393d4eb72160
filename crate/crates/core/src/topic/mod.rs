//! Topic-assignment diagnostics, NPMI coherence, model selection and outlier
//! post-processing. The topic model itself runs elsewhere; this module
//! consumes its assignments and top-word descriptors.

mod diagnostics;
mod npmi;
mod postprocess;

use serde::{Deserialize, Serialize};

pub use diagnostics::{
    composite_score, diagnostics, select_model, TopicModelDiagnostics, MAX_LARGEST_SHARE,
    MIN_TOPICS,
};
pub use npmi::{npmi_coherence, npmi_pair, topic_coherence, DocumentIndex, Subsample};
pub use postprocess::{
    centroid_reassign, compute_centroids, gap_fill, resolve_descriptors, DEFAULT_CENTROID_THRESHOLD,
};

use crate::timeline::UNIT_NORM_TOL;
use crate::{Error, Result};

pub const OUTLIER: i32 = -1;

/// Number of top words kept per topic.
pub const TOP_WORDS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicAssignment {
    pub block_index: usize,
    pub topic_id: i32,
    pub embedding: Vec<f64>,
}

impl TopicAssignment {
    pub fn is_outlier(&self) -> bool {
        self.topic_id < 0
    }

    pub fn check_unit(&self) -> Result<()> {
        let n = l2_norm(&self.embedding);
        if (n - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::invariant(format!(
                "assignment {}: embedding norm {n} is not 1",
                self.block_index
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicDescriptor {
    pub topic_id: i32,
    pub top_words: Vec<String>,
    /// Unit-norm mean of member embeddings.
    pub centroid: Vec<f64>,
}

/// On-disk descriptor; the centroid may be omitted and recomputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorRecord {
    pub topic_id: i32,
    pub top_words: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centroid: Option<Vec<f64>>,
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Scales `v` to unit L2 norm.
pub fn normalize_embedding(v: &[f64]) -> Result<Vec<f64>> {
    let n = l2_norm(v);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::invalid(format!("cannot normalize a vector with norm {n}")));
    }
    Ok(v.iter().map(|x| x / n).collect())
}

pub fn read_assignments(text: &str) -> Result<Vec<TopicAssignment>> {
    crate::timeline::ingest::parse_jsonl(text)
}

pub fn write_assignments(items: &[TopicAssignment]) -> String {
    crate::timeline::ingest::to_jsonl(items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn three_four_five() {
        let mut v = vec![0.0; 384];
        v[0] = 3.0;
        v[1] = 4.0;
        let u = normalize_embedding(&v).unwrap();
        assert_eq!(u[0], 0.6);
        assert_eq!(u[1], 0.8);
        assert!(u[2..].iter().all(|x| *x == 0.0));
    }

    #[test]
    fn unit_vector_unchanged() {
        let mut v = vec![0.0; 384];
        v[7] = 1.0;
        assert_eq!(normalize_embedding(&v).unwrap(), v);
    }

    #[test]
    fn zero_vector_rejected() {
        assert!(normalize_embedding(&[0.0; 384]).is_err());
    }

    #[test]
    fn random_vectors_become_unit_and_keep_direction() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let v: Vec<f64> = (0..384).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let u = normalize_embedding(&v).unwrap();
            assert!((l2_norm(&u) - 1.0).abs() < 1e-9);
            let cos = dot(&u, &v) / l2_norm(&v);
            assert!((cos - 1.0).abs() < 1e-9);
        }
    }
}
