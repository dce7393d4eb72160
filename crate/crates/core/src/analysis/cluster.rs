use super::stats::FeatureMatrix;
use crate::{Error, Result};

/// One agglomeration step. Clusters `0..n` are the input rows; the cluster
/// created by step `i` has id `n + i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub n_leaves: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Leaves in left-to-right dendrogram order.
    pub fn leaf_order(&self) -> Vec<usize> {
        let n = self.n_leaves;
        if n == 0 {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(n);
        let mut stack = vec![if self.merges.is_empty() { 0 } else { n + self.merges.len() - 1 }];
        while let Some(c) = stack.pop() {
            if c < n {
                out.push(c);
            } else {
                let m = &self.merges[c - n];
                stack.push(m.right);
                stack.push(m.left);
            }
        }
        out
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Average-linkage agglomerative clustering over Euclidean row distances,
/// using Lance-Williams updates. At each step the closest pair of active
/// clusters is merged; ties go to the pair found first in id order.
pub fn average_linkage(rows: &[Vec<f64>]) -> Dendrogram {
    let n = rows.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = euclidean(&rows[i], &rows[j]);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    // slot -> (cluster id, size); merged clusters reuse the lower slot
    let mut slots: Vec<Option<(usize, usize)>> = (0..n).map(|i| Some((i, 1))).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for step in 0..n.saturating_sub(1) {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for a in 0..n {
            let Some((ida, _)) = slots[a] else { continue };
            for b in a + 1..n {
                let Some((idb, _)) = slots[b] else { continue };
                let key = (ida.min(idb), ida.max(idb));
                let better = match best {
                    None => true,
                    Some((bd, _, _, l, r)) => d[a][b] < bd || (d[a][b] == bd && key < (l, r)),
                };
                if better {
                    best = Some((d[a][b], a, b, key.0, key.1));
                }
            }
        }
        let (dist, a, b, left, right) = best.expect("at least two active clusters");
        let (na, nb) = (slots[a].unwrap().1, slots[b].unwrap().1);
        for k in 0..n {
            if k != a && k != b && slots[k].is_some() {
                let v = (na as f64 * d[a][k] + nb as f64 * d[b][k]) / (na + nb) as f64;
                d[a][k] = v;
                d[k][a] = v;
            }
        }
        slots[a] = Some((n + step, na + nb));
        slots[b] = None;
        merges.push(Merge { left, right, distance: dist, size: na + nb });
    }
    Dendrogram { n_leaves: n, merges }
}

/// Row permutation for a clustermap display of `m`.
pub fn cluster_order(m: &FeatureMatrix) -> Result<Vec<usize>> {
    if m.n_rows() < 2 {
        return Err(Error::invalid("clustering needs at least two rows"));
    }
    Ok(average_linkage(&m.values).leaf_order())
}
