//! Histogram-binned gradient-boosted decision trees for binary labels.

use rayon::prelude::*;
use serde_json::{json, Value};

use super::Classifier;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GbdtConfig {
    /// Upper bound on bins per feature (values are mapped to at most
    /// `max_bins - 1` bins; one slot is kept for missing values).
    pub max_bins: usize,
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_leaf_nodes: usize,
    pub min_samples_leaf: usize,
    pub l2: f64,
    pub min_hessian_leaf: f64,
    /// Build histograms on the rayon pool. Results are identical either way.
    pub parallel: bool,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        Self {
            max_bins: 256,
            n_rounds: 100,
            learning_rate: 0.1,
            max_leaf_nodes: 31,
            min_samples_leaf: 20,
            l2: 0.0,
            min_hessian_leaf: 1e-3,
            parallel: false,
        }
    }
}

/// Per-feature bin thresholds: a value `x` falls in bin `#(edges < x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinMapper {
    pub edges: Vec<Vec<f64>>,
}

impl BinMapper {
    pub fn fit(x: &[Vec<f64>], max_bins: usize) -> Self {
        let n_features = x.first().map_or(0, |r| r.len());
        let limit = max_bins.saturating_sub(1).max(2);
        let edges = (0..n_features)
            .map(|f| {
                let mut col: Vec<f64> = x.iter().map(|r| r[f]).filter(|v| !v.is_nan()).collect();
                col.sort_by(f64::total_cmp);
                let mut distinct = col.clone();
                distinct.dedup();
                if distinct.len() <= limit {
                    distinct.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0).collect()
                } else {
                    let n = col.len();
                    let mut e: Vec<f64> = (1..limit)
                        .map(|k| {
                            let pos = k as f64 / limit as f64 * (n - 1) as f64;
                            let (lo, frac) = (pos.floor() as usize, pos - pos.floor());
                            let hi = (lo + 1).min(n - 1);
                            col[lo] + frac * (col[hi] - col[lo])
                        })
                        .collect();
                    e.dedup();
                    e
                }
            })
            .collect();
        Self { edges }
    }

    pub fn bin(&self, feature: usize, x: f64) -> u8 {
        if x.is_nan() {
            return 0;
        }
        self.edges[feature].partition_point(|e| *e < x) as u8
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.edges[feature].len() + 1
    }

    /// Column-major binned copy of `x`.
    pub fn transform(&self, x: &[Vec<f64>]) -> Vec<Vec<u8>> {
        (0..self.edges.len())
            .map(|f| x.iter().map(|r| self.bin(f, r[f])).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        /// Go left when `x[feature] <= threshold`.
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(v) => return *v,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Leaves become numbers and splits `[feature, threshold, left, right]`.
    pub fn to_nested(&self) -> Value {
        fn walk(t: &Tree, i: usize) -> Value {
            match &t.nodes[i] {
                Node::Leaf(v) => json!(v),
                Node::Split { feature, threshold, left, right } => {
                    json!([feature, threshold, walk(t, *left), walk(t, *right)])
                }
            }
        }
        walk(self, 0)
    }

    /// `(feature, threshold)` of every split in node order.
    pub fn splits(&self) -> Vec<(usize, f64)> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, threshold, .. } => Some((*feature, *threshold)),
                Node::Leaf(_) => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gbdt {
    pub base_score: f64,
    pub trees: Vec<Tree>,
}

impl Gbdt {
    pub fn raw_score(&self, x: &[f64]) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Classifier for Gbdt {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.raw_score(x))
    }

    fn to_json(&self) -> Value {
        json!({
            "kind": "gbdt",
            "base_score": self.base_score,
            "trees": self.trees.iter().map(Tree::to_nested).collect::<Vec<_>>(),
        })
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Bin {
    g: f64,
    h: f64,
    n: u32,
}

type Hist = Vec<Vec<Bin>>;

#[derive(Debug, Clone, Copy)]
struct SplitInfo {
    gain: f64,
    feature: usize,
    bin: usize,
}

struct Leaf {
    node: usize,
    samples: Vec<u32>,
    hist: Hist,
    g: f64,
    h: f64,
    split: Option<SplitInfo>,
}

struct Grower<'a> {
    cfg: &'a GbdtConfig,
    bins: &'a [Vec<u8>],
    mapper: &'a BinMapper,
    grad: &'a [f64],
    hess: &'a [f64],
}

impl Grower<'_> {
    fn histogram(&self, samples: &[u32]) -> Hist {
        let build = |f: usize| {
            let col = &self.bins[f];
            let mut h = vec![Bin::default(); self.mapper.n_bins(f)];
            for &i in samples {
                let b = &mut h[col[i as usize] as usize];
                b.g += self.grad[i as usize];
                b.h += self.hess[i as usize];
                b.n += 1;
            }
            h
        };
        if self.cfg.parallel {
            (0..self.bins.len()).into_par_iter().map(build).collect()
        } else {
            (0..self.bins.len()).map(build).collect()
        }
    }

    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.cfg.l2)
    }

    fn best_split(&self, hist: &Hist, g: f64, h: f64, n: usize) -> Option<SplitInfo> {
        let msl = self.cfg.min_samples_leaf.max(1);
        if n < 2 * msl {
            return None;
        }
        let parent = self.score(g, h);
        let per_feature = |f: usize| -> Option<SplitInfo> {
            let mut best: Option<SplitInfo> = None;
            let (mut gl, mut hl, mut nl) = (0.0, 0.0, 0usize);
            let bins = &hist[f];
            for b in 0..bins.len().saturating_sub(1) {
                gl += bins[b].g;
                hl += bins[b].h;
                nl += bins[b].n as usize;
                let nr = n - nl;
                if nl < msl {
                    continue;
                }
                if nr < msl {
                    break;
                }
                let (gr, hr) = (g - gl, h - hl);
                if hl < self.cfg.min_hessian_leaf || hr < self.cfg.min_hessian_leaf {
                    continue;
                }
                let gain = self.score(gl, hl) + self.score(gr, hr) - parent;
                if gain > 0.0 && best.map_or(true, |s| gain > s.gain) {
                    best = Some(SplitInfo { gain, feature: f, bin: b });
                }
            }
            best
        };
        let candidates: Vec<Option<SplitInfo>> = if self.cfg.parallel {
            (0..hist.len()).into_par_iter().map(per_feature).collect()
        } else {
            (0..hist.len()).map(per_feature).collect()
        };
        candidates
            .into_iter()
            .flatten()
            .fold(None, |acc: Option<SplitInfo>, s| match acc {
                Some(a) if a.gain >= s.gain => Some(a),
                _ => Some(s),
            })
    }

    fn make_leaf(&self, node: usize, samples: Vec<u32>, hist: Hist) -> Leaf {
        let (g, h) = hist[0].iter().fold((0.0, 0.0), |(g, h), b| (g + b.g, h + b.h));
        let split = self.best_split(&hist, g, h, samples.len());
        Leaf { node, samples, hist, g, h, split }
    }

    /// Grows one tree best-first and returns it with the samples of each leaf.
    fn grow(&self, samples: Vec<u32>) -> (Tree, Vec<(usize, Vec<u32>)>) {
        let mut nodes = vec![Node::Leaf(0.0)];
        let root_hist = self.histogram(&samples);
        let mut open = vec![self.make_leaf(0, samples, root_hist)];
        while open.len() < self.cfg.max_leaf_nodes.max(2) {
            // pick the open leaf with the highest gain (lowest node id on ties)
            let pick = open
                .iter()
                .enumerate()
                .filter_map(|(k, l)| l.split.map(|s| (k, s.gain, l.node)))
                .fold(None, |acc: Option<(usize, f64, usize)>, c| match acc {
                    Some(a) if a.1 > c.1 || (a.1 == c.1 && a.2 < c.2) => Some(a),
                    _ => Some(c),
                });
            let Some((k, _, _)) = pick else { break };
            let leaf = open.swap_remove(k);
            let s = leaf.split.expect("picked leaf has a split");
            let col = &self.bins[s.feature];
            let (left, right): (Vec<u32>, Vec<u32>) =
                leaf.samples.iter().partition(|&&i| (col[i as usize] as usize) <= s.bin);
            let (small, large_is_left) = if left.len() <= right.len() { (&left, false) } else { (&right, true) };
            let small_hist = self.histogram(small);
            let large_hist: Hist = leaf
                .hist
                .iter()
                .zip(&small_hist)
                .map(|(p, c)| {
                    p.iter()
                        .zip(c)
                        .map(|(a, b)| Bin { g: a.g - b.g, h: a.h - b.h, n: a.n - b.n })
                        .collect()
                })
                .collect();
            let (lh, rh) = if large_is_left { (large_hist, small_hist) } else { (small_hist, large_hist) };
            let (li, ri) = (nodes.len(), nodes.len() + 1);
            nodes.push(Node::Leaf(0.0));
            nodes.push(Node::Leaf(0.0));
            nodes[leaf.node] = Node::Split {
                feature: s.feature,
                threshold: self.mapper.edges[s.feature][s.bin],
                left: li,
                right: ri,
            };
            open.push(self.make_leaf(li, left, lh));
            open.push(self.make_leaf(ri, right, rh));
        }
        let mut leaves = Vec::with_capacity(open.len());
        for l in open {
            let value = -self.cfg.learning_rate * l.g / (l.h + self.cfg.l2);
            let value = if value.is_finite() { value } else { 0.0 };
            nodes[l.node] = Node::Leaf(value);
            leaves.push((l.node, l.samples));
        }
        leaves.sort_by_key(|x| x.0);
        (Tree { nodes }, leaves)
    }
}

/// Fits boosted trees with logistic loss and per-sample weights.
pub fn train_gbdt(x: &[Vec<f64>], y: &[bool], weights: &[f64], cfg: &GbdtConfig) -> Result<Gbdt> {
    if x.len() != y.len() || x.len() != weights.len() {
        return Err(Error::invalid("features, labels and weights differ in length"));
    }
    let wp: f64 = y.iter().zip(weights).filter(|(l, _)| **l).map(|(_, w)| w).sum();
    let wn: f64 = y.iter().zip(weights).filter(|(l, _)| !**l).map(|(_, w)| w).sum();
    if !(wp > 0.0 && wn > 0.0) {
        return Err(Error::invalid("training set must contain both classes"));
    }
    if !(2..=256).contains(&cfg.max_bins) {
        return Err(Error::invalid(format!("max_bins must be in 2..=256, got {}", cfg.max_bins)));
    }
    let mapper = BinMapper::fit(x, cfg.max_bins);
    let bins = mapper.transform(x);
    let base_score = (wp / wn).ln();
    let n = x.len();
    let mut raw = vec![base_score; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::with_capacity(cfg.n_rounds);
    for _ in 0..cfg.n_rounds {
        for i in 0..n {
            let p = sigmoid(raw[i]);
            let t = if y[i] { 1.0 } else { 0.0 };
            grad[i] = weights[i] * (p - t);
            hess[i] = weights[i] * (p * (1.0 - p)).max(1e-16);
        }
        let grower = Grower { cfg, bins: &bins, mapper: &mapper, grad: &grad, hess: &hess };
        let (tree, leaves) = grower.grow((0..n as u32).collect());
        for (node, samples) in leaves {
            if let Node::Leaf(v) = tree.nodes[node] {
                for i in samples {
                    raw[i as usize] += v;
                }
            }
        }
        trees.push(tree);
    }
    Ok(Gbdt { base_score, trees })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::onset::metrics::auroc;
    use crate::onset::balanced_weights;
    use rand::{Rng, SeedableRng};

    #[test]
    fn midpoint_bins_for_few_values() {
        let x = vec![vec![1.0], vec![3.0], vec![3.0], vec![7.0]];
        let m = BinMapper::fit(&x, 256);
        assert_eq!(m.edges[0], vec![2.0, 5.0]);
        assert_eq!((m.bin(0, 1.0), m.bin(0, 3.0), m.bin(0, 7.0)), (0, 1, 2));
    }

    #[test]
    fn quantile_bins_for_many_values() {
        let x: Vec<Vec<f64>> = (0..10_000).map(|i| vec![i as f64]).collect();
        let m = BinMapper::fit(&x, 256);
        assert!(m.n_bins(0) <= 255);
        assert!(m.edges[0].windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn separable_toy_set() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let x: Vec<Vec<f64>> = (0..400).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let y: Vec<bool> = x.iter().map(|r| r[0] + 0.5 * r[1] > 0.1).collect();
        let model = train_gbdt(&x, &y, &balanced_weights(&y), &GbdtConfig::default()).unwrap();
        let s: Vec<f64> = x.iter().map(|r| model.predict_proba(r)).collect();
        assert_eq!(auroc(&s, &y).unwrap(), 1.0);
    }

    #[test]
    fn single_class_rejected() {
        let x = vec![vec![1.0], vec![2.0]];
        assert!(train_gbdt(&x, &[true, true], &[1.0, 1.0], &GbdtConfig::default()).is_err());
    }

    #[test]
    fn duplication_equals_doubled_weight() {
        // 20 samples, hand-traceable: label mostly follows x0 > 5
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, ((i * 7) % 5) as f64]).collect();
        let y: Vec<bool> = (0..20).map(|i| (i > 10) ^ (i == 3) ^ (i == 15)).collect();
        let cfg = GbdtConfig { n_rounds: 5, min_samples_leaf: 1, max_leaf_nodes: 4, ..Default::default() };
        let mut w = vec![1.0; 20];
        for (wi, &l) in w.iter_mut().zip(&y) {
            if l {
                *wi = 2.0;
            }
        }
        let weighted = train_gbdt(&x, &y, &w, &cfg).unwrap();
        let mut xd = x.clone();
        let mut yd = y.clone();
        for i in 0..20 {
            if y[i] {
                xd.push(x[i].clone());
                yd.push(true);
            }
        }
        let duplicated = train_gbdt(&xd, &yd, &vec![1.0; xd.len()], &cfg).unwrap();
        for (a, b) in weighted.trees.iter().zip(&duplicated.trees) {
            assert_eq!(a.splits(), b.splits());
        }
    }

    #[test]
    fn parallel_is_bit_identical() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let x: Vec<Vec<f64>> = (0..2000).map(|_| (0..6).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
        let y: Vec<bool> = x.iter().map(|r| r[0] * r[1] + 0.3 * rng.gen_range(0.0..1.0) > 0.4).collect();
        let w = balanced_weights(&y);
        let cfg = GbdtConfig { n_rounds: 20, ..Default::default() };
        let a = train_gbdt(&x, &y, &w, &cfg).unwrap();
        let b = train_gbdt(&x, &y, &w, &GbdtConfig { parallel: true, ..cfg }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn chance_level_on_permuted_labels() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let gen = |rng: &mut rand_chacha::ChaCha8Rng, n: usize| -> (Vec<Vec<f64>>, Vec<bool>) {
            let x = (0..n).map(|_| (0..5).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
            let y = (0..n).map(|_| rng.gen_bool(0.2)).collect();
            (x, y)
        };
        let (xt, yt) = gen(&mut rng, 10_000);
        let (xv, yv) = gen(&mut rng, 10_000);
        let model = train_gbdt(&xt, &yt, &balanced_weights(&yt), &GbdtConfig::default()).unwrap();
        let s: Vec<f64> = xv.iter().map(|r| model.predict_proba(r)).collect();
        let a = auroc(&s, &yv).unwrap();
        assert!((0.45..=0.55).contains(&a), "auroc {a}");
    }

    #[test]
    fn nested_array_serialization() {
        let t = Tree {
            nodes: vec![
                Node::Split { feature: 1, threshold: 0.5, left: 1, right: 2 },
                Node::Leaf(-0.25),
                Node::Leaf(0.75),
            ],
        };
        assert_eq!(t.to_nested(), json!([1, 0.5, -0.25, 0.75]));
        assert_eq!(t.predict(&[0.0, 0.5]), -0.25);
        assert_eq!(t.predict(&[0.0, 0.6]), 0.75);
    }
}
