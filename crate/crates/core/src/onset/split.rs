use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Fold {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitAssignment {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

impl SplitAssignment {
    pub fn fold_of(&self) -> BTreeMap<&str, Fold> {
        let mut m = BTreeMap::new();
        for (ids, f) in [(&self.train, Fold::Train), (&self.val, Fold::Val), (&self.test, Fold::Test)] {
            for id in ids {
                m.insert(id.as_str(), f);
            }
        }
        m
    }
}

/// Fold sizes: floor of `ratio * n`, then leftover shows go one at a time to
/// the folds with the largest fractional parts (train, val, test on ties).
pub fn split_sizes(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let raw = ratios.map(|r| r * n as f64);
    let mut sizes = raw.map(|x| x.floor() as usize);
    let mut left = n - sizes.iter().sum::<usize>();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())).then(a.cmp(&b)));
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[i] += 1;
        left -= 1;
    }
    sizes
}

/// Seeded shuffle of the (sorted, deduplicated) show ids, cut into
/// train/val/test by [`split_sizes`].
pub fn group_split(show_ids: &[String], ratios: [f64; 3], seed: u64) -> Result<SplitAssignment> {
    if ratios.iter().any(|r| !(*r >= 0.0)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("split ratios must be non-negative and sum to 1, got {ratios:?}")));
    }
    let mut ids: Vec<String> = show_ids.to_vec();
    ids.sort();
    ids.dedup();
    if ids.len() < 3 {
        return Err(Error::invalid(format!("need at least 3 shows to split, got {}", ids.len())));
    }
    let sizes = split_sizes(ids.len(), ratios);
    if sizes.contains(&0) {
        return Err(Error::invalid(format!("{} shows give an empty fold with ratios {ratios:?}", ids.len())));
    }
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = ids.split_off(sizes[0] + sizes[1]);
    let val = ids.split_off(sizes[0]);
    Ok(SplitAssignment { train: ids, val, test })
}
