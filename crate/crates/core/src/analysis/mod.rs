//! Topic-level laughter, kinematic and shot-composition profiles, their
//! correlation with laughter rate, and clustermap-ready matrices.

mod cluster;
mod stats;

use std::collections::BTreeMap;

pub use cluster::{average_linkage, cluster_order, euclidean, Dendrogram, Merge};
pub use stats::{pearson, zscore_rows, FeatureMatrix};

use crate::kinematics::KinematicSample;
use crate::laughter::covered_length;
use crate::timeline::{LaughType, ShotLabel, ShowTimeline, TopicBlock};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TopicProfile {
    pub topic_id: i32,
    pub n_blocks: usize,
    pub mean_laughter_rate: f64,
    pub has_laughter_rate: f64,
    pub belly_rate: f64,
    /// Means over blocks that have at least one value of the signal.
    pub mean_kinetic_energy: Option<f64>,
    pub mean_arm_spread: Option<f64>,
    pub mean_trunk_lean: Option<f64>,
    /// Indexed by [`ShotLabel::index`]; all zero when no block has shots.
    pub shot_proportions: [f64; 6],
    pub events_per_10s: f64,
}

/// Clustermap columns used when no list is configured.
pub const DEFAULT_FEATURES: [&str; 10] = [
    "mean_laughter_rate",
    "has_laughter_rate",
    "belly_rate",
    "events_per_10s",
    "mean_kinetic_energy",
    "mean_arm_spread",
    "mean_trunk_lean",
    "shot_full_shot",
    "shot_medium_close_up",
    "shot_medium_shot",
];

impl TopicProfile {
    /// Looks up a feature by name: any profile field, or `shot_<label>`.
    pub fn feature(&self, name: &str) -> Result<Option<f64>> {
        Ok(match name {
            "n_blocks" => Some(self.n_blocks as f64),
            "mean_laughter_rate" => Some(self.mean_laughter_rate),
            "has_laughter_rate" => Some(self.has_laughter_rate),
            "belly_rate" => Some(self.belly_rate),
            "events_per_10s" => Some(self.events_per_10s),
            "mean_kinetic_energy" => self.mean_kinetic_energy,
            "mean_arm_spread" => self.mean_arm_spread,
            "mean_trunk_lean" => self.mean_trunk_lean,
            other => {
                let label = other
                    .strip_prefix("shot_")
                    .and_then(|l| l.parse::<ShotLabel>().ok())
                    .ok_or_else(|| Error::invalid(format!("unknown profile feature {other:?}")))?;
                Some(self.shot_proportions[label.index()])
            }
        })
    }
}

/// Per-block measurements before topic aggregation.
#[derive(Debug, Clone, PartialEq)]
struct BlockMeasures {
    laughter_rate: f64,
    has_laughter: bool,
    belly_rate: f64,
    events_per_10s: f64,
    kinetic_energy: Option<f64>,
    arm_spread: Option<f64>,
    trunk_lean: Option<f64>,
    shots: Option<[f64; 6]>,
}

fn mean_present(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values.flatten() {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

fn measure_block(block: &TopicBlock, show_laughs: &[(f64, f64, LaughType)], kin: &[KinematicSample]) -> BlockMeasures {
    let (start, end) = (block.span.start, block.span.end);
    let len = block.span.duration();
    let all = show_laughs.iter().map(|&(s, e, _)| (s, e));
    let belly = show_laughs
        .iter()
        .filter(|x| x.2 == LaughType::BellyLaugh)
        .map(|&(s, e, _)| (s, e));
    let lo = kin.partition_point(|s| s.time < start);
    let hi = kin.partition_point(|s| s.time < end);
    let window = &kin[lo..hi];
    let shots = (!block.shot_events.is_empty()).then(|| {
        let mut h = [0.0; 6];
        for s in &block.shot_events {
            h[s.label.index()] += 1.0;
        }
        let n = block.shot_events.len() as f64;
        h.map(|c| c / n)
    });
    BlockMeasures {
        laughter_rate: covered_length(all, start, end) / len,
        has_laughter: !block.laugh_events.is_empty(),
        belly_rate: covered_length(belly, start, end) / len,
        events_per_10s: block.laugh_events.len() as f64 * 10.0 / len,
        kinetic_energy: mean_present(window.iter().map(|s| s.kinetic_energy)),
        arm_spread: mean_present(window.iter().map(|s| s.arm_spread)),
        trunk_lean: mean_present(window.iter().map(|s| s.trunk_lean)),
        shots,
    }
}

/// Aggregates non-outlier blocks per topic, weighting every block equally.
///
/// Laughter rate is the share of the block covered by any of the show's
/// laughter events, clipped to the block. Kinematic samples should already
/// be shot-filtered and smoothed; `kinematics[i]` belongs to `shows[i]`.
pub fn topic_profiles(shows: &[ShowTimeline], kinematics: &[Vec<KinematicSample>]) -> Result<Vec<TopicProfile>> {
    if kinematics.len() != shows.len() {
        return Err(Error::invalid(format!(
            "{} shows but {} kinematic series",
            shows.len(),
            kinematics.len()
        )));
    }
    let mut per_topic: BTreeMap<i32, Vec<BlockMeasures>> = BTreeMap::new();
    for (show, kin) in shows.iter().zip(kinematics) {
        if kin.windows(2).any(|w| w[1].time < w[0].time) {
            return Err(Error::invariant(format!("kinematics for {} are not time-sorted", show.show_id)));
        }
        let laughs: Vec<(f64, f64, LaughType)> = show
            .laugh_events()
            .iter()
            .map(|e| (e.span.start, e.span.end, e.label))
            .collect();
        for block in show.timeline.iter().filter(|b| !b.is_outlier()) {
            per_topic
                .entry(block.topic_id)
                .or_default()
                .push(measure_block(block, &laughs, kin));
        }
    }
    if per_topic.is_empty() {
        return Err(Error::invalid("no non-outlier blocks to profile"));
    }
    Ok(per_topic
        .into_iter()
        .map(|(topic_id, blocks)| {
            let n = blocks.len() as f64;
            let avg = |f: fn(&BlockMeasures) -> f64| blocks.iter().map(f).sum::<f64>() / n;
            let with_shots: Vec<&[f64; 6]> = blocks.iter().filter_map(|b| b.shots.as_ref()).collect();
            let mut shot_proportions = [0.0; 6];
            for h in &with_shots {
                for (acc, v) in shot_proportions.iter_mut().zip(h.iter()) {
                    *acc += v;
                }
            }
            if !with_shots.is_empty() {
                let m = with_shots.len() as f64;
                shot_proportions = shot_proportions.map(|v| v / m);
            }
            TopicProfile {
                topic_id,
                n_blocks: blocks.len(),
                mean_laughter_rate: avg(|b| b.laughter_rate),
                has_laughter_rate: avg(|b| if b.has_laughter { 1.0 } else { 0.0 }),
                belly_rate: avg(|b| b.belly_rate),
                mean_kinetic_energy: mean_present(blocks.iter().map(|b| b.kinetic_energy)),
                mean_arm_spread: mean_present(blocks.iter().map(|b| b.arm_spread)),
                mean_trunk_lean: mean_present(blocks.iter().map(|b| b.trunk_lean)),
                shot_proportions,
                events_per_10s: avg(|b| b.events_per_10s),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    pub feature: String,
    /// `None` when either series is constant or fewer than 3 topics have it.
    pub r: Option<f64>,
    pub n: usize,
}

/// Pearson correlation of each feature with mean laughter rate across topics
/// that have the feature.
pub fn laughter_correlations(profiles: &[TopicProfile], features: &[&str]) -> Result<Vec<Correlation>> {
    let mut out = Vec::new();
    for &name in features.iter().filter(|f| **f != "mean_laughter_rate") {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for p in profiles {
            if let Some(v) = p.feature(name)? {
                xs.push(v);
                ys.push(p.mean_laughter_rate);
            }
        }
        let r = match pearson(&xs, &ys) {
            Ok(r) => Some(r),
            Err(e) => {
                log::warn!("correlation for {name} undefined: {e}");
                None
            }
        };
        out.push(Correlation { feature: name.to_string(), r, n: xs.len() });
    }
    Ok(out)
}

/// Topic x feature matrix. Missing kinematic values are filled with the
/// feature's mean over topics that have it (zero after standardization).
pub fn feature_matrix(profiles: &[TopicProfile], features: &[&str]) -> Result<FeatureMatrix> {
    let mut cols: Vec<Vec<Option<f64>>> = Vec::with_capacity(features.len());
    for &name in features {
        cols.push(profiles.iter().map(|p| p.feature(name)).collect::<Result<_>>()?);
    }
    let filled: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| {
            let fill = mean_present(c.iter().copied()).unwrap_or(0.0);
            c.iter().map(|v| v.unwrap_or(fill)).collect()
        })
        .collect();
    let values = (0..profiles.len())
        .map(|i| filled.iter().map(|c| c[i]).collect())
        .collect();
    FeatureMatrix::new(
        profiles.iter().map(|p| p.topic_id.to_string()).collect(),
        features.iter().map(|f| f.to_string()).collect(),
        values,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustermap {
    /// Each feature standardized across topics, rows in dendrogram order.
    pub matrix: FeatureMatrix,
    /// `order[k]` is the original row index displayed at position `k`.
    pub order: Vec<usize>,
}

/// Standardizes every feature across topics and orders topics by
/// average-linkage clustering of the standardized rows.
pub fn clustermap(m: &FeatureMatrix) -> Result<Clustermap> {
    let z = zscore_rows(&m.transpose()).transpose();
    let order = cluster_order(&z)?;
    Ok(Clustermap { matrix: z.permute_rows(&order), order })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_string(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::invalid(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn profiles_csv(profiles: &[TopicProfile]) -> Result<String> {
    let mut header: Vec<String> = [
        "topic_id",
        "n_blocks",
        "mean_laughter_rate",
        "has_laughter_rate",
        "belly_rate",
        "events_per_10s",
        "mean_kinetic_energy",
        "mean_arm_spread",
        "mean_trunk_lean",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(ShotLabel::ALL.iter().map(|l| format!("shot_{}", l.as_str())));
    let rows: Vec<Vec<String>> = profiles
        .iter()
        .map(|p| {
            let mut r = vec![
                p.topic_id.to_string(),
                p.n_blocks.to_string(),
                p.mean_laughter_rate.to_string(),
                p.has_laughter_rate.to_string(),
                p.belly_rate.to_string(),
                p.events_per_10s.to_string(),
                fmt_opt(p.mean_kinetic_energy),
                fmt_opt(p.mean_arm_spread),
                fmt_opt(p.mean_trunk_lean),
            ];
            r.extend(p.shot_proportions.iter().map(|v| v.to_string()));
            r
        })
        .collect();
    csv_string(&header, &rows)
}

pub fn correlations_csv(corr: &[Correlation]) -> Result<String> {
    let header = ["feature", "r", "N"].map(String::from);
    let rows: Vec<Vec<String>> = corr
        .iter()
        .map(|c| vec![c.feature.clone(), fmt_opt(c.r), c.n.to_string()])
        .collect();
    csv_string(&header, &rows)
}

pub fn clustermap_csv(cm: &Clustermap) -> Result<String> {
    let mut header = vec!["position".to_string(), "topic_id".to_string()];
    header.extend(cm.matrix.col_labels.iter().cloned());
    let rows: Vec<Vec<String>> = cm
        .matrix
        .values
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let mut r = vec![k.to_string(), cm.matrix.row_labels[k].clone()];
            r.extend(row.iter().map(|v| v.to_string()));
            r
        })
        .collect();
    csv_string(&header, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeline::{LaughterEvent, Overflow, ShotFrame, TimedSpan};

    fn show_with_half_laughter(n: usize, topic: i32) -> ShowTimeline {
        let blocks = (0..n)
            .map(|i| {
                let s = i as f64 * 60.0;
                let mut b = TopicBlock::new(i as u32, TimedSpan::new(s, s + 60.0).unwrap(), topic, "");
                b.laugh_events.push(LaughterEvent::new(s + 10.0, s + 40.0, LaughType::Laughter, 0.9).unwrap());
                b.shot_events.push(ShotFrame::new(s + 1.0, ShotLabel::FullShot, 0, 0.9).unwrap());
                b
            })
            .collect();
        ShowTimeline::new("s", blocks, Overflow::default()).unwrap()
    }

    #[test]
    fn half_covered_blocks() {
        let p = topic_profiles(&[show_with_half_laughter(4, 2)], &[vec![]]).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].mean_laughter_rate, 0.5);
        assert_eq!(p[0].has_laughter_rate, 1.0);
        assert_eq!(p[0].shot_proportions[0], 1.0);
        assert_eq!(p[0].mean_kinetic_energy, None);
        assert!((p[0].events_per_10s - 10.0 / 60.0).abs() < 1e-15);
    }

    #[test]
    fn silent_topic() {
        let blocks = vec![TopicBlock::new(0, TimedSpan::new(0.0, 60.0).unwrap(), 1, "")];
        let show = ShowTimeline::new("s", blocks, Overflow::default()).unwrap();
        let p = topic_profiles(&[show], &[vec![]]).unwrap();
        assert_eq!(p[0].mean_laughter_rate, 0.0);
        assert_eq!(p[0].has_laughter_rate, 0.0);
        assert_eq!(p[0].shot_proportions, [0.0; 6]);
    }

    #[test]
    fn outliers_only_is_error() {
        let show = show_with_half_laughter(2, -1);
        assert!(topic_profiles(&[show], &[vec![]]).is_err());
    }

    #[test]
    fn straddling_event_counts_in_both_blocks() {
        let mut a = TopicBlock::new(0, TimedSpan::new(0.0, 60.0).unwrap(), 0, "");
        a.laugh_events.push(LaughterEvent::new(50.0, 70.0, LaughType::Laughter, 0.9).unwrap());
        let b = TopicBlock::new(1, TimedSpan::new(60.0, 120.0).unwrap(), 1, "");
        let show = ShowTimeline::new("s", vec![a, b], Overflow::default()).unwrap();
        let p = topic_profiles(&[show], &[vec![]]).unwrap();
        assert!((p[0].mean_laughter_rate - 10.0 / 60.0).abs() < 1e-15);
        assert!((p[1].mean_laughter_rate - 10.0 / 60.0).abs() < 1e-15);
        assert_eq!(p[1].has_laughter_rate, 0.0);
    }

    #[test]
    fn csv_shapes() {
        let p = topic_profiles(&[show_with_half_laughter(3, 0)], &[vec![]]).unwrap();
        let text = profiles_csv(&p).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("topic_id,n_blocks,mean_laughter_rate"));
        let corr = vec![Correlation { feature: "belly_rate".into(), r: None, n: 2 }];
        assert_eq!(correlations_csv(&corr).unwrap(), "feature,r,N\nbelly_rate,,2\n");
    }

    #[test]
    fn unknown_feature_rejected() {
        let p = topic_profiles(&[show_with_half_laughter(1, 0)], &[vec![]]).unwrap();
        assert!(p[0].feature("shot_portrait").is_err());
        assert_eq!(p[0].feature("shot_full_shot").unwrap(), Some(1.0));
    }
}
