use super::types::{
    LaughterEvent, Overflow, PoseFrame, ShotFrame, ShowTimeline, TimedSpan, TopicBlock,
};
use crate::{Error, Result};

/// Result of distributing a stream over anchor blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Containment<T> {
    /// One list per block, each sorted by timestamp.
    pub per_block: Vec<Vec<T>>,
    /// Items whose timestamp is outside every block, sorted by timestamp.
    pub overflow: Vec<T>,
}

impl<T> Containment<T> {
    pub fn total(&self) -> usize {
        self.per_block.iter().map(Vec::len).sum::<usize>() + self.overflow.len()
    }
}

/// Blocks must be valid spans, sorted by start and pairwise disjoint.
pub fn check_blocks(blocks: &[TimedSpan]) -> Result<()> {
    for (i, pair) in blocks.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        if b.start < a.start {
            return Err(Error::invariant(format!(
                "blocks are not sorted: block {} starts at {} after block {} at {}",
                i + 1,
                b.start,
                i,
                a.start
            )));
        }
        if b.start < a.end {
            return Err(Error::invariant(format!(
                "blocks {} {} and {} {} overlap",
                i,
                a,
                i + 1,
                b
            )));
        }
    }
    for (i, s) in blocks.iter().enumerate() {
        if !(s.start < s.end) {
            return Err(Error::invariant(format!("block {i} has empty span {s}")));
        }
    }
    Ok(())
}

/// Assigns each item to the block whose half-open span contains its
/// timestamp. Timestamps are read through `timestamp` and never modified.
pub fn assign_by_containment<T, F>(
    items: impl IntoIterator<Item = T>,
    blocks: &[TimedSpan],
    timestamp: F,
) -> Result<Containment<T>>
where
    F: Fn(&T) -> f64,
{
    check_blocks(blocks)?;
    let mut items: Vec<T> = items.into_iter().collect();
    if let Some(bad) = items.iter().map(&timestamp).find(|t| !t.is_finite()) {
        return Err(Error::invariant(format!("non-finite event timestamp {bad}")));
    }
    items.sort_by(|a, b| timestamp(a).total_cmp(&timestamp(b)));

    let mut per_block: Vec<Vec<T>> = blocks.iter().map(|_| Vec::new()).collect();
    let mut overflow = Vec::new();
    for item in items {
        let t = timestamp(&item);
        // last block with start <= t
        let idx = blocks.partition_point(|b| b.start <= t);
        match idx.checked_sub(1) {
            Some(j) if blocks[j].contains(t) => per_block[j].push(item),
            _ => overflow.push(item),
        }
    }
    Ok(Containment {
        per_block,
        overflow,
    })
}

/// Anchor-level data for one block before nesting.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSeed {
    pub span: TimedSpan,
    pub topic_id: i32,
    pub text: String,
    pub embedding: Option<Vec<f64>>,
}

/// The three nested modality streams of a show.
#[derive(Debug, Clone, Default)]
pub struct Streams {
    pub laughs: Vec<LaughterEvent>,
    pub shots: Vec<ShotFrame>,
    pub poses: Vec<PoseFrame>,
}

/// Builds a unified timeline: blocks are numbered in order and every
/// stream is nested by containment (laughter by onset time).
pub fn align_show(show_id: &str, seeds: Vec<BlockSeed>, streams: Streams) -> Result<ShowTimeline> {
    let spans: Vec<TimedSpan> = seeds.iter().map(|s| s.span).collect();
    let laughs = assign_by_containment(streams.laughs, &spans, LaughterEvent::timestamp)?;
    let shots = assign_by_containment(streams.shots, &spans, |s| s.time)?;
    let poses = assign_by_containment(streams.poses, &spans, |p| p.time)?;

    let mut laugh_iter = laughs.per_block.into_iter();
    let mut shot_iter = shots.per_block.into_iter();
    let mut pose_iter = poses.per_block.into_iter();
    let timeline = seeds
        .into_iter()
        .enumerate()
        .map(|(i, seed)| TopicBlock {
            block_id: i as u32,
            span: seed.span,
            topic_id: seed.topic_id,
            text: seed.text,
            embedding: seed.embedding,
            laugh_events: laugh_iter.next().unwrap_or_default(),
            pose_keypoints: pose_iter.next().unwrap_or_default(),
            shot_events: shot_iter.next().unwrap_or_default(),
        })
        .collect();

    ShowTimeline::new(
        show_id,
        timeline,
        Overflow {
            laugh_events: laughs.overflow,
            pose_keypoints: poses.overflow,
            shot_events: shots.overflow,
        },
    )
}

/// Regular grid of `width`-second blocks covering `[0, end)`; the final block
/// is truncated at `end`.
pub fn grid_spans(end: f64, width: f64) -> Result<Vec<TimedSpan>> {
    if !(width > 0.0) {
        return Err(Error::invalid(format!("block width must be positive, got {width}")));
    }
    let mut spans = Vec::new();
    let mut k = 0u64;
    loop {
        let start = k as f64 * width;
        if start >= end {
            break;
        }
        spans.push(TimedSpan::new(start, ((k + 1) as f64 * width).min(end))?);
        k += 1;
    }
    Ok(spans)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeline::LaughType;
    use proptest::prelude::*;

    fn spans(bounds: &[(f64, f64)]) -> Vec<TimedSpan> {
        bounds.iter().map(|&(s, e)| TimedSpan::new(s, e).unwrap()).collect()
    }

    #[test]
    fn event_lands_in_block_58() {
        let blocks = grid_spans(3720.0, 60.0).unwrap();
        let got = assign_by_containment(vec![3483.0], &blocks, |t| *t).unwrap();
        assert_eq!(got.per_block[58], vec![3483.0]);
        assert_eq!(blocks[58].start, 3480.0);
    }

    #[test]
    fn block_end_goes_to_next_block() {
        let blocks = spans(&[(0.0, 60.0), (60.0, 120.0)]);
        let got = assign_by_containment(vec![60.0], &blocks, |t| *t).unwrap();
        assert!(got.per_block[0].is_empty());
        assert_eq!(got.per_block[1], vec![60.0]);
    }

    #[test]
    fn hundred_events_over_two_blocks_match_double_loop() {
        let blocks = spans(&[(0.0, 60.0), (60.0, 120.0)]);
        let events: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let got = assign_by_containment(events.clone(), &blocks, |t| *t).unwrap();

        let mut oracle = vec![Vec::new(); blocks.len()];
        for &e in &events {
            for (j, b) in blocks.iter().enumerate() {
                if b.start <= e && e < b.end {
                    oracle[j].push(e);
                }
            }
        }
        assert_eq!(got.per_block, oracle);
        assert_eq!(got.per_block[0].len(), 60);
        assert_eq!(got.per_block[1].len(), 40);
    }

    #[test]
    fn out_of_range_events_overflow() {
        let blocks = spans(&[(10.0, 20.0), (30.0, 40.0)]);
        let got = assign_by_containment(vec![5.0, 25.0, 45.0, 15.0], &blocks, |t| *t).unwrap();
        assert_eq!(got.overflow, vec![5.0, 25.0, 45.0]);
        assert_eq!(got.total(), 4);
    }

    #[test]
    fn overlapping_blocks_rejected() {
        let blocks = spans(&[(0.0, 60.0), (50.0, 120.0)]);
        let err = assign_by_containment(vec![1.0], &blocks, |t| *t).unwrap_err();
        assert!(matches!(err, Error::Invariant(_)));
    }

    #[test]
    fn unsorted_blocks_rejected() {
        let blocks = spans(&[(60.0, 120.0), (0.0, 60.0)]);
        assert!(assign_by_containment(vec![1.0], &blocks, |t| *t).is_err());
    }

    #[test]
    fn straddling_laugh_stays_whole() {
        let seeds = grid_spans(120.0, 60.0)
            .unwrap()
            .into_iter()
            .map(|span| BlockSeed {
                span,
                topic_id: 1,
                text: String::new(),
                embedding: None,
            })
            .collect();
        let laugh = LaughterEvent::new(58.0, 63.5, LaughType::Laughter, 0.7).unwrap();
        let show = align_show(
            "s",
            seeds,
            Streams {
                laughs: vec![laugh.clone()],
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(show.timeline[0].laugh_events, vec![laugh]);
        assert!(show.timeline[1].laugh_events.is_empty());
    }

    #[test]
    fn grid_truncates_last_block() {
        let g = grid_spans(130.0, 60.0).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g[2], TimedSpan::new(120.0, 130.0).unwrap());
    }

    proptest! {
        #[test]
        fn shuffling_does_not_change_assignment(
            mut ts in proptest::collection::vec(0.0f64..200.0, 0..80),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let blocks = grid_spans(180.0, 60.0).unwrap();
            let a = assign_by_containment(ts.clone(), &blocks, |t| *t).unwrap();
            ts.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let b = assign_by_containment(ts, &blocks, |t| *t).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn timestamps_are_not_resampled(ts in proptest::collection::vec(0.0f64..120.0, 0..50)) {
            let blocks = grid_spans(120.0, 60.0).unwrap();
            let got = assign_by_containment(ts.clone(), &blocks, |t| *t).unwrap();
            let mut flat: Vec<u64> = got.per_block.concat().iter().map(|t| t.to_bits()).collect();
            let mut orig: Vec<u64> = ts.iter().map(|t| t.to_bits()).collect();
            flat.sort_unstable();
            orig.sort_unstable();
            prop_assert_eq!(flat, orig);
        }
    }
}
