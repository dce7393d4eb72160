//! Laughter window post-processing: stride-level tagger scores are merged
//! into continuous events, and events are measured against time spans.

use serde::{Deserialize, Serialize};

use crate::timeline::ingest::parse_jsonl;
use crate::timeline::{LaughType, LaughterEvent, TimedSpan};
use crate::{Error, Result};

pub const DEFAULT_STRIDE: f64 = 0.8;

/// Default detection threshold; favors recall.
pub const DEFAULT_THRESHOLD: f64 = 0.3;

/// Windows closer than this are considered touching (absorbs stride rounding).
pub const TOUCH_EPS: f64 = 1e-9;

/// One tagger window, assumed forward-aligned: it covers `[start, start + stride)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaughWindow {
    pub start: f64,
    pub stride: f64,
    pub label: LaughType,
    pub probability: f64,
}

impl LaughWindow {
    pub fn end(&self) -> f64 {
        self.start + self.stride
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct WindowRecord {
    start: f64,
    #[serde(default = "default_stride")]
    stride: f64,
    label: String,
    probability: f64,
}

fn default_stride() -> f64 {
    DEFAULT_STRIDE
}

pub fn read_windows(text: &str) -> Result<Vec<LaughWindow>> {
    let recs: Vec<WindowRecord> = parse_jsonl(text)?;
    recs.into_iter()
        .enumerate()
        .map(|(i, r)| {
            let fail = |message: String| Error::Parse { line: i + 1, message };
            if !(r.stride > 0.0) {
                return Err(fail(format!("stride must be positive, got {}", r.stride)));
            }
            if !(0.0..=1.0).contains(&r.probability) || !r.start.is_finite() || r.start < 0.0 {
                return Err(fail("probability or start out of range".into()));
            }
            let label = r.label.parse().map_err(|e: Error| fail(e.to_string()))?;
            Ok(LaughWindow {
                start: r.start,
                stride: r.stride,
                label,
                probability: r.probability,
            })
        })
        .collect()
}

pub fn write_windows(windows: &[LaughWindow]) -> String {
    let recs: Vec<WindowRecord> = windows
        .iter()
        .map(|w| WindowRecord {
            start: w.start,
            stride: w.stride,
            label: w.label.as_str().to_string(),
            probability: w.probability,
        })
        .collect();
    crate::timeline::ingest::to_jsonl(&recs)
}

/// Merges positive windows into events.
///
/// When several labels are scored for the same window start, only the most
/// probable one is considered. Windows with `probability >= threshold` and the
/// same label merge while they touch or overlap; the event confidence is the
/// maximum member probability.
pub fn merge_windows(windows: &[LaughWindow], threshold: f64) -> Vec<LaughterEvent> {
    let mut sorted: Vec<&LaughWindow> = windows.iter().filter(|w| w.start.is_finite()).collect();
    sorted.sort_by(|a, b| {
        a.start
            .total_cmp(&b.start)
            .then(b.probability.total_cmp(&a.probability))
            .then(a.label.cmp(&b.label))
    });
    sorted.dedup_by(|later, first| later.start == first.start);

    let mut events = Vec::new();
    let mut open: Option<(LaughType, f64, f64, f64)> = None;
    for w in sorted.into_iter().filter(|w| w.probability >= threshold) {
        match open.as_mut() {
            Some((label, _, end, conf)) if *label == w.label && w.start <= *end + TOUCH_EPS => {
                *end = end.max(w.end());
                *conf = conf.max(w.probability);
            }
            _ => {
                let mut start = w.start;
                if let Some((label, s, e, c)) = open.take() {
                    push_event(&mut events, label, s, e, c);
                    start = start.max(e);
                }
                if start < w.end() {
                    open = Some((w.label, start, w.end(), w.probability));
                }
            }
        }
    }
    if let Some((label, s, e, c)) = open {
        push_event(&mut events, label, s, e, c);
    }
    events
}

fn push_event(out: &mut Vec<LaughterEvent>, label: LaughType, start: f64, end: f64, conf: f64) {
    out.push(LaughterEvent {
        span: TimedSpan { start, end },
        label,
        confidence: conf.clamp(0.0, 1.0),
    });
}

/// Fraction of `[start, end)` covered by the union of `events`, with events
/// clipped to the interval.
pub fn coverage_in(events: &[LaughterEvent], start: f64, end: f64) -> Result<f64> {
    let len = end - start;
    if !(len > 0.0) {
        return Err(Error::invalid(format!("coverage span [{start}, {end}) has no duration")));
    }
    Ok(covered_length(events.iter().map(|e| (e.span.start, e.span.end)), start, end) / len)
}

pub fn coverage(events: &[LaughterEvent], span: &TimedSpan) -> Result<f64> {
    coverage_in(events, span.start, span.end)
}

/// Length of the union of intervals clipped to `[start, end)`.
pub fn covered_length(intervals: impl Iterator<Item = (f64, f64)>, start: f64, end: f64) -> f64 {
    let mut clipped: Vec<(f64, f64)> = intervals
        .map(|(s, e)| (s.max(start), e.min(end)))
        .filter(|(s, e)| s < e)
        .collect();
    clipped.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (s, e) in clipped {
        match cur.as_mut() {
            Some((_, ce)) if s <= *ce => *ce = ce.max(e),
            _ => {
                if let Some((cs, ce)) = cur {
                    total += ce - cs;
                }
                cur = Some((s, e));
            }
        }
    }
    if let Some((cs, ce)) = cur {
        total += ce - cs;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn win(start: f64, label: LaughType, p: f64) -> LaughWindow {
        LaughWindow {
            start,
            stride: DEFAULT_STRIDE,
            label,
            probability: p,
        }
    }

    fn ev(s: f64, e: f64) -> LaughterEvent {
        LaughterEvent::new(s, e, LaughType::Laughter, 0.5).unwrap()
    }

    #[test]
    fn three_contiguous_windows_merge() {
        let w = vec![
            win(10.0, LaughType::Laughter, 0.5),
            win(10.8, LaughType::Laughter, 0.9),
            win(11.6, LaughType::Laughter, 0.4),
        ];
        let ev = merge_windows(&w, 0.3);
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].span.start, 10.0);
        assert!((ev[0].span.end - 12.4).abs() < 1e-12);
        assert_eq!(ev[0].confidence, 0.9);
    }

    #[test]
    fn negative_window_splits() {
        let w = vec![
            win(0.0, LaughType::Laughter, 0.5),
            win(0.8, LaughType::Laughter, 0.1),
            win(1.6, LaughType::Laughter, 0.5),
        ];
        assert_eq!(merge_windows(&w, 0.3).len(), 2);
    }

    #[test]
    fn labels_never_merge() {
        let w = vec![win(0.0, LaughType::Laughter, 0.5), win(0.8, LaughType::Giggle, 0.5)];
        let ev = merge_windows(&w, 0.3);
        assert_eq!(ev.len(), 2);
        assert_eq!(ev[1].label, LaughType::Giggle);
    }

    #[test]
    fn gap_splits_touch_merges() {
        let touching = vec![win(0.0, LaughType::Laughter, 0.5), win(0.8, LaughType::Laughter, 0.5)];
        assert_eq!(merge_windows(&touching, 0.3).len(), 1);
        let gapped = vec![win(0.0, LaughType::Laughter, 0.5), win(0.8001, LaughType::Laughter, 0.5)];
        assert_eq!(merge_windows(&gapped, 0.3).len(), 2);
    }

    #[test]
    fn most_probable_label_wins_per_window() {
        let w = vec![win(0.0, LaughType::Laughter, 0.4), win(0.0, LaughType::BellyLaugh, 0.7)];
        let ev = merge_windows(&w, 0.3);
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].label, LaughType::BellyLaugh);
    }

    fn union_oracle(windows: &[LaughWindow], threshold: f64) -> Vec<(LaughType, f64, f64)> {
        let mut out = Vec::new();
        for label in LaughType::ALL {
            let mut iv: Vec<(f64, f64)> = windows
                .iter()
                .filter(|w| w.label == label && w.probability >= threshold)
                .map(|w| (w.start, w.end()))
                .collect();
            iv.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut merged: Vec<(f64, f64)> = Vec::new();
            for (s, e) in iv {
                if let Some(last) = merged.last_mut() {
                    if s <= last.1 + TOUCH_EPS {
                        last.1 = last.1.max(e);
                        continue;
                    }
                }
                merged.push((s, e));
            }
            out.extend(merged.into_iter().map(|(s, e)| (label, s, e)));
        }
        out.sort_by(|a, b| a.1.total_cmp(&b.1));
        // a new event never starts before the previous one ends
        for i in 1..out.len() {
            out[i].1 = out[i].1.max(out[i - 1].2);
        }
        out
    }

    #[test]
    fn thousand_windows_match_interval_union() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let labels = [LaughType::Laughter, LaughType::Giggle, LaughType::BellyLaugh];
        let windows: Vec<LaughWindow> = (0..1000)
            .map(|i| win(i as f64 * DEFAULT_STRIDE, labels[rng.gen_range(0..3)], rng.gen()))
            .collect();
        let got: Vec<(LaughType, f64, f64)> = merge_windows(&windows, 0.3)
            .into_iter()
            .map(|e| (e.label, e.span.start, e.span.end))
            .collect();
        assert_eq!(got, union_oracle(&windows, 0.3));
    }

    #[test]
    fn single_event_coverage() {
        let span = TimedSpan::new(3480.0, 3540.0).unwrap();
        let c = coverage(&[ev(3482.4, 3485.6)], &span).unwrap();
        assert!((c - 3.2 / 60.0).abs() < 1e-9);
    }

    #[test]
    fn full_cover_and_clipping() {
        let span = TimedSpan::new(10.0, 20.0).unwrap();
        assert_eq!(coverage(&[ev(0.0, 30.0)], &span).unwrap(), 1.0);
        assert_eq!(coverage(&[ev(5.0, 15.0)], &span).unwrap(), 0.5);
        assert!(coverage_in(&[], 3.0, 3.0).is_err());
    }

    #[test]
    fn coverage_matches_rasterized_grid() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let mut t = 0.0;
            let mut events = Vec::new();
            while t < 60.0 {
                t += rng.gen_range(0.1..8.0);
                let d = rng.gen_range(0.2..5.0);
                events.push(ev(t, t + d));
                t += d;
            }
            let (a, b) = (rng.gen_range(0.0..20.0), rng.gen_range(30.0..70.0));
            let got = coverage_in(&events, a, b).unwrap();
            let n = ((b - a) * 1000.0).round() as usize;
            let hit = (0..n)
                .filter(|i| {
                    let x = a + (*i as f64 + 0.5) / 1000.0;
                    events.iter().any(|e| e.span.contains(x))
                })
                .count();
            assert!((got - hit as f64 / n as f64).abs() < 1e-3);
        }
    }

    proptest! {
        #[test]
        fn merged_events_sorted_disjoint_and_monotone(
            probs in proptest::collection::vec((0.0f64..1.0, 0usize..3), 1..200),
            t1 in 0.0f64..1.0,
            dt in 0.0f64..0.5,
        ) {
            let labels = [LaughType::Laughter, LaughType::Giggle, LaughType::BellyLaugh];
            let windows: Vec<LaughWindow> = probs.iter().enumerate()
                .map(|(i, &(p, l))| win(i as f64 * DEFAULT_STRIDE, labels[l], p))
                .collect();
            let low = merge_windows(&windows, t1);
            for pair in low.windows(2) {
                prop_assert!(pair[0].span.end <= pair[1].span.start);
                prop_assert!(pair[0].span.start < pair[1].span.start);
            }
            let total = |ev: &[LaughterEvent]| ev.iter().map(|e| e.span.duration()).sum::<f64>();
            let high = merge_windows(&windows, t1 + dt);
            prop_assert!(total(&high) <= total(&low) + 1e-9);
        }

        #[test]
        fn coverage_is_additive_and_bounded(cut in 0.01f64..0.99, seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let events: Vec<LaughterEvent> = (0..10)
                .map(|i| { let s = i as f64 * 6.0 + rng.gen_range(0.0..3.0); ev(s, s + rng.gen_range(0.1..3.0)) })
                .collect();
            let (a, b) = (0.0, 60.0);
            let m = a + cut * (b - a);
            let whole = coverage_in(&events, a, b).unwrap();
            let parts = coverage_in(&events, a, m).unwrap() * (m - a) + coverage_in(&events, m, b).unwrap() * (b - m);
            prop_assert!((whole * (b - a) - parts).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&whole));
        }
    }
}
