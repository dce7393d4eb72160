use crate::timeline::LaughterEvent;

/// Anchor times and labels for one show.
///
/// Anchors lie at `k * step` for `k * step < end`, skipping instants inside
/// an event (`start <= t < end`). An anchor is positive when some event
/// starts in `[t, t + delta)`.
pub fn sample_anchors(events: &[LaughterEvent], end: f64, step: f64, delta: f64) -> Vec<(f64, bool)> {
    let mut out = Vec::new();
    if !(step > 0.0) {
        return out;
    }
    let mut spans: Vec<(f64, f64)> = events.iter().map(|e| (e.span.start, e.span.end)).collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    // reach[i]: latest end among the first i events
    let mut reach = Vec::with_capacity(spans.len() + 1);
    reach.push(f64::NEG_INFINITY);
    for &(_, e) in &spans {
        let last = *reach.last().unwrap();
        reach.push(f64::max(last, e));
    }
    let mut k = 0u64;
    loop {
        let t = k as f64 * step;
        if t >= end {
            break;
        }
        k += 1;
        let i = spans.partition_point(|s| s.0 <= t);
        if reach[i] > t {
            continue;
        }
        let label = spans.get(i).is_some_and(|s| s.0 < t + delta);
        out.push((t, label));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeline::LaughType;
    use rand::{Rng, SeedableRng};

    fn ev(s: f64, e: f64) -> LaughterEvent {
        LaughterEvent::new(s, e, LaughType::Laughter, 0.9).unwrap()
    }

    #[test]
    fn single_event_fixture() {
        let a = sample_anchors(&[ev(10.0, 12.0)], 20.0, 1.0, 2.0);
        let get = |t: f64| a.iter().find(|x| x.0 == t).map(|x| x.1);
        assert_eq!(get(10.0), None);
        assert_eq!(get(11.0), None);
        assert_eq!(get(12.0), Some(false));
        assert_eq!(get(9.0), Some(true));
        // [8, 10) does not contain the onset at 10
        assert_eq!(get(8.0), Some(false));
        assert_eq!(get(7.0), Some(false));
        assert_eq!(a.len(), 18);
    }

    #[test]
    fn no_events_all_negative() {
        let a = sample_anchors(&[], 30.0, 1.0, 2.0);
        assert_eq!(a.len(), 30);
        assert!(a.iter().all(|x| !x.1));
    }

    #[test]
    fn matches_millisecond_raster() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let mut evs = Vec::new();
            let mut cur = rng.gen_range(0.0..5.0);
            while cur < 200.0 {
                let d = rng.gen_range(0.3..4.0);
                evs.push(ev(cur, cur + d));
                cur += d + rng.gen_range(0.0..10.0);
            }
            let got = sample_anchors(&evs, 200.0, 1.0, 2.0);
            // rasterize: mark in-event milliseconds and onset milliseconds
            let n = 210_000usize;
            let mut inside = vec![false; n];
            let mut onset = vec![false; n];
            for e in &evs {
                let s = (e.span.start * 1000.0).ceil() as usize;
                let t = (e.span.end * 1000.0).ceil() as usize;
                for m in s..t.min(n) {
                    inside[m] = true;
                }
                let o = (e.span.start * 1000.0).floor() as usize;
                if o < n {
                    onset[o] = true;
                }
            }
            let mut want = Vec::new();
            for k in 0..200 {
                let m = k * 1000;
                if inside[m] {
                    continue;
                }
                want.push((k as f64, (m..m + 2000).any(|x| onset[x])));
            }
            assert_eq!(got, want);
        }
    }

    #[test]
    fn permutation_invariant_labels() {
        let mut evs = vec![ev(3.0, 4.0), ev(9.5, 10.0), ev(20.0, 25.0), ev(31.0, 31.5)];
        let a = sample_anchors(&evs, 40.0, 1.0, 2.0);
        evs.swap(0, 2);
        evs.swap(1, 3);
        assert_eq!(a, sample_anchors(&evs, 40.0, 1.0, 2.0));
    }
}
