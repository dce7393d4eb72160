//! Kinematic signals from raw COCO-17 keypoints: arm spread, kinetic energy
//! and trunk lean, plus centered sliding-window smoothing.
//!
//! Joints recorded as `(0, 0)` are invalid and never contribute; a signal is
//! absent (not zero) whenever its required joints are missing.

use serde::{Deserialize, Serialize};

use crate::timeline::{Joint, PoseFrame, ShotFrame, ShotLabel};
use crate::{Error, Result};

/// Guard on shoulder width and torso height, in pixels.
pub const EPS: f64 = 1e-6;

/// Longest gap between frames that still yields a kinetic-energy value.
pub const MAX_PAIR_GAP: f64 = 2.0;

pub const DEFAULT_WINDOW: f64 = 30.0;

/// Shot classes whose frames are used for pose analysis by default.
pub const DEFAULT_SHOT_FILTER: [ShotLabel; 2] = [ShotLabel::FullShot, ShotLabel::MediumLongShot];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicSample {
    pub time: f64,
    pub arm_spread: Option<f64>,
    pub kinetic_energy: Option<f64>,
    /// Degrees; positive when the hip midpoint lies to the +x side of the
    /// shoulder midpoint (image coordinates, y down).
    pub trunk_lean: Option<f64>,
    #[serde(skip)]
    pub detected: bool,
}

impl KinematicSample {
    pub fn empty(time: f64) -> Self {
        Self {
            time,
            arm_spread: None,
            kinetic_energy: None,
            trunk_lean: None,
            detected: false,
        }
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn midpoint(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
}

/// Wrist-to-wrist distance over shoulder-to-shoulder distance.
pub fn arm_spread(frame: &PoseFrame) -> Option<f64> {
    let w1 = frame.joint(Joint::LeftWrist)?;
    let w2 = frame.joint(Joint::RightWrist)?;
    let s1 = frame.joint(Joint::LeftShoulder)?;
    let s2 = frame.joint(Joint::RightShoulder)?;
    let shoulders = dist(s1, s2);
    if shoulders < EPS {
        return None;
    }
    Some(dist(w1, w2) / shoulders)
}

/// Sum of displacements of joints valid in both frames, divided by the
/// current bounding-box height.
pub fn kinetic_energy(curr: &PoseFrame, prev: &PoseFrame) -> Option<f64> {
    if !curr.has_detection || !prev.has_detection || !(curr.time > prev.time) {
        return None;
    }
    let h = curr.bbox.height();
    if !(h > 0.0) {
        return None;
    }
    let mut total = 0.0;
    let mut any = false;
    for j in Joint::ALL {
        if let (Some(a), Some(b)) = (curr.keypoints.get(j), prev.keypoints.get(j)) {
            total += dist(a, b);
            any = true;
        }
    }
    any.then(|| total / h)
}

/// Signed torso angle from vertical, in degrees.
pub fn trunk_lean(frame: &PoseFrame) -> Option<f64> {
    let sho = midpoint(frame.joint(Joint::LeftShoulder)?, frame.joint(Joint::RightShoulder)?);
    let hip = midpoint(frame.joint(Joint::LeftHip)?, frame.joint(Joint::RightHip)?);
    let dy = hip[1] - sho[1];
    if dy.abs() < EPS {
        return None;
    }
    Some(((hip[0] - sho[0]) / dy).atan().to_degrees())
}

/// Per-frame signals for a time-sorted pose stream. Kinetic energy pairs each
/// frame with the closest earlier frame that has a detection, if that frame
/// is at most [`MAX_PAIR_GAP`] seconds older.
pub fn compute_series(frames: &[PoseFrame]) -> Vec<KinematicSample> {
    let mut out = Vec::with_capacity(frames.len());
    let mut last_detected: Option<&PoseFrame> = None;
    for f in frames {
        let mut s = KinematicSample::empty(f.time);
        if f.has_detection {
            s.detected = true;
            s.arm_spread = arm_spread(f);
            s.trunk_lean = trunk_lean(f);
            s.kinetic_energy = last_detected
                .filter(|p| f.time - p.time <= MAX_PAIR_GAP)
                .and_then(|p| kinetic_energy(f, p));
            last_detected = Some(f);
        }
        out.push(s);
    }
    out
}

/// Keeps pose frames whose shot label (the shot frame at the same second) is
/// in `allowed`. Frames with no matching shot frame are dropped.
pub fn filter_by_shots(poses: &[PoseFrame], shots: &[ShotFrame], allowed: &[ShotLabel]) -> Vec<PoseFrame> {
    poses
        .iter()
        .filter(|p| {
            let i = shots.partition_point(|s| s.time < p.time - 0.5);
            shots[i..]
                .iter()
                .take_while(|s| s.time <= p.time + 0.5)
                .min_by(|a, b| (a.time - p.time).abs().total_cmp(&(b.time - p.time).abs()))
                .is_some_and(|s| allowed.contains(&s.label))
        })
        .cloned()
        .collect()
}

/// Compensated running sum supporting removal.
#[derive(Default)]
struct RunningMean {
    sum: f64,
    comp: f64,
    n: usize,
}

impl RunningMean {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
        self.n += 1;
    }

    fn remove(&mut self, x: f64) {
        self.n -= 1;
        if self.n == 0 {
            self.sum = 0.0;
            self.comp = 0.0;
            return;
        }
        let t = self.sum - x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) - x;
        } else {
            self.comp += (-x - t) + self.sum;
        }
        self.sum = t;
    }

    fn mean(&self) -> f64 {
        (self.sum + self.comp) / self.n as f64
    }
}

fn smooth_field(samples: &[KinematicSample], half: f64, get: impl Fn(&KinematicSample) -> Option<f64>) -> Vec<Option<f64>> {
    let n = samples.len();
    let mut out = vec![None; n];
    let (mut lo, mut hi) = (0usize, 0usize);
    let mut acc = RunningMean::default();
    for i in 0..n {
        let t = samples[i].time;
        while hi < n && samples[hi].time <= t + half {
            if let Some(v) = get(&samples[hi]) {
                acc.add(v);
            }
            hi += 1;
        }
        while samples[lo].time < t - half {
            if let Some(v) = get(&samples[lo]) {
                acc.remove(v);
            }
            lo += 1;
        }
        if get(&samples[i]).is_some() {
            out[i] = Some(acc.mean());
        }
    }
    out
}

/// Centered moving average: each present value becomes the mean of present
/// values with time in `[t - window/2, t + window/2]`.
pub fn smooth(samples: &[KinematicSample], window: f64) -> Result<Vec<KinematicSample>> {
    if !(window > 0.0) {
        return Err(Error::invalid(format!("smoothing window must be positive, got {window}")));
    }
    if samples.windows(2).any(|w| w[1].time < w[0].time) {
        return Err(Error::invariant("kinematic samples must be time-sorted"));
    }
    let half = window / 2.0;
    let arm = smooth_field(samples, half, |s| s.arm_spread);
    let ke = smooth_field(samples, half, |s| s.kinetic_energy);
    let lean = smooth_field(samples, half, |s| s.trunk_lean);
    Ok(samples
        .iter()
        .enumerate()
        .map(|(i, s)| KinematicSample {
            arm_spread: arm[i],
            kinetic_energy: ke[i],
            trunk_lean: lean[i],
            ..*s
        })
        .collect())
}

pub fn read_samples(text: &str) -> Result<Vec<KinematicSample>> {
    let mut v: Vec<KinematicSample> = crate::timeline::ingest::parse_jsonl(text)?;
    for s in &mut v {
        s.detected = s.arm_spread.is_some() || s.kinetic_energy.is_some() || s.trunk_lean.is_some();
    }
    Ok(v)
}

pub fn write_samples(samples: &[KinematicSample]) -> String {
    crate::timeline::ingest::to_jsonl(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeline::{BoundingBox, Keypoints};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn frame(time: f64, joints: &[(Joint, [f64; 2])], height: f64) -> PoseFrame {
        let mut kp = Keypoints::default();
        for &(j, xy) in joints {
            kp.set(j, xy);
        }
        PoseFrame {
            time,
            has_detection: true,
            bbox: BoundingBox { xmin: 0.0, ymin: 0.0, xmax: 100.0, ymax: height },
            keypoints: kp,
        }
    }

    fn torso(wl: [f64; 2], wr: [f64; 2], sl: [f64; 2], sr: [f64; 2], hl: [f64; 2], hr: [f64; 2]) -> PoseFrame {
        frame(
            0.0,
            &[
                (Joint::LeftWrist, wl),
                (Joint::RightWrist, wr),
                (Joint::LeftShoulder, sl),
                (Joint::RightShoulder, sr),
                (Joint::LeftHip, hl),
                (Joint::RightHip, hr),
            ],
            500.0,
        )
    }

    #[test]
    fn canonical_arm_spread() {
        let f = torso([100.0, 300.0], [300.0, 300.0], [150.0, 100.0], [250.0, 100.0], [160.0, 400.0], [240.0, 400.0]);
        assert_eq!(arm_spread(&f), Some(2.0));
    }

    #[test]
    fn neutral_stance_is_one() {
        let f = torso([150.0, 300.0], [250.0, 300.0], [150.0, 100.0], [250.0, 100.0], [160.0, 400.0], [240.0, 400.0]);
        assert_eq!(arm_spread(&f), Some(1.0));
    }

    #[test]
    fn invalid_wrist_makes_spread_absent() {
        let f = torso([0.0, 0.0], [300.0, 300.0], [150.0, 100.0], [250.0, 100.0], [160.0, 400.0], [240.0, 400.0]);
        assert_eq!(arm_spread(&f), None);
    }

    #[test]
    fn undetected_frame_yields_nothing() {
        let mut f = torso([100.0, 300.0], [300.0, 300.0], [150.0, 100.0], [250.0, 100.0], [160.0, 400.0], [240.0, 400.0]);
        f.has_detection = false;
        assert_eq!(arm_spread(&f), None);
        assert_eq!(trunk_lean(&f), None);
        let s = compute_series(&[f]);
        assert_eq!(s[0], KinematicSample::empty(0.0));
    }

    #[test]
    fn coincident_shoulders_absent() {
        let f = torso([100.0, 300.0], [300.0, 300.0], [150.0, 100.0], [150.0, 100.0], [160.0, 400.0], [240.0, 400.0]);
        assert_eq!(arm_spread(&f), None);
    }

    #[test]
    fn energy_examples() {
        let a = frame(0.0, &[(Joint::Nose, [10.0, 10.0]), (Joint::LeftHip, [40.0, 40.0])], 500.0);
        let mut b = a.clone();
        b.time = 1.0;
        assert_eq!(kinetic_energy(&b, &a), Some(0.0));
        b.keypoints.set(Joint::Nose, [40.0, 50.0]);
        assert!((kinetic_energy(&b, &a).unwrap() - 0.1).abs() < 1e-15);
        let mut flat = b.clone();
        flat.bbox.ymax = 0.0;
        assert_eq!(kinetic_energy(&flat, &a), None);
        let empty = frame(2.0, &[(Joint::RightAnkle, [1.0, 1.0])], 500.0);
        assert_eq!(kinetic_energy(&empty, &a), None);
    }

    #[test]
    fn energy_matches_per_joint_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let mut prev = frame(0.0, &[], rng.gen_range(50.0..800.0));
            let mut curr = frame(1.0, &[], rng.gen_range(50.0..800.0));
            for j in Joint::ALL {
                if rng.gen_bool(0.8) {
                    prev.keypoints.set(j, [rng.gen_range(1.0..1920.0), rng.gen_range(1.0..1080.0)]);
                }
                if rng.gen_bool(0.8) {
                    curr.keypoints.set(j, [rng.gen_range(1.0..1920.0), rng.gen_range(1.0..1080.0)]);
                }
            }
            let mut sum = 0.0;
            let mut n = 0;
            for k in 0..17 {
                let (a, b) = (curr.keypoints.0[k], prev.keypoints.0[k]);
                if a != [0.0, 0.0] && b != [0.0, 0.0] {
                    sum += ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
                    n += 1;
                }
            }
            let expected = (n > 0).then(|| sum / curr.bbox.height());
            match (kinetic_energy(&curr, &prev), expected) {
                (Some(x), Some(y)) => assert!((x - y).abs() < 1e-12),
                (x, y) => assert_eq!(x, y),
            }
        }
    }

    #[test]
    fn lean_examples() {
        let vertical = torso([1.0, 1.0], [2.0, 2.0], [100.0, 100.0], [200.0, 100.0], [100.0, 300.0], [200.0, 300.0]);
        assert_eq!(trunk_lean(&vertical), Some(0.0));
        // hip midpoint shifted by dx = dy = 200
        let diag = torso([1.0, 1.0], [2.0, 2.0], [100.0, 100.0], [200.0, 100.0], [300.0, 300.0], [400.0, 300.0]);
        assert!((trunk_lean(&diag).unwrap() - 45.0).abs() < 1e-12);
        // hips to +x of shoulders with y growing downward: atan(+/+) > 0
        let right = torso([1.0, 1.0], [2.0, 2.0], [100.0, 100.0], [200.0, 100.0], [130.0, 300.0], [230.0, 300.0]);
        assert!(trunk_lean(&right).unwrap() > 0.0);
        let level = torso([1.0, 1.0], [2.0, 2.0], [100.0, 100.0], [200.0, 100.0], [100.0, 100.0], [200.0, 100.0]);
        assert_eq!(trunk_lean(&level), None);
    }

    #[test]
    fn energy_pairs_with_recent_detection_only() {
        let a = frame(0.0, &[(Joint::Nose, [10.0, 10.0])], 100.0);
        let gap = PoseFrame::undetected(1.0);
        let b = frame(2.0, &[(Joint::Nose, [20.0, 10.0])], 100.0);
        let c = frame(5.0, &[(Joint::Nose, [30.0, 10.0])], 100.0);
        let s = compute_series(&[a, gap, b, c]);
        assert_eq!(s[0].kinetic_energy, None);
        assert!(!s[1].detected);
        assert_eq!(s[2].kinetic_energy, Some(0.1));
        assert_eq!(s[3].kinetic_energy, None);
    }

    #[test]
    fn shot_filter_keeps_allowed_frames() {
        let poses = vec![PoseFrame::undetected(1.0), PoseFrame::undetected(2.0), PoseFrame::undetected(3.0)];
        let shots = vec![
            ShotFrame::new(1.0, ShotLabel::FullShot, 0, 0.9).unwrap(),
            ShotFrame::new(2.0, ShotLabel::MediumCloseUp, 1, 0.9).unwrap(),
        ];
        let kept = filter_by_shots(&poses, &shots, &DEFAULT_SHOT_FILTER);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].time, 1.0);
    }

    fn sample(t: f64, v: Option<f64>) -> KinematicSample {
        KinematicSample { time: t, arm_spread: v, kinetic_energy: v, trunk_lean: v, detected: v.is_some() }
    }

    fn brute_smooth(s: &[KinematicSample], window: f64) -> Vec<Option<f64>> {
        s.iter()
            .map(|x| {
                x.arm_spread?;
                let vals: Vec<f64> = s
                    .iter()
                    .filter(|y| y.time >= x.time - window / 2.0 && y.time <= x.time + window / 2.0)
                    .filter_map(|y| y.arm_spread)
                    .collect();
                Some(vals.iter().sum::<f64>() / vals.len() as f64)
            })
            .collect()
    }

    #[test]
    fn smoothing_constant_and_single() {
        let c: Vec<_> = (0..100).map(|i| sample(i as f64, Some(1.25))).collect();
        let sm = smooth(&c, 30.0).unwrap();
        assert!(sm.iter().all(|s| s.arm_spread == Some(1.25)));
        let one = vec![sample(0.0, None), sample(1.0, Some(3.0)), sample(2.0, None)];
        let sm = smooth(&one, 30.0).unwrap();
        assert_eq!(sm[1].arm_spread, Some(3.0));
        assert_eq!(sm[0].arm_spread, None);
    }

    #[test]
    fn smoothing_triangle_matches_brute_force() {
        let tri: Vec<_> = (0..400)
            .map(|i| {
                let p = (i % 40) as f64;
                sample(i as f64, Some(if p < 20.0 { p } else { 40.0 - p }))
            })
            .collect();
        let got = smooth(&tri, 30.0).unwrap();
        for (g, o) in got.iter().zip(brute_smooth(&tri, 30.0)) {
            assert!((g.arm_spread.unwrap() - o.unwrap()).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn scale_and_translation_invariance(
            seed in any::<u64>(),
            scale in 0.1f64..10.0,
            dx in -500.0f64..500.0,
            dy in -500.0f64..500.0,
        ) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut a = frame(0.0, &[], 0.0);
            a.bbox = BoundingBox { xmin: 10.0, ymin: 20.0, xmax: 600.0, ymax: rng.gen_range(200.0..900.0) };
            for j in Joint::ALL {
                a.keypoints.set(j, [rng.gen_range(600.0..1200.0), rng.gen_range(600.0..1200.0)]);
            }
            let mut b = a.clone();
            b.time = 1.0;
            for j in Joint::ALL {
                let p = a.keypoints.0[j.index()];
                b.keypoints.set(j, [p[0] + rng.gen_range(-30.0..30.0), p[1] + rng.gen_range(-30.0..30.0)]);
            }

            let tf = |f: &PoseFrame, g: &dyn Fn([f64; 2]) -> [f64; 2]| {
                let mut o = f.clone();
                o.keypoints = f.keypoints.map(g);
                let lo = g([f.bbox.xmin, f.bbox.ymin]);
                let hi = g([f.bbox.xmax, f.bbox.ymax]);
                o.bbox = BoundingBox { xmin: lo[0], ymin: lo[1], xmax: hi[0], ymax: hi[1] };
                o
            };
            let scaled = |p: [f64; 2]| [p[0] * scale, p[1] * scale];
            let shifted = |p: [f64; 2]| [p[0] + dx, p[1] + dy];
            let close = |x: Option<f64>, y: Option<f64>| match (x, y) {
                (Some(x), Some(y)) => (x - y).abs() <= 1e-9 * x.abs().max(1.0),
                (x, y) => x == y,
            };
            for g in [&scaled as &dyn Fn([f64; 2]) -> [f64; 2], &shifted] {
                let (a2, b2) = (tf(&a, g), tf(&b, g));
                prop_assert!(close(arm_spread(&a2), arm_spread(&a)));
                prop_assert!(close(trunk_lean(&a2), trunk_lean(&a)));
                prop_assert!(close(kinetic_energy(&b2, &a2), kinetic_energy(&b, &a)));
            }
        }

        #[test]
        fn smoothing_matches_oracle_and_stays_in_range(
            vals in proptest::collection::vec(proptest::option::weighted(0.8, -50.0f64..50.0), 1..200),
            window in 1.0f64..60.0,
        ) {
            let s: Vec<_> = vals.iter().enumerate().map(|(i, v)| sample(i as f64, *v)).collect();
            let got = smooth(&s, window).unwrap();
            let want = brute_smooth(&s, window);
            for (i, (g, o)) in got.iter().zip(&want).enumerate() {
                match (g.arm_spread, o) {
                    (Some(x), Some(y)) => {
                        prop_assert!((x - y).abs() < 1e-12);
                        let inwin: Vec<f64> = s.iter()
                            .filter(|y| (y.time - s[i].time).abs() <= window / 2.0)
                            .filter_map(|y| y.arm_spread).collect();
                        let lo = inwin.iter().cloned().fold(f64::INFINITY, f64::min);
                        let hi = inwin.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        prop_assert!(x >= lo - 1e-12 && x <= hi + 1e-12);
                    }
                    (x, y) => prop_assert_eq!(x, *y),
                }
            }
        }
    }
}
