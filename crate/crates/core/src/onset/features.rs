use crate::kinematics::KinematicSample;
use crate::laughter::covered_length;
use crate::timeline::{LaughterEvent, ShotFrame};

pub const HISTORY_DIM: usize = 10;
pub const VISION_DIM: usize = 20;

/// Value of the time-since features when there is no earlier event.
pub const SINCE_CAP: f64 = 600.0;

pub const HISTORY_NAMES: [&str; HISTORY_DIM] = [
    "count",
    "rate",
    "coverage",
    "max_duration",
    "mean_confidence",
    "max_confidence",
    "coverage_2s",
    "coverage_5s",
    "since_onset",
    "since_end",
];

pub const VISION_NAMES: [&str; VISION_DIM] = [
    "shot_full_shot",
    "shot_medium_close_up",
    "shot_medium_long_shot",
    "shot_medium_shot",
    "shot_other_angles",
    "shot_other",
    "shot_change_rate",
    "shot_mean_score",
    "arm_spread_mean",
    "arm_spread_std",
    "arm_spread_max",
    "arm_spread_trend",
    "trunk_lean_mean",
    "trunk_lean_std",
    "trunk_lean_trend",
    "kinetic_energy_mean",
    "kinetic_energy_std",
    "kinetic_energy_max",
    "kinetic_energy_trend",
    "detection_rate",
];

/// Laughter history over `[t - window, t)`. `events` must be sorted by start.
///
/// Durations are clipped at `t` so an ongoing event never reveals its end.
/// The time-since features look back over the whole show and are capped at
/// [`SINCE_CAP`].
pub fn history_features(events: &[LaughterEvent], t: f64, window: f64) -> [f64; HISTORY_DIM] {
    let lo = t - window;
    let upto = events.partition_point(|e| e.span.start <= t);
    let past = &events[..upto];
    let inwin: Vec<&LaughterEvent> = past
        .iter()
        .filter(|e| e.span.start < t && e.span.end > lo)
        .collect();
    let spans = || inwin.iter().map(|e| (e.span.start, e.span.end.min(t)));
    let count = inwin.len() as f64;
    let (mean_conf, max_conf, max_dur) = if inwin.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        (
            inwin.iter().map(|e| e.confidence).sum::<f64>() / count,
            inwin.iter().map(|e| e.confidence).fold(f64::MIN, f64::max),
            spans().map(|(s, e)| e - s).fold(0.0, f64::max),
        )
    };
    let since_onset = past.last().map_or(SINCE_CAP, |e| (t - e.span.start).min(SINCE_CAP));
    let since_end = past
        .iter()
        .filter(|e| e.span.end <= t)
        .map(|e| e.span.end)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
        .map_or(SINCE_CAP, |end| (t - end).min(SINCE_CAP));
    [
        count,
        count / window,
        covered_length(spans(), lo, t) / window,
        max_dur,
        mean_conf,
        max_conf,
        covered_length(spans(), t - 2.0, t) / 2.0,
        covered_length(spans(), t - 5.0, t) / 5.0,
        since_onset,
        since_end,
    ]
}

fn mean_std_max(v: &[f64]) -> (f64, f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt(), v.iter().copied().fold(f64::MIN, f64::max))
}

/// Least-squares slope of `y` against `x`; zero for fewer than two distinct
/// times.
pub fn trend(points: &[(f64, f64)]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return 0.0;
    }
    points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx
}

/// Shot and pose summary over `[t - window, t)`. Both streams must be sorted
/// by time; kinematics should be unsmoothed so no future frame leaks in.
pub fn vision_features(shots: &[ShotFrame], kinematics: &[KinematicSample], t: f64, window: f64) -> [f64; VISION_DIM] {
    let lo = t - window;
    let mut out = [0.0; VISION_DIM];

    let s = &shots[shots.partition_point(|f| f.time < lo)..shots.partition_point(|f| f.time < t)];
    if !s.is_empty() {
        let n = s.len() as f64;
        for f in s {
            out[f.label.index()] += 1.0;
        }
        for v in &mut out[..6] {
            *v /= n;
        }
        out[6] = s.windows(2).filter(|w| w[0].label != w[1].label).count() as f64 / n;
        out[7] = s.iter().map(|f| f.score).sum::<f64>() / n;
    }

    let k = &kinematics[kinematics.partition_point(|f| f.time < lo)..kinematics.partition_point(|f| f.time < t)];
    let series = |get: fn(&KinematicSample) -> Option<f64>| -> Vec<(f64, f64)> {
        k.iter().filter_map(|s| get(s).map(|v| (s.time, v))).collect()
    };
    let values = |p: &[(f64, f64)]| p.iter().map(|x| x.1).collect::<Vec<f64>>();

    let arm = series(|s| s.arm_spread);
    let (m, sd, mx) = mean_std_max(&values(&arm));
    out[8..12].copy_from_slice(&[m, sd, mx, trend(&arm)]);

    let lean = series(|s| s.trunk_lean);
    let (m, sd, _) = mean_std_max(&values(&lean));
    out[12..15].copy_from_slice(&[m, sd, trend(&lean)]);

    let ke = series(|s| s.kinetic_energy);
    let (m, sd, mx) = mean_std_max(&values(&ke));
    out[15..19].copy_from_slice(&[m, sd, mx, trend(&ke)]);

    out[19] = (k.iter().filter(|s| s.detected).count() as f64 / window).clamp(0.0, 1.0);
    out
}
