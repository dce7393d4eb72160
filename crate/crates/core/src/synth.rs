//! Seeded synthetic corpora.
//!
//! Each show is a sequence of topic segments with subtitle cues, a laughter
//! track, 1 Hz shot labels and poses, and per-block topic assignments. The
//! laughter track plants a recoverable pattern: a short low-confidence
//! chuckle is usually followed, one second after it ends, by a main laugh.
//! The performer also goes still in the seconds before a main laugh, and the
//! director cuts to close-ups during laughter.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::PipelineConfig;
use crate::corpus::{assemble, ShowInputs, DESCRIPTORS_FILE};
use crate::io::write_atomic;
use crate::laughter::{merge_windows, write_windows, LaughWindow};
use crate::subtitle::{build_blocks, write_srt, Stopwords, SubtitleCue};
use crate::timeline::ingest::{write_laugh_events, write_pose_frames, write_shot_frames};
use crate::timeline::{
    BoundingBox, Joint, Keypoints, LaughType, LaughterEvent, PoseFrame, ShotFrame, ShotLabel, ShowTimeline,
    TimedSpan, EMBEDDING_DIM,
};
use crate::topic::{normalize_embedding, write_assignments, DescriptorRecord, TopicAssignment, OUTLIER};
use crate::{Error, Result};

const THEMES: [&str; 12] = [
    "airport flight luggage pilot security gate delay passport seat boarding",
    "mother father family sister brother holiday dinner cousin wedding uncle",
    "dating girlfriend boyfriend tinder romance kiss breakup flirt text crush",
    "phone internet email password laptop update wifi app screen battery",
    "doctor hospital dentist pill surgery nurse allergy injury clinic fever",
    "school teacher homework exam college student grade lecture campus classroom",
    "money rent bank salary taxes loan budget debt credit mortgage",
    "food restaurant pizza waiter menu diet burger kitchen salad chef",
    "dog cat pet vet puppy leash kitten hamster parrot fish",
    "politics election vote president senator campaign debate ballot party congress",
    "gym workout running yoga muscle trainer treadmill protein marathon sweat",
    "children baby toddler diaper nursery daycare parenting stroller bedtime tantrum",
];

const FILLERS: [&str; 14] = [
    "so", "and", "the", "you", "know", "like", "i", "was", "my", "right", "um", "just", "then", "okay",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_shows: usize,
    /// Show length in seconds.
    pub duration: f64,
    pub seed: u64,
    pub n_topics: usize,
    /// Probability that a chuckle is followed by a main laugh.
    pub follow_prob: f64,
    /// Rate of unannounced laughs, per second.
    pub background_rate: f64,
    /// Share of blocks left as topic outliers.
    pub outlier_rate: f64,
    /// Emit raw stride-window scores instead of merged events.
    pub laugh_windows: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_shows: 10,
            duration: 2400.0,
            seed: 7,
            n_topics: 12,
            follow_prob: 0.85,
            background_rate: 0.01,
            outlier_rate: 0.08,
            laugh_windows: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthShow {
    pub id: String,
    pub cues: Vec<SubtitleCue>,
    pub laughs: Vec<LaughterEvent>,
    pub windows: Option<Vec<LaughWindow>>,
    pub shots: Vec<ShotFrame>,
    pub poses: Vec<PoseFrame>,
    pub topics: Vec<TopicAssignment>,
}

fn ms(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

fn gaussian_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if let Ok(u) = normalize_embedding(&v) {
            return u;
        }
    }
}

fn theme_words(topic: usize) -> Vec<&'static str> {
    THEMES[topic % THEMES.len()].split(' ').collect()
}

/// Topic segments `(start, end, topic)` covering `[0, duration)`.
fn segments(rng: &mut ChaCha8Rng, duration: f64, n_topics: usize) -> Vec<(f64, f64, usize)> {
    let mut out = Vec::new();
    let mut t = 0.0;
    let mut prev = usize::MAX;
    while t < duration {
        let len = rng.gen_range(90.0..240.0);
        let mut topic = rng.gen_range(0..n_topics);
        if topic == prev && n_topics > 1 {
            topic = (topic + 1) % n_topics;
        }
        out.push((t, (t + len).min(duration), topic));
        prev = topic;
        t += len;
    }
    out
}

fn topic_at(segs: &[(f64, f64, usize)], t: f64) -> usize {
    segs.iter().find(|s| t < s.1).unwrap_or(segs.last().unwrap()).2
}

fn make_cues(rng: &mut ChaCha8Rng, duration: f64, segs: &[(f64, f64, usize)]) -> Result<Vec<SubtitleCue>> {
    let mut cues = Vec::new();
    let mut t = 0.5;
    while t < duration - 5.0 {
        let len = ms(rng.gen_range(1.5..4.0));
        let words = theme_words(topic_at(segs, t));
        let n = rng.gen_range(5..10);
        let mut text: Vec<&str> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.6) {
                    words[rng.gen_range(0..words.len())]
                } else {
                    FILLERS[rng.gen_range(0..FILLERS.len())]
                }
            })
            .collect();
        let first = text[0].to_string();
        let mut cap = first[..1].to_uppercase();
        cap.push_str(&first[1..]);
        text[0] = "";
        let body = format!("{cap}{}", text.join(" "));
        cues.push(SubtitleCue {
            index: cues.len() + 1,
            span: TimedSpan::new(ms(t), ms(t + len))?,
            raw_text: body.clone(),
            clean_text: body,
        });
        t = ms(t + len + rng.gen_range(0.1..1.0));
    }
    Ok(cues)
}

/// Laughter events and the onsets of the planted main laughs.
fn make_laughs(
    rng: &mut ChaCha8Rng,
    cfg: &SynthConfig,
    segs: &[(f64, f64, usize)],
    funniness: &[f64],
) -> Result<(Vec<LaughterEvent>, Vec<f64>)> {
    let mut events = Vec::new();
    let mut mains = Vec::new();
    let mut t = rng.gen_range(5.0..15.0);
    loop {
        let gap = rng.gen_range(8.0..16.0) / funniness[topic_at(segs, t)];
        let c = ms(t + gap);
        if c + 10.0 > cfg.duration {
            break;
        }
        let c_end = ms(c + rng.gen_range(0.3..0.5));
        events.push(LaughterEvent::new(c, c_end, LaughType::Chuckle, ms(rng.gen_range(0.3..0.45)))?);
        t = c_end;
        if rng.gen_bool(cfg.follow_prob) {
            let m = ms(c_end + rng.gen_range(0.9..1.1));
            let len = rng.gen_range(2.0..5.0);
            let label = if len > 4.0 && rng.gen_bool(0.5) { LaughType::BellyLaugh } else { LaughType::Laughter };
            let m_end = ms(m + len);
            events.push(LaughterEvent::new(m, m_end, label, ms(rng.gen_range(0.6..0.95)))?);
            mains.push(m);
            t = m_end;
        }
    }
    // unannounced laughs, dropped where they would overlap the planted track
    let mut s = 0.0;
    loop {
        s += -rng.gen::<f64>().max(1e-12).ln() / cfg.background_rate;
        if s + 5.0 > cfg.duration {
            break;
        }
        let start = ms(s);
        let end = ms(s + rng.gen_range(1.0..3.0));
        let conf = ms(rng.gen_range(0.4..0.8));
        let clear = events
            .iter()
            .all(|e: &LaughterEvent| end + 1.0 < e.span.start || start > e.span.end + 1.0);
        if clear {
            events.push(LaughterEvent::new(start, end, LaughType::Giggle, conf)?);
        }
    }
    events.sort_by(|a, b| a.span.start.total_cmp(&b.span.start));
    Ok((events, mains))
}

/// Stride-window scores that merge back into roughly the given events.
fn make_windows(rng: &mut ChaCha8Rng, events: &[LaughterEvent], duration: f64, stride: f64) -> Vec<LaughWindow> {
    let n = (duration / stride).floor() as usize;
    (0..n)
        .map(|k| {
            let start = ms(k as f64 * stride);
            let hit = events.iter().find(|e| e.span.overlap(start, start + stride) >= 0.5 * stride);
            match hit {
                Some(e) => LaughWindow { start, stride, label: e.label, probability: e.confidence },
                None => LaughWindow {
                    start,
                    stride,
                    label: LaughType::Laughter,
                    probability: ms(rng.gen_range(0.0..0.2)),
                },
            }
        })
        .collect()
}

fn in_laugh(events: &[LaughterEvent], t: f64) -> bool {
    events.iter().any(|e| e.span.contains(t))
}

fn make_shots(rng: &mut ChaCha8Rng, events: &[LaughterEvent], duration: f64) -> Result<Vec<ShotFrame>> {
    use ShotLabel::*;
    let calm = [(FullShot, 0.55), (MediumLongShot, 0.25), (MediumShot, 0.1), (MediumCloseUp, 0.05), (OtherAngles, 0.03), (Other, 0.02)];
    let mut frames = Vec::new();
    let mut prev = FullShot;
    for k in 0..duration as usize {
        let t = k as f64;
        // shots persist for a few seconds
        let label = if rng.gen_bool(0.3) || k == 0 {
            if in_laugh(events, t) && rng.gen_bool(0.6) {
                MediumCloseUp
            } else {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                calm.iter()
                    .find(|(_, p)| {
                        acc += p;
                        u < acc
                    })
                    .map_or(Other, |(l, _)| *l)
            }
        } else {
            prev
        };
        prev = label;
        frames.push(ShotFrame::new(t, label, label.index() as u8, ms(rng.gen_range(0.6..0.99)))?);
    }
    Ok(frames)
}

/// Standing skeleton relative to the hip centre, in pixels (y down).
const SKELETON: [[f64; 2]; 17] = [
    [0.0, -170.0],
    [8.0, -178.0],
    [-8.0, -178.0],
    [16.0, -172.0],
    [-16.0, -172.0],
    [45.0, -130.0],
    [-45.0, -130.0],
    [55.0, -70.0],
    [-55.0, -70.0],
    [50.0, -15.0],
    [-50.0, -15.0],
    [25.0, 0.0],
    [-25.0, 0.0],
    [25.0, 100.0],
    [-25.0, 100.0],
    [25.0, 200.0],
    [-25.0, 200.0],
];

fn make_poses(rng: &mut ChaCha8Rng, mains: &[f64], duration: f64) -> Vec<PoseFrame> {
    let mut frames = Vec::new();
    let mut gesture = 1.0f64;
    let mut lean = 0.0f64;
    for k in 0..duration as usize {
        let t = k as f64;
        let still = mains.iter().any(|&m| t >= m - 5.0 && t < m);
        let amp = if still { 3.5 } else { 6.0 };
        gesture = (0.8 * gesture + 0.2 * rng.gen_range(0.5..2.5) * if still { 0.8 } else { 1.0 }).clamp(0.3, 3.0);
        lean = (0.9 * lean + rng.gen_range(-2.0..2.0)).clamp(-15.0, 15.0);
        if !rng.gen_bool(0.93) {
            frames.push(PoseFrame::undetected(t));
            continue;
        }
        let cx = 960.0 + 150.0 * (t / 40.0).sin();
        let cy = 700.0;
        let tilt = lean.to_radians().tan();
        let mut kp = Keypoints::default();
        for j in Joint::ALL {
            let [mut dx, dy] = SKELETON[j.index()];
            if matches!(j, Joint::LeftWrist | Joint::RightWrist | Joint::LeftElbow | Joint::RightElbow) {
                dx *= gesture;
            }
            if dy < 0.0 {
                dx -= dy * tilt;
            }
            let nx: f64 = rng.sample(StandardNormal);
            let ny: f64 = rng.sample(StandardNormal);
            let p = [cx + dx + amp * nx, cy + dy + amp * ny];
            if rng.gen_bool(0.97) {
                kp.set(j, [ms(p[0]), ms(p[1])]);
            }
        }
        let valid: Vec<[f64; 2]> = Joint::ALL.iter().filter_map(|&j| kp.get(j)).collect();
        let fold = |f: fn(f64, f64) -> f64, i: usize, init: f64| valid.iter().map(|p| p[i]).fold(init, f);
        let bbox = BoundingBox {
            xmin: ms(fold(f64::min, 0, f64::INFINITY) - 10.0),
            ymin: ms(fold(f64::min, 1, f64::INFINITY) - 10.0),
            xmax: ms(fold(f64::max, 0, f64::NEG_INFINITY) + 10.0),
            ymax: ms(fold(f64::max, 1, f64::NEG_INFINITY) + 10.0),
        };
        frames.push(PoseFrame { time: t, has_detection: true, bbox, keypoints: kp });
    }
    frames
}

fn make_topics(
    rng: &mut ChaCha8Rng,
    cues: &[SubtitleCue],
    segs: &[(f64, f64, usize)],
    bases: &[Vec<f64>],
    outlier_rate: f64,
) -> Result<Vec<TopicAssignment>> {
    let blocks = build_blocks(cues, 60.0)?;
    blocks
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let mut counts = vec![0usize; bases.len()];
            for c in cues.iter().filter(|c| b.span.contains(c.span.start)) {
                counts[topic_at(segs, c.span.start)] += 1;
            }
            let topic = (0..counts.len()).max_by_key(|&k| (counts[k], std::cmp::Reverse(k))).unwrap_or(0);
            let noisy: Vec<f64> = bases[topic]
                .iter()
                .map(|x| x + 0.04 * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let topic_id = if rng.gen_bool(outlier_rate) { OUTLIER } else { topic as i32 };
            Ok(TopicAssignment { block_index: i, topic_id, embedding: normalize_embedding(&noisy)? })
        })
        .collect()
}

/// Unit topic directions shared by every show of a corpus.
fn topic_bases(cfg: &SynthConfig) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7091_c5ba);
    (0..cfg.n_topics).map(|_| gaussian_unit(&mut rng, EMBEDDING_DIM)).collect()
}

/// Per-topic multiplier on the laugh frequency.
fn topic_funniness(cfg: &SynthConfig) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xf0_a1e5);
    (0..cfg.n_topics).map(|_| rng.gen_range(0.6..1.4)).collect()
}

pub fn generate(cfg: &SynthConfig) -> Result<Vec<SynthShow>> {
    if cfg.n_topics == 0 || cfg.n_topics > THEMES.len() {
        return Err(Error::invalid(format!("n_topics must be in 1..={}", THEMES.len())));
    }
    if !(cfg.duration >= 120.0) {
        return Err(Error::invalid("synthetic shows must last at least 120 s"));
    }
    let bases = topic_bases(cfg);
    let funniness = topic_funniness(cfg);
    (0..cfg.n_shows)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(i as u64));
            let segs = segments(&mut rng, cfg.duration, cfg.n_topics);
            let cues = make_cues(&mut rng, cfg.duration, &segs)?;
            let (laughs, mains) = make_laughs(&mut rng, cfg, &segs, &funniness)?;
            let windows = cfg
                .laugh_windows
                .then(|| make_windows(&mut rng, &laughs, cfg.duration, crate::laughter::DEFAULT_STRIDE));
            let shots = make_shots(&mut rng, &laughs, cfg.duration)?;
            let poses = make_poses(&mut rng, &mains, cfg.duration);
            let topics = make_topics(&mut rng, &cues, &segs, &bases, cfg.outlier_rate)?;
            Ok(SynthShow { id: format!("show{i:03}"), cues, laughs, windows, shots, poses, topics })
        })
        .collect()
}

/// Topic descriptors for the generated topics; centroids are left to be
/// recomputed from assignments.
pub fn descriptors(cfg: &SynthConfig) -> Vec<DescriptorRecord> {
    (0..cfg.n_topics)
        .map(|k| DescriptorRecord {
            topic_id: k as i32,
            top_words: theme_words(k).iter().map(|w| w.to_string()).collect(),
            centroid: None,
        })
        .collect()
}

impl SynthShow {
    /// The same inputs a corpus loader would read back from disk.
    pub fn inputs(&self, cfg: &PipelineConfig, stopwords: &Stopwords) -> Result<ShowInputs> {
        let laughs = match &self.windows {
            Some(w) => merge_windows(w, cfg.laugh_threshold),
            None => self.laughs.clone(),
        };
        Ok(ShowInputs {
            blocks: build_blocks(&self.cues, cfg.target_duration)?
                .into_iter()
                .map(|b| b.tokenized(stopwords))
                .collect(),
            laughs,
            shots: self.shots.clone(),
            poses: self.poses.clone(),
            topics: Some(self.topics.clone()),
        })
    }

    pub fn timeline(&self, cfg: &PipelineConfig) -> Result<ShowTimeline> {
        assemble(&self.id, self.inputs(cfg, &Stopwords::default_set())?, cfg)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let d = dir.join(&self.id);
        write_atomic(&d.join("subtitles.srt"), write_srt(&self.cues).as_bytes())?;
        match &self.windows {
            Some(w) => write_atomic(&d.join("laughter.jsonl"), write_windows(w).as_bytes())?,
            None => write_atomic(&d.join("laugh_events.jsonl"), write_laugh_events(&self.laughs).as_bytes())?,
        }
        write_atomic(&d.join("shots.jsonl"), write_shot_frames(&self.shots).as_bytes())?;
        write_atomic(&d.join("poses.jsonl"), write_pose_frames(&self.poses).as_bytes())?;
        write_atomic(&d.join("topics.jsonl"), write_assignments(&self.topics).as_bytes())?;
        Ok(())
    }
}

/// Writes a corpus directory, including `descriptors.json`.
pub fn write_corpus(cfg: &SynthConfig, shows: &[SynthShow], dir: &Path) -> Result<()> {
    for s in shows {
        s.write(dir)?;
    }
    let desc = serde_json::to_vec_pretty(&descriptors(cfg))?;
    write_atomic(&dir.join(DESCRIPTORS_FILE), &desc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig { n_shows: 2, duration: 600.0, ..Default::default() }
    }

    #[test]
    fn deterministic() {
        assert_eq!(generate(&small()).unwrap(), generate(&small()).unwrap());
    }

    #[test]
    fn planted_pattern_present() {
        let shows = generate(&small()).unwrap();
        let ev = &shows[0].laughs;
        let follows = ev
            .windows(2)
            .filter(|w| w[0].label == LaughType::Chuckle && (w[1].span.start - w[0].span.end - 1.0).abs() <= 0.101)
            .count();
        let chuckles = ev.iter().filter(|e| e.label == LaughType::Chuckle).count();
        assert!(chuckles > 20);
        assert!(follows as f64 > 0.6 * chuckles as f64);
        for w in ev.windows(2) {
            assert!(w[0].span.end <= w[1].span.start);
        }
    }

    #[test]
    fn timeline_assembles_and_validates() {
        let shows = generate(&small()).unwrap();
        let cfg = PipelineConfig::default();
        let tl = shows[0].timeline(&cfg).unwrap();
        tl.validate().unwrap();
        assert_eq!(tl.timeline.len(), shows[0].topics.len());
        assert_eq!(tl.laugh_events().len(), shows[0].laughs.len());
    }

    #[test]
    fn windows_mode_roundtrip_through_disk() {
        let cfg = SynthConfig { laugh_windows: true, ..small() };
        let shows = generate(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_corpus(&cfg, &shows, dir.path()).unwrap();
        let raw = crate::corpus::discover(dir.path()).unwrap();
        assert_eq!(raw.len(), 2);
        let pc = PipelineConfig::default();
        let stop = Stopwords::default_set();
        let inputs = crate::corpus::load_inputs(&raw[0], &pc, &stop).unwrap();
        let from_disk = assemble(&raw[0].id, inputs, &pc).unwrap();
        assert_eq!(from_disk, shows[0].timeline(&pc).unwrap());
        assert!(!from_disk.laugh_events().is_empty());
    }
}
