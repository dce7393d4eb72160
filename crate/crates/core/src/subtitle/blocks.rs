use super::{SubtitleCue, TextBlock};
use crate::timeline::TimedSpan;
use crate::{Error, Result};

pub const DEFAULT_TARGET_DURATION: f64 = 60.0;

/// Groups consecutive cues into blocks of roughly `target_duration` seconds.
///
/// A block opens at its first cue's start `s`; later cues join while their
/// start is `<= s + target_duration`, and the first cue starting strictly
/// after that limit opens the next block. A block spans
/// `[s, s + target_duration)`, except the final block, which ends at the
/// last cue's end when that comes earlier.
pub fn build_blocks(cues: &[SubtitleCue], target_duration: f64) -> Result<Vec<TextBlock>> {
    if !(target_duration > 0.0) || !target_duration.is_finite() {
        return Err(Error::invalid(format!(
            "target duration must be positive, got {target_duration}"
        )));
    }
    if cues.windows(2).any(|w| w[1].span.start < w[0].span.start) {
        return Err(Error::invariant("cues must be sorted by start time"));
    }

    let mut groups: Vec<Vec<&SubtitleCue>> = Vec::new();
    for cue in cues {
        match groups.last_mut() {
            Some(g) if cue.span.start <= g[0].span.start + target_duration => g.push(cue),
            _ => groups.push(vec![cue]),
        }
    }

    let n = groups.len();
    groups
        .into_iter()
        .enumerate()
        .map(|(i, g)| {
            let start = g[0].span.start;
            let mut end = start + target_duration;
            if i + 1 == n {
                let last_end = g.iter().map(|c| c.span.end).fold(f64::MIN, f64::max);
                end = end.min(last_end);
            }
            let text = g
                .iter()
                .map(|c| c.clean_text.as_str())
                .filter(|t| !t.is_empty())
                .collect::<Vec<_>>()
                .join(" ");
            Ok(TextBlock {
                span: TimedSpan::new(start, end)?,
                text,
                tokens: Vec::new(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cue(start: f64, end: f64, text: &str) -> SubtitleCue {
        SubtitleCue {
            index: 0,
            span: TimedSpan::new(start, end).unwrap(),
            raw_text: text.into(),
            clean_text: text.into(),
        }
    }

    #[test]
    fn limit_rule_splits_after_sixty() {
        let cues = vec![
            cue(0.0, 2.0, "a"),
            cue(30.0, 32.0, "b"),
            cue(59.0, 61.0, "c"),
            cue(61.0, 63.0, "d"),
        ];
        let blocks = build_blocks(&cues, 60.0).unwrap();
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[0].text, "a b c");
        assert_eq!(blocks[0].span, TimedSpan::new(0.0, 60.0).unwrap());
        assert_eq!(blocks[1].text, "d");
        assert_eq!(blocks[1].span, TimedSpan::new(61.0, 63.0).unwrap());
    }

    #[test]
    fn cue_exactly_at_limit_joins() {
        let cues = vec![cue(0.0, 1.0, "a"), cue(60.0, 61.0, "b")];
        let blocks = build_blocks(&cues, 60.0).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].span.end, 60.0);
    }

    #[test]
    fn single_cue_single_block() {
        let blocks = build_blocks(&[cue(5.0, 7.5, "only")], 60.0).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].span, TimedSpan::new(5.0, 7.5).unwrap());
    }

    #[test]
    fn empty_and_bad_target() {
        assert!(build_blocks(&[], 60.0).unwrap().is_empty());
        assert!(build_blocks(&[], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn text_is_conserved_and_starts_increase(
            gaps in proptest::collection::vec((0.1f64..40.0, 0.1f64..8.0, "[a-z]{1,6}( [a-z]{1,6}){0,3}"), 1..60),
            target in 10.0f64..120.0,
        ) {
            let mut t = 0.0;
            let mut cues = Vec::new();
            for (gap, dur, text) in gaps {
                t += gap;
                cues.push(cue(t, t + dur, &text));
            }
            let blocks = build_blocks(&cues, target).unwrap();
            let joined_blocks = blocks.iter().map(|b| b.text.as_str()).collect::<Vec<_>>().join(" ");
            let joined_cues = cues.iter().map(|c| c.clean_text.as_str()).collect::<Vec<_>>().join(" ");
            prop_assert_eq!(joined_blocks, joined_cues);
            for w in blocks.windows(2) {
                prop_assert!(w[0].span.start < w[1].span.start);
                prop_assert!(w[0].span.end <= w[1].span.start);
            }
        }
    }
}
