//! Subtitle ingestion: SRT/WebVTT parsing, text normalization, duration
//! targeted blocks and stopword filtering.

mod blocks;
mod clean;
mod srt;
mod stopwords;
mod vtt;

use serde::{Deserialize, Serialize};

pub use blocks::{build_blocks, DEFAULT_TARGET_DURATION};
pub use clean::{clean_text, decode};
pub use srt::{parse_srt, write_srt};
pub use stopwords::{remove_stopwords, tokenize, Stopwords};
pub use vtt::{parse_vtt, write_vtt};

use crate::timeline::TimedSpan;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SubtitleCue {
    /// 1-based position among the cues parsed from the file.
    pub index: usize,
    pub span: TimedSpan,
    pub raw_text: String,
    pub clean_text: String,
}

/// Cues parsed from one file plus recoverable problems encountered.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedSubtitles {
    pub cues: Vec<SubtitleCue>,
    /// Cue blocks dropped because their timing line was unusable.
    pub skipped: usize,
    /// The input was not UTF-8 and was decoded as Latin-1.
    pub latin1_fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextBlock {
    pub span: TimedSpan,
    pub text: String,
    /// Lowercased tokens after stopword removal; empty until tokenized.
    pub tokens: Vec<String>,
}

impl TextBlock {
    pub fn tokenized(mut self, stopwords: &Stopwords) -> Self {
        self.tokens = remove_stopwords(&self.text, stopwords);
        self
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TextBlockRecord {
    pub start: f64,
    pub end: f64,
    pub text: String,
    pub tokens: Vec<String>,
}

impl From<&TextBlock> for TextBlockRecord {
    fn from(b: &TextBlock) -> Self {
        Self {
            start: b.span.start,
            end: b.span.end,
            text: b.text.clone(),
            tokens: b.tokens.clone(),
        }
    }
}

impl TryFrom<TextBlockRecord> for TextBlock {
    type Error = Error;

    fn try_from(r: TextBlockRecord) -> Result<Self> {
        Ok(TextBlock {
            span: TimedSpan::new(r.start, r.end)?,
            text: r.text,
            tokens: r.tokens,
        })
    }
}

pub fn read_text_blocks(text: &str) -> Result<Vec<TextBlock>> {
    crate::timeline::ingest::parse_jsonl::<TextBlockRecord>(text)?
        .into_iter()
        .map(TextBlock::try_from)
        .collect()
}

pub fn write_text_blocks(blocks: &[TextBlock]) -> String {
    let recs: Vec<TextBlockRecord> = blocks.iter().map(TextBlockRecord::from).collect();
    crate::timeline::ingest::to_jsonl(&recs)
}

/// Parses by file extension (`.vtt` or anything else as SRT).
pub fn parse_file(path: &std::path::Path, bytes: &[u8]) -> Result<ParsedSubtitles> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase) {
        Some(ext) if ext == "vtt" => parse_vtt(bytes),
        _ => parse_srt(bytes),
    }
}

/// Parses `HH:MM:SS,mmm`, `HH:MM:SS.mmm` or `MM:SS.mmm` to milliseconds.
pub(crate) fn parse_timestamp_ms(s: &str) -> Option<i64> {
    let s = s.trim();
    let (hms, frac) = match s.rfind([',', '.']) {
        Some(i) => (&s[..i], &s[i + 1..]),
        None => (s, "0"),
    };
    if frac.is_empty() || frac.len() > 3 || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let ms: i64 = frac.parse::<i64>().ok()? * 10i64.pow(3 - frac.len() as u32);
    let parts: Vec<&str> = hms.split(':').collect();
    let nums: Vec<i64> = parts
        .iter()
        .map(|p| {
            if p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit()) {
                None
            } else {
                p.parse().ok()
            }
        })
        .collect::<Option<_>>()?;
    let (h, m, sec) = match nums.as_slice() {
        [h, m, s] => (*h, *m, *s),
        [m, s] => (0, *m, *s),
        _ => return None,
    };
    if m >= 60 || sec >= 60 {
        return None;
    }
    Some(((h * 60 + m) * 60 + sec) * 1000 + ms)
}

pub(crate) fn ms_to_seconds(ms: i64) -> f64 {
    ms as f64 / 1000.0
}

pub(crate) fn format_timestamp(seconds: f64, frac_sep: char) -> String {
    let ms = (seconds * 1000.0).round() as i64;
    let (h, rem) = (ms / 3_600_000, ms % 3_600_000);
    let (m, rem) = (rem / 60_000, rem % 60_000);
    let (s, ms) = (rem / 1000, rem % 1000);
    format!("{h:02}:{m:02}:{s:02}{frac_sep}{ms:03}")
}

/// Parses a timing line `start --> end [settings]`; settings are discarded.
pub(crate) fn parse_timing_line(line: &str) -> Option<(f64, f64)> {
    let (left, right) = line.split_once("-->")?;
    let start = parse_timestamp_ms(left)?;
    let end = parse_timestamp_ms(right.split_whitespace().next()?)?;
    Some((ms_to_seconds(start), ms_to_seconds(end)))
}

/// Groups non-blank lines into blocks, keeping 1-based line numbers.
pub(crate) fn split_blocks(text: &str) -> Vec<Vec<(usize, &str)>> {
    let mut blocks = Vec::new();
    let mut cur: Vec<(usize, &str)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !cur.is_empty() {
                blocks.push(std::mem::take(&mut cur));
            }
        } else {
            cur.push((i + 1, line));
        }
    }
    if !cur.is_empty() {
        blocks.push(cur);
    }
    blocks
}

/// Turns one cue block (optional identifier, timing line, text lines) into
/// a cue. Returns `None` when the block has no usable timing.
pub(crate) fn cue_from_block(block: &[(usize, &str)]) -> Option<(f64, f64, String)> {
    let timing_at = block.iter().take(2).position(|(_, l)| l.contains("-->"))?;
    let (start, end) = parse_timing_line(block[timing_at].1)?;
    if !(start < end) {
        return None;
    }
    let raw = block[timing_at + 1..]
        .iter()
        .map(|(_, l)| *l)
        .collect::<Vec<_>>()
        .join("\n");
    Some((start, end, raw))
}

pub(crate) fn finish(raw: Vec<(f64, f64, String)>, skipped: usize, latin1: bool) -> Result<ParsedSubtitles> {
    let mut cues = raw
        .into_iter()
        .map(|(s, e, text)| {
            Ok(SubtitleCue {
                index: 0,
                span: TimedSpan::new(s, e)?,
                clean_text: clean_text(&text),
                raw_text: text,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    cues.sort_by(|a, b| a.span.start.total_cmp(&b.span.start));
    for (i, c) in cues.iter_mut().enumerate() {
        c.index = i + 1;
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} malformed subtitle block(s)");
    }
    if latin1 {
        log::warn!("subtitle input is not valid UTF-8; decoded as Latin-1");
    }
    Ok(ParsedSubtitles {
        cues,
        skipped,
        latin1_fallback: latin1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timestamps() {
        assert_eq!(parse_timestamp_ms("00:00:01,500"), Some(1500));
        assert_eq!(parse_timestamp_ms("01:02:03.004"), Some(3_723_004));
        assert_eq!(parse_timestamp_ms("02:03.5"), Some(123_500));
        assert_eq!(parse_timestamp_ms("00:61:00,000"), None);
        assert_eq!(parse_timestamp_ms("aa:00:00,000"), None);
        assert_eq!(format_timestamp(3723.004, ','), "01:02:03,004");
    }

    #[test]
    fn timing_line_drops_settings() {
        assert_eq!(
            parse_timing_line("00:01:00.000 --> 00:01:02.000 align:center line:0"),
            Some((60.0, 62.0))
        );
    }
}
