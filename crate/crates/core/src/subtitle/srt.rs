use super::{cue_from_block, decode, finish, format_timestamp, split_blocks, ParsedSubtitles, SubtitleCue};
use crate::{Error, Result};

/// Parses SubRip content. Cue blocks with unusable timing are skipped and
/// counted; a non-empty file without any timing line is rejected.
pub fn parse_srt(bytes: &[u8]) -> Result<ParsedSubtitles> {
    let (text, latin1) = decode(bytes);
    let blocks = split_blocks(&text);
    if blocks.is_empty() {
        return Ok(ParsedSubtitles {
            latin1_fallback: latin1,
            ..Default::default()
        });
    }
    if !blocks.iter().flatten().any(|(_, l)| l.contains("-->")) {
        return Err(Error::Parse {
            line: blocks[0][0].0,
            message: "no cue timing line (`start --> end`) found; not a SubRip file".into(),
        });
    }
    let mut raw = Vec::with_capacity(blocks.len());
    let mut skipped = 0;
    for block in &blocks {
        match cue_from_block(block) {
            Some(cue) => raw.push(cue),
            None => {
                log::debug!("malformed SRT cue at line {}", block[0].0);
                skipped += 1;
            }
        }
    }
    finish(raw, skipped, latin1)
}

/// Canonical SubRip rendering: sequential indices, `HH:MM:SS,mmm` times.
pub fn write_srt(cues: &[SubtitleCue]) -> String {
    let mut out = String::new();
    for (i, c) in cues.iter().enumerate() {
        out.push_str(&format!(
            "{}\n{} --> {}\n{}\n\n",
            i + 1,
            format_timestamp(c.span.start, ','),
            format_timestamp(c.span.end, ','),
            c.raw_text
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = "1\n00:00:01,500 --> 00:00:03,250\n<i>Hello   there\u{2019}s</i>\n\n\
2\n00:00:04,000 --> 00:00:06,000\nSecond line\nwraps here\n\n\
3\n00:01:00,000 --> 00:01:02,125\n{\\an8}Top\n";

    #[test]
    fn three_cue_fixture() {
        let parsed = parse_srt(FIXTURE.as_bytes()).unwrap();
        assert_eq!(parsed.skipped, 0);
        let spans: Vec<(f64, f64)> = parsed.cues.iter().map(|c| (c.span.start, c.span.end)).collect();
        assert_eq!(spans, vec![(1.5, 3.25), (4.0, 6.0), (60.0, 62.125)]);
        assert_eq!(parsed.cues[0].clean_text, "Hello there's");
        assert_eq!(parsed.cues[1].clean_text, "Second line wraps here");
        assert_eq!(parsed.cues[2].clean_text, "Top");
        assert_eq!(parsed.cues[2].index, 3);
    }

    #[test]
    fn bom_and_crlf() {
        let text = format!("\u{feff}{}", FIXTURE.replace('\n', "\r\n"));
        let parsed = parse_srt(text.as_bytes()).unwrap();
        assert_eq!(parsed.cues.len(), 3);
        assert_eq!(parsed.cues[0].clean_text, "Hello there's");
    }

    #[test]
    fn malformed_cue_skipped() {
        let text = "1\n00:00:01,000 --> 00:00:02,000\nok\n\n2\n00:00:xx,000 --> 00:00:03,000\nbad\n\n3\n00:00:05,000 --> 00:00:04,000\nbackwards\n";
        let parsed = parse_srt(text.as_bytes()).unwrap();
        assert_eq!(parsed.cues.len(), 1);
        assert_eq!(parsed.skipped, 2);
    }

    #[test]
    fn empty_file_is_empty_list() {
        assert!(parse_srt(b"").unwrap().cues.is_empty());
        assert!(parse_srt(b"\n\n  \n").unwrap().cues.is_empty());
    }

    #[test]
    fn not_srt_reports_line() {
        match parse_srt(b"\n\nhello world\nno timings\n").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn unsorted_cues_are_sorted() {
        let text = "1\n00:00:05,000 --> 00:00:06,000\nb\n\n2\n00:00:01,000 --> 00:00:02,000\na\n";
        let parsed = parse_srt(text.as_bytes()).unwrap();
        assert_eq!(parsed.cues[0].clean_text, "a");
    }

    #[test]
    fn writer_round_trips() {
        let parsed = parse_srt(FIXTURE.as_bytes()).unwrap();
        let again = parse_srt(write_srt(&parsed.cues).as_bytes()).unwrap();
        assert_eq!(again, parsed);
    }
}
