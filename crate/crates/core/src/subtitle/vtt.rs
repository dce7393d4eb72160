use super::{cue_from_block, decode, finish, format_timestamp, split_blocks, ParsedSubtitles, SubtitleCue};
use crate::{Error, Result};

fn is_header(line: &str) -> bool {
    line == "WEBVTT" || line.starts_with("WEBVTT ") || line.starts_with("WEBVTT\t")
}

fn is_non_cue_block(first: &str) -> bool {
    ["NOTE", "STYLE", "REGION"]
        .iter()
        .any(|kw| first == *kw || first.starts_with(&format!("{kw} ")) || first.starts_with(&format!("{kw}\t")))
}

/// Parses WebVTT content. NOTE, STYLE and REGION blocks are ignored; cue
/// settings after the end timestamp are dropped.
pub fn parse_vtt(bytes: &[u8]) -> Result<ParsedSubtitles> {
    let (text, latin1) = decode(bytes);
    let blocks = split_blocks(&text);
    match blocks.first().and_then(|b| b.first()) {
        Some((_, first)) if is_header(first.trim_end()) => {}
        Some((line, _)) => {
            return Err(Error::Parse {
                line: *line,
                message: "missing WEBVTT header".into(),
            })
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "missing WEBVTT header".into(),
            })
        }
    }
    let mut raw = Vec::new();
    let mut skipped = 0;
    if blocks[0].iter().any(|(_, l)| l.contains("-->")) {
        // a cue glued to the header without a blank line is not valid WebVTT
        skipped += 1;
    }
    for block in &blocks[1..] {
        if is_non_cue_block(block[0].1.trim_end()) {
            continue;
        }
        match cue_from_block(block) {
            Some(cue) => raw.push(cue),
            None => {
                log::debug!("malformed VTT cue at line {}", block[0].0);
                skipped += 1;
            }
        }
    }
    finish(raw, skipped, latin1)
}

/// Canonical WebVTT rendering with `HH:MM:SS.mmm` timestamps.
pub fn write_vtt(cues: &[SubtitleCue]) -> String {
    let mut out = String::from("WEBVTT\n\n");
    for c in cues {
        out.push_str(&format!(
            "{} --> {}\n{}\n\n",
            format_timestamp(c.span.start, '.'),
            format_timestamp(c.span.end, '.'),
            c.raw_text
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subtitle::parse_srt;

    #[test]
    fn settings_dropped() {
        let text = "WEBVTT\n\n00:01:00.000 --> 00:01:02.000 align:center\nHi\n";
        let parsed = parse_vtt(text.as_bytes()).unwrap();
        assert_eq!(parsed.cues.len(), 1);
        assert_eq!((parsed.cues[0].span.start, parsed.cues[0].span.end), (60.0, 62.0));
        assert_eq!(parsed.cues[0].clean_text, "Hi");
    }

    #[test]
    fn notes_and_styles_skipped() {
        let text = "WEBVTT - a title\n\nNOTE this is\na comment\n\nSTYLE\n::cue { color: red }\n\n\
intro\n00:00:01.000 --> 00:00:02.000\n<v Bob>Hello</v>\n\nNOTE trailing\n";
        let parsed = parse_vtt(text.as_bytes()).unwrap();
        assert_eq!(parsed.skipped, 0);
        assert_eq!(parsed.cues.len(), 1);
        assert_eq!(parsed.cues[0].clean_text, "Hello");
    }

    #[test]
    fn missing_header_is_error() {
        let err = parse_vtt(b"00:00:01.000 --> 00:00:02.000\nHi\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        assert!(parse_vtt(b"").is_err());
    }

    #[test]
    fn hourless_timestamps() {
        let parsed = parse_vtt(b"WEBVTT\n\n01:05.250 --> 01:07.000\nx\n").unwrap();
        assert_eq!(parsed.cues[0].span.start, 65.25);
    }

    #[test]
    fn same_content_as_srt() {
        let srt = "1\n00:00:01,500 --> 00:00:03,250\nOne\n\n2\n00:00:04,000 --> 00:00:06,000\nTwo <b>bold</b>\n";
        let vtt = "WEBVTT\n\n1\n00:00:01.500 --> 00:00:03.250\nOne\n\n2\n00:00:04.000 --> 00:00:06.000 position:10%\nTwo <b>bold</b>\n";
        assert_eq!(parse_srt(srt.as_bytes()).unwrap(), parse_vtt(vtt.as_bytes()).unwrap());
    }
}
