use std::borrow::Cow;

/// Decodes subtitle bytes: UTF-8 (optional BOM), falling back to Latin-1.
/// The flag reports whether the fallback was used.
pub fn decode(bytes: &[u8]) -> (Cow<'_, str>, bool) {
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    match std::str::from_utf8(bytes) {
        Ok(s) => (Cow::Borrowed(s), false),
        Err(_) => (Cow::Owned(bytes.iter().map(|&b| b as char).collect()), true),
    }
}

const ENTITIES: [(&str, &str); 7] = [
    ("&amp;", "&"),
    ("&lt;", "<"),
    ("&gt;", ">"),
    ("&quot;", "\""),
    ("&#39;", "'"),
    ("&apos;", "'"),
    ("&nbsp;", " "),
];

fn is_apostrophe_variant(c: char) -> bool {
    matches!(c, '\u{2019}' | '\u{2018}' | '\u{02BC}' | '\u{0060}' | '\u{00B4}' | '\u{2032}')
}

/// Strips markup tags (`<i>`, `<font ...>`, `<c.yellow>`, inline cue
/// timestamps) and `{...}` override codes, standardizes apostrophes, decodes
/// common entities and collapses whitespace.
pub fn clean_text(raw: &str) -> String {
    let mut stripped = String::with_capacity(raw.len());
    let mut chars = raw.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '<' => {
                // only treat as a tag if it closes before the next '<'
                let rest: String = chars.clone().take_while(|&x| x != '<').collect();
                if let Some(close) = rest.find('>') {
                    for _ in 0..rest[..=close].chars().count() {
                        chars.next();
                    }
                    stripped.push(' ');
                } else {
                    stripped.push(c);
                }
            }
            '{' => {
                let rest: String = chars.clone().take_while(|&x| x != '{').collect();
                if rest.starts_with('\\') {
                    if let Some(close) = rest.find('}') {
                        for _ in 0..rest[..=close].chars().count() {
                            chars.next();
                        }
                        continue;
                    }
                }
                stripped.push(c);
            }
            c if is_apostrophe_variant(c) => stripped.push('\''),
            c => stripped.push(c),
        }
    }
    let mut decoded = stripped;
    for (ent, rep) in ENTITIES {
        if decoded.contains(ent) {
            decoded = decoded.replace(ent, rep);
        }
    }
    decoded.split_whitespace().collect::<Vec<_>>().join(" ")
}
