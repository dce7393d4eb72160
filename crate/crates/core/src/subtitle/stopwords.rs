use std::collections::HashSet;
use std::path::Path;

use crate::{Error, Result};

const STANDARD_EN: &str = include_str!("../../data/stopwords_en.txt");
const FILLERS: &str = include_str!("../../data/fillers.txt");

/// Stopword set. Multi-word entries (`"you know"`) are matched as token
/// sequences.
#[derive(Debug, Clone, Default)]
pub struct Stopwords {
    words: HashSet<String>,
    phrases: Vec<Vec<String>>,
}

impl Stopwords {
    /// Parses one entry per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        let mut s = Stopwords::default();
        s.extend_from_text(text);
        s
    }

    pub fn extend_from_text(&mut self, text: &str) {
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            self.insert(line);
        }
    }

    pub fn insert(&mut self, entry: &str) {
        let toks = tokenize(entry);
        match toks.len() {
            0 => {}
            1 => {
                self.words.insert(toks.into_iter().next().expect("one token"));
            }
            _ => {
                if !self.phrases.contains(&toks) {
                    self.phrases.push(toks);
                    self.phrases.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
                }
            }
        }
    }

    pub fn from_words<'a>(words: impl IntoIterator<Item = &'a str>) -> Self {
        let mut s = Stopwords::default();
        for w in words {
            s.insert(w);
        }
        s
    }

    /// The bundled standard English list only.
    pub fn standard_english() -> Self {
        Self::parse(STANDARD_EN)
    }

    /// Standard English list plus the bundled filler and discourse-marker list.
    pub fn default_set() -> Self {
        let mut s = Self::parse(STANDARD_EN);
        s.extend_from_text(FILLERS);
        s
    }

    /// Standard English list plus fillers read from `path`.
    pub fn with_filler_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut s = Self::parse(STANDARD_EN);
        s.extend_from_text(&text);
        Ok(s)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len() + self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Unicode-aware word segmentation: words are runs of alphanumerics that may
/// contain inner apostrophes or hyphens. Tokens are lowercased.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\'' || c == '-'))
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|w| !w.is_empty())
        .collect()
}

/// Tokenizes `text` and drops stopwords and stopword phrases, preserving order.
pub fn remove_stopwords(text: &str, stopwords: &Stopwords) -> Vec<String> {
    let toks = tokenize(text);
    let mut out = Vec::with_capacity(toks.len());
    let mut i = 0;
    'outer: while i < toks.len() {
        for phrase in &stopwords.phrases {
            if toks[i..].starts_with(phrase) {
                i += phrase.len();
                continue 'outer;
            }
        }
        if !stopwords.words.contains(&toks[i]) {
            out.push(toks[i].clone());
        }
        i += 1;
    }
    out
}
