use std::collections::{HashMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Seeded uniform document subsample used to bound coherence cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subsample {
    pub size: usize,
    pub seed: u64,
}

/// Inverted index of document membership. Each document contributes its
/// unigrams and its adjacent-token bigrams (joined by a space), so bigram
/// top words can be scored.
#[derive(Debug, Clone)]
pub struct DocumentIndex {
    n_docs: usize,
    postings: HashMap<String, Vec<u32>>,
}

impl DocumentIndex {
    pub fn new(documents: &[Vec<String>], subsample: Option<Subsample>) -> Self {
        let chosen: Vec<usize> = match subsample {
            Some(s) if s.size < documents.len() => {
                let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
                let mut idx = rand::seq::index::sample(&mut rng, documents.len(), s.size).into_vec();
                idx.sort_unstable();
                idx
            }
            _ => (0..documents.len()).collect(),
        };
        let mut postings: HashMap<String, Vec<u32>> = HashMap::new();
        for (doc_id, &d) in chosen.iter().enumerate() {
            let doc = &documents[d];
            let mut vocab: HashSet<String> = doc.iter().cloned().collect();
            vocab.extend(doc.windows(2).map(|w| format!("{} {}", w[0], w[1])));
            for term in vocab {
                postings.entry(term).or_default().push(doc_id as u32);
            }
        }
        Self {
            n_docs: chosen.len(),
            postings,
        }
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn co_doc_freq(&self, a: &str, b: &str) -> usize {
        match (self.postings.get(a), self.postings.get(b)) {
            (Some(x), Some(y)) => {
                let (mut i, mut j, mut n) = (0, 0, 0);
                while i < x.len() && j < y.len() {
                    match x[i].cmp(&y[j]) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            n += 1;
                            i += 1;
                            j += 1;
                        }
                    }
                }
                n
            }
            _ => 0,
        }
    }
}

/// NPMI of a word pair from document co-occurrence. `None` when either word
/// never occurs; `-1` when they never co-occur; `1` when both occur in
/// every document.
pub fn npmi_pair(index: &DocumentIndex, a: &str, b: &str) -> Option<f64> {
    let d = index.n_docs() as f64;
    let (fa, fb) = (index.doc_freq(a), index.doc_freq(b));
    if fa == 0 || fb == 0 {
        return None;
    }
    let fab = index.co_doc_freq(a, b);
    if fab == 0 {
        return Some(-1.0);
    }
    let p_ab = fab as f64 / d;
    if fab == index.n_docs() {
        return Some(1.0);
    }
    let pmi = (p_ab / ((fa as f64 / d) * (fb as f64 / d))).ln();
    Some(pmi / -p_ab.ln())
}

/// Mean NPMI over scoreable pairs `i < j` of `words`.
pub fn topic_coherence(index: &DocumentIndex, words: &[String]) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for i in 0..words.len() {
        for j in i + 1..words.len() {
            if let Some(v) = npmi_pair(index, &words[i], &words[j]) {
                sum += v;
                n += 1;
            }
        }
    }
    (n > 0).then(|| sum / n as f64)
}

/// Corpus coherence: mean topic coherence over non-outlier topics.
pub fn npmi_coherence(
    topics: &[(i32, Vec<String>)],
    documents: &[Vec<String>],
    subsample: Option<Subsample>,
) -> Result<f64> {
    if documents.is_empty() {
        return Err(Error::invalid("coherence needs at least one document"));
    }
    let index = DocumentIndex::new(documents, subsample);
    let mut sum = 0.0;
    let mut n = 0usize;
    for (id, words) in topics.iter().filter(|(id, _)| *id >= 0) {
        if words.len() < 2 {
            return Err(Error::invalid(format!("topic {id} has fewer than two top words")));
        }
        if let Some(c) = topic_coherence(&index, words) {
            sum += c;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::invalid("no topic has a scoreable word pair"));
    }
    Ok(sum / n as f64)
}
