//! Text normalization, tokenization, vocabularies and bag-of-words vectors.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Lowercases and splits a message into word tokens.
///
/// Whitespace-delimited URLs (`scheme://…`, `www.…`) and `@mentions` are
/// dropped, a leading `#` is stripped from hashtags, and what remains is split
/// on every non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut tokens = Vec::new();
    for chunk in lower.split_whitespace() {
        if chunk.starts_with('@') || is_url(chunk) {
            continue;
        }
        let chunk = chunk.trim_start_matches('#');
        tokens.extend(
            chunk
                .split(|c: char| !c.is_alphanumeric())
                .filter(|t| !t.is_empty())
                .map(str::to_owned),
        );
    }
    tokens
}

fn is_url(chunk: &str) -> bool {
    if chunk.starts_with("www.") {
        return true;
    }
    match chunk.find("://") {
        Some(0) | None => false,
        Some(i) => {
            let scheme = &chunk[..i];
            scheme.starts_with(|c: char| c.is_ascii_alphabetic())
                && scheme
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
        }
    }
}

const STOPWORDS: &[&str] = &[
    "a",
    "about",
    "above",
    "after",
    "again",
    "against",
    "all",
    "am",
    "an",
    "and",
    "any",
    "are",
    "as",
    "at",
    "be",
    "because",
    "been",
    "before",
    "being",
    "below",
    "between",
    "both",
    "but",
    "by",
    "can",
    "did",
    "do",
    "does",
    "doing",
    "down",
    "during",
    "each",
    "few",
    "for",
    "from",
    "further",
    "had",
    "has",
    "have",
    "having",
    "he",
    "her",
    "here",
    "hers",
    "herself",
    "him",
    "himself",
    "his",
    "how",
    "i",
    "if",
    "in",
    "into",
    "is",
    "it",
    "its",
    "itself",
    "just",
    "me",
    "more",
    "most",
    "my",
    "myself",
    "no",
    "nor",
    "not",
    "now",
    "of",
    "off",
    "on",
    "once",
    "only",
    "or",
    "other",
    "our",
    "ours",
    "ourselves",
    "out",
    "over",
    "own",
    "same",
    "she",
    "should",
    "so",
    "some",
    "such",
    "than",
    "that",
    "the",
    "their",
    "theirs",
    "them",
    "themselves",
    "then",
    "there",
    "these",
    "they",
    "this",
    "those",
    "through",
    "to",
    "too",
    "under",
    "until",
    "up",
    "very",
    "was",
    "we",
    "were",
    "what",
    "when",
    "where",
    "which",
    "while",
    "who",
    "whom",
    "why",
    "will",
    "with",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
];

/// Which weighting a learner receives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    Counts,
    Tfidf,
}

/// Feature-extraction settings. `mode = None` picks each learner's own
/// convention (counts for NB and RF, TF-IDF for SVM).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub mode: Option<FeatureMode>,
    pub min_df: usize,
    pub stopwords: bool,
    pub stem: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            mode: None,
            min_df: 1,
            stopwords: false,
            stem: false,
        }
    }
}

impl FeatureConfig {
    /// Tokenizes and applies the optional stop-word and stemming passes.
    pub fn analyze(&self, text: &str) -> Vec<String> {
        let mut tokens = tokenize(text);
        if self.stopwords {
            tokens.retain(|t| STOPWORDS.binary_search(&t.as_str()).is_err());
        }
        if self.stem {
            let stemmer = rust_stemmers::Stemmer::create(rust_stemmers::Algorithm::English);
            for t in &mut tokens {
                *t = stemmer.stem(t).into_owned();
            }
        }
        tokens
    }
}

/// Term index with document frequencies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    total_documents: usize,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    total_documents: usize,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        let index = r
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            terms: r.terms,
            doc_freq: r.doc_freq,
            total_documents: r.total_documents,
            index,
        }
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            terms: v.terms,
            doc_freq: v.doc_freq,
            total_documents: v.total_documents,
        }
    }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_documents(&self) -> usize {
        self.total_documents
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.terms.get(index).map(String::as_str)
    }

    pub fn doc_freq(&self, term: &str) -> Option<usize> {
        self.index_of(term).map(|i| self.doc_freq[i])
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// Smoothed inverse document frequency `ln((1+N)/(1+df)) + 1`.
    pub fn idf<T: Scalar>(&self, index: usize) -> T {
        let n = T::from_usize_lossy(self.total_documents);
        let df = T::from_usize_lossy(self.doc_freq[index]);
        ((T::one() + n) / (T::one() + df)).ln() + T::one()
    }
}

/// Builds a vocabulary in first-seen order, keeping terms that occur in at
/// least `min_df` documents.
pub fn build_vocabulary<D: AsRef<[S]>, S: AsRef<str>>(
    documents: &[D],
    min_df: usize,
) -> Vocabulary {
    let mut order: Vec<String> = Vec::new();
    let mut df: HashMap<&str, usize> = HashMap::new();
    for doc in documents {
        let mut seen = std::collections::HashSet::new();
        for tok in doc.as_ref() {
            let tok = tok.as_ref();
            if !seen.insert(tok) {
                continue;
            }
            let count = df.entry(tok).or_insert_with(|| {
                order.push(tok.to_owned());
                0
            });
            *count += 1;
        }
    }
    let mut terms = Vec::new();
    let mut doc_freq = Vec::new();
    for t in order {
        let f = df[t.as_str()];
        if f >= min_df.max(1) {
            doc_freq.push(f);
            terms.push(t);
        }
    }
    VocabularyRepr {
        terms,
        doc_freq,
        total_documents: documents.len(),
    }
    .into()
}

/// Sparse vector with strictly increasing indices and finite nonzero weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseVector<T> {
    entries: Vec<(usize, T)>,
}

impl<T> Default for SparseVector<T> {
    fn default() -> Self {
        SparseVector {
            entries: Vec::new(),
        }
    }
}

impl<T: Scalar> SparseVector<T> {
    /// Sums duplicate indices, then drops zero and non-finite weights.
    pub fn from_pairs(mut pairs: Vec<(usize, T)>) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let mut entries: Vec<(usize, T)> = Vec::with_capacity(pairs.len());
        for (i, w) in pairs {
            match entries.last_mut() {
                Some((j, acc)) if *j == i => *acc = *acc + w,
                _ => entries.push((i, w)),
            }
        }
        entries.retain(|&(_, w)| w != T::zero() && w.is_finite());
        SparseVector { entries }
    }

    pub fn entries(&self) -> &[(usize, T)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> T {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|k| self.entries[k].1)
            .unwrap_or_else(|_| T::zero())
    }

    /// Dot product with a dense vector; indices past its end contribute zero.
    pub fn dot(&self, dense: &[T]) -> T {
        self.entries
            .iter()
            .filter_map(|&(i, w)| dense.get(i).map(|&d| d * w))
            .fold(T::zero(), |a, b| a + b)
    }

    pub fn norm(&self) -> T {
        self.entries
            .iter()
            .map(|&(_, w)| w * w)
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|&(i, _)| i)
    }
}

/// Maps tokens onto `vocab`; out-of-vocabulary tokens are dropped.
pub fn vectorize<T: Scalar, S: AsRef<str>>(
    tokens: &[S],
    vocab: &Vocabulary,
    mode: FeatureMode,
) -> SparseVector<T> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for t in tokens {
        if let Some(i) = vocab.index_of(t.as_ref()) {
            *counts.entry(i).or_insert(0) += 1;
        }
    }
    let pairs: Vec<(usize, T)> = match mode {
        FeatureMode::Counts => counts
            .into_iter()
            .map(|(i, c)| (i, T::from_usize_lossy(c)))
            .collect(),
        FeatureMode::Tfidf => {
            let raw: Vec<(usize, T)> = counts
                .into_iter()
                .map(|(i, c)| (i, T::from_usize_lossy(c) * vocab.idf::<T>(i)))
                .collect();
            let norm = raw
                .iter()
                .map(|&(_, w)| w * w)
                .fold(T::zero(), |a, b| a + b)
                .sqrt();
            raw.into_iter().map(|(i, w)| (i, w / norm)).collect()
        }
    };
    SparseVector::from_pairs(pairs)
}
