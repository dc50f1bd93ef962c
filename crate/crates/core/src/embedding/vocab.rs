use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{EmbeddingError, TokenSequence};

/// Exponent applied to unigram counts for the negative-sampling distribution.
pub const SAMPLING_POWER: f64 = 0.75;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vocabulary {
    /// Ordered by descending count, then token.
    tokens: Vec<String>,
    counts: Vec<u64>,
    #[serde(skip)]
    index: HashMap<String, usize>,
    // Cumulative unnormalized count^0.75.
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl Vocabulary {
    pub fn build(docs: &[TokenSequence], min_count: u64) -> Result<Self, EmbeddingError> {
        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for tok in docs.iter().flatten() {
            *counts.entry(tok.as_str()).or_default() += 1;
        }
        let mut kept: Vec<(&str, u64)> = counts.into_iter().filter(|&(_, c)| c >= min_count.max(1)).collect();
        if kept.is_empty() {
            return Err(EmbeddingError::EmptyVocabulary);
        }
        kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let mut v = Vocabulary {
            tokens: kept.iter().map(|(t, _)| t.to_string()).collect(),
            counts: kept.iter().map(|&(_, c)| c).collect(),
            index: HashMap::new(),
            cumulative: Vec::new(),
        };
        v.rebuild();
        Ok(v)
    }

    /// Restores the lookup index and sampling table after deserialization.
    pub(crate) fn rebuild(&mut self) {
        self.index = self
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        let mut acc = 0.0;
        self.cumulative = self
            .counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(SAMPLING_POWER);
                acc
            })
            .collect();
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn count(&self, id: usize) -> u64 {
        self.counts[id]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Probability of drawing `id` as a negative sample.
    pub fn sampling_probability(&self, id: usize) -> f64 {
        (self.counts[id] as f64).powf(SAMPLING_POWER) / self.cumulative.last().copied().unwrap_or(1.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty vocabulary");
        let r = rng.gen::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= r).min(self.len() - 1)
    }

    /// In-vocabulary ids of a document; unknown tokens are dropped.
    pub fn encode(&self, doc: &[String]) -> Vec<usize> {
        doc.iter().filter_map(|t| self.id(t)).collect()
    }
}

pub fn build_vocab(docs: &[TokenSequence], min_count: u64) -> Result<Vocabulary, EmbeddingError> {
    Vocabulary::build(docs, min_count)
}
