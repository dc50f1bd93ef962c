//! Dialogue-act tagging.
//!
//! [`DialogueActTagger`] is the seam: the bundled [`DaClassifier`] is a
//! multinomial logistic model over word 1- and 2-gram counts trained on
//! `text<TAB>tag` data, and [`PreTagged`] reads tags that an external tagger
//! already attached to each utterance.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{tokenize, LexicalError};
use crate::corpus::{Transcript, Utterance};
use crate::embedding::TokenSequence;

const SHIPPED_TAGS: &str = include_str!("../../data/damsl_tags.txt");
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// The set of admissible dialogue-act codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagInventory {
    codes: Vec<String>,
}

impl Default for TagInventory {
    /// The 42-code SWBD-DAMSL inventory.
    fn default() -> Self {
        TagInventory::parse(SHIPPED_TAGS)
    }
}

impl TagInventory {
    /// One code per line; anything after a tab is a description and ignored.
    pub fn parse(src: &str) -> Self {
        let mut codes: Vec<String> = Vec::new();
        for line in src.lines() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let code = line.split('\t').next().unwrap_or("").trim().to_string();
            if !codes.contains(&code) {
                codes.push(code);
            }
        }
        TagInventory { codes }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexicalError> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| LexicalError::Io(format!("{}: {e}", path.display())))?;
        Ok(TagInventory::parse(&s))
    }

    pub fn contains(&self, code: &str) -> bool {
        self.codes.iter().any(|c| c == code)
    }

    pub fn codes(&self) -> &[String] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

pub trait DialogueActTagger: Sync {
    fn tag(&self, utterance: &Utterance) -> Result<String, LexicalError>;
}

/// Uses the `da` field carried on each utterance.
#[derive(Debug, Clone, Default)]
pub struct PreTagged {
    pub inventory: TagInventory,
}

impl DialogueActTagger for PreTagged {
    fn tag(&self, u: &Utterance) -> Result<String, LexicalError> {
        let tag = u.da.as_deref().ok_or(LexicalError::MissingTag { index: u.index })?;
        if !self.inventory.contains(tag) {
            return Err(LexicalError::UnknownTag(tag.to_string()));
        }
        Ok(tag.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DaTrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    /// n-grams seen fewer times are dropped from the vocabulary.
    pub min_count: usize,
    pub seed: u64,
}

impl Default for DaTrainConfig {
    fn default() -> Self {
        DaTrainConfig {
            epochs: 15,
            learning_rate: 0.1,
            l2: 1e-5,
            min_count: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DaClassifier {
    format_version: u32,
    /// Tags seen in training, sorted ascending.
    tags: Vec<String>,
    /// Most frequent training tag; answer for utterances with no known n-gram.
    prior_tag: String,
    vocabulary: Vec<String>,
    /// `tags.len()` rows of `vocabulary.len() + 1` weights; the last is the bias.
    weights: Vec<Vec<f64>>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

/// 1- and 2-grams with sentence-boundary markers.
pub fn ngram_features(text: &str) -> Vec<String> {
    let toks = tokenize(text);
    let mut out: Vec<String> = toks.clone();
    let mut padded = Vec::with_capacity(toks.len() + 2);
    padded.push("<s>".to_string());
    padded.extend(toks);
    padded.push("</s>".to_string());
    out.extend(padded.windows(2).map(|w| format!("{} {}", w[0], w[1])));
    out
}

/// Reads `text<TAB>tag` lines. The split is at the last tab.
pub fn load_da_corpus(path: impl AsRef<Path>) -> Result<Vec<(String, String)>, LexicalError> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| LexicalError::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| LexicalError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let (text, tag) = line
            .rsplit_once('\t')
            .ok_or_else(|| LexicalError::Parse(format!("line {}: expected text<TAB>tag", i + 1)))?;
        out.push((text.to_string(), tag.trim().to_string()));
    }
    Ok(out)
}

pub fn write_da_corpus<W: Write>(mut w: W, corpus: &[(String, String)]) -> std::io::Result<()> {
    for (text, tag) in corpus {
        writeln!(w, "{}\t{}", text.replace(['\t', '\n'], " "), tag)?;
    }
    Ok(())
}

pub fn train_da_baseline(
    corpus: &[(String, String)],
    inventory: &TagInventory,
    config: &DaTrainConfig,
) -> Result<DaClassifier, LexicalError> {
    if corpus.is_empty() {
        return Err(LexicalError::EmptyCorpus);
    }
    let mut tag_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, tag) in corpus {
        if !inventory.contains(tag) {
            return Err(LexicalError::UnknownTag(tag.clone()));
        }
        *tag_counts.entry(tag).or_default() += 1;
    }
    if tag_counts.len() < 2 {
        return Err(LexicalError::SingleTag);
    }
    let tags: Vec<String> = tag_counts.keys().map(|t| t.to_string()).collect();
    // Ties go to the first (smallest) code since max_by_key keeps the last max.
    let prior_tag = tag_counts
        .iter()
        .rev()
        .max_by_key(|(_, &n)| n)
        .map(|(t, _)| t.to_string())
        .expect("non-empty");

    let feats: Vec<Vec<String>> = corpus.iter().map(|(text, _)| ngram_features(text)).collect();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for f in feats.iter().flatten() {
        *counts.entry(f).or_default() += 1;
    }
    let vocabulary: Vec<String> = counts
        .into_iter()
        .filter(|&(_, n)| n >= config.min_count.max(1))
        .map(|(f, _)| f.to_string())
        .collect();
    let mut model = DaClassifier {
        format_version: MODEL_FORMAT_VERSION,
        weights: vec![vec![0.0; vocabulary.len() + 1]; tags.len()],
        tags,
        prior_tag,
        vocabulary,
        index: HashMap::new(),
    };
    model.rebuild_index();

    let examples: Vec<(Vec<(usize, f64)>, usize)> = feats
        .iter()
        .zip(corpus)
        .map(|(f, (_, tag))| {
            let y = model.tags.binary_search(tag).expect("tag collected above");
            (model.sparse(f), y)
        })
        .collect();

    let mut rng = crate::seed::rng(config.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let bias = model.vocabulary.len();
    let k = model.tags.len();
    let mut probs = vec![0.0; k];
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let lr = config.learning_rate / (1.0 + epoch as f64);
        for &i in &order {
            let (x, y) = &examples[i];
            model.scores_into(x, &mut probs);
            softmax(&mut probs);
            for (c, p) in probs.iter().enumerate() {
                let g = p - if c == *y { 1.0 } else { 0.0 };
                let row = &mut model.weights[c];
                for &(j, v) in x {
                    row[j] -= lr * (g * v + config.l2 * row[j]);
                }
                row[bias] -= lr * g;
            }
        }
    }
    Ok(model)
}

fn softmax(v: &mut [f64]) {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for x in v.iter_mut() {
        *x = (*x - m).exp();
        z += *x;
    }
    for x in v.iter_mut() {
        *x /= z;
    }
}

impl DaClassifier {
    fn rebuild_index(&mut self) {
        self.index = self
            .vocabulary
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i))
            .collect();
    }

    fn sparse(&self, feats: &[String]) -> Vec<(usize, f64)> {
        let mut m: BTreeMap<usize, f64> = BTreeMap::new();
        for f in feats {
            if let Some(&j) = self.index.get(f) {
                *m.entry(j).or_default() += 1.0;
            }
        }
        m.into_iter().collect()
    }

    fn scores_into(&self, x: &[(usize, f64)], out: &mut [f64]) {
        let bias = self.vocabulary.len();
        for (s, row) in out.iter_mut().zip(&self.weights) {
            *s = row[bias] + x.iter().map(|&(j, v)| row[j] * v).sum::<f64>();
        }
    }

    /// Raw per-tag scores, in [`DaClassifier::tags`] order.
    pub fn scores(&self, text: &str) -> Vec<f64> {
        let x = self.sparse(&ngram_features(text));
        let mut out = vec![0.0; self.tags.len()];
        self.scores_into(&x, &mut out);
        out
    }

    /// Highest-scoring tag; ties resolve to the smallest code. An utterance
    /// with no known n-gram gets the most frequent training tag.
    pub fn classify(&self, text: &str) -> &str {
        let x = self.sparse(&ngram_features(text));
        if x.is_empty() {
            return &self.prior_tag;
        }
        let mut s = vec![0.0; self.tags.len()];
        self.scores_into(&x, &mut s);
        let mut best = 0;
        for (i, &v) in s.iter().enumerate().skip(1) {
            if v > s[best] {
                best = i;
            }
        }
        &self.tags[best]
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn prior_tag(&self) -> &str {
        &self.prior_tag
    }

    /// Multiplies every weight (biases included) by `factor`.
    pub fn scale_weights(&mut self, factor: f64) {
        for row in &mut self.weights {
            for w in row {
                *w *= factor;
            }
        }
    }

    /// Fraction of `(text, tag)` pairs classified correctly.
    pub fn accuracy(&self, data: &[(String, String)]) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let hits = data.iter().filter(|(t, y)| self.classify(t) == y).count();
        hits as f64 / data.len() as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("classifier serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, LexicalError> {
        let mut m: DaClassifier = serde_json::from_str(s).map_err(|e| LexicalError::Parse(e.to_string()))?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(LexicalError::Parse(format!(
                "unsupported dialogue-act model version {}",
                m.format_version
            )));
        }
        if m.weights.len() != m.tags.len() || m.weights.iter().any(|r| r.len() != m.vocabulary.len() + 1) {
            return Err(LexicalError::Parse("weight matrix shape does not match vocabulary".into()));
        }
        m.rebuild_index();
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LexicalError> {
        std::fs::write(path.as_ref(), self.to_json()).map_err(|e| LexicalError::Io(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexicalError> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| LexicalError::Io(format!("{}: {e}", path.display())))?;
        DaClassifier::from_json(&s)
    }
}

impl DialogueActTagger for DaClassifier {
    fn tag(&self, u: &Utterance) -> Result<String, LexicalError> {
        Ok(self.classify(&u.text).to_string())
    }
}

pub fn classify_da(model: &DaClassifier, text: &str) -> String {
    model.classify(text).to_string()
}

/// One dialogue-act token per utterance, in order.
pub fn da_sequence(t: &Transcript, tagger: &dyn DialogueActTagger) -> Result<TokenSequence, LexicalError> {
    t.utterances().iter().map(|u| tagger.tag(u)).collect()
}
