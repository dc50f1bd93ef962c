//! Lexicon-based utterance polarity with windowed negation.

use std::collections::{HashMap, HashSet};
use std::io::Read;
use std::path::Path;

use super::{tokenize, LexicalError};

const SHIPPED_LEXICON: &str = include_str!("../../data/sentiment_lexicon.tsv");
const SHIPPED_NEGATORS: &str = include_str!("../../data/negators.txt");

/// Tokens looked back from a matched word for a negator.
pub const NEGATION_WINDOW: usize = 3;
pub const DEFAULT_NEGATION_FACTOR: f64 = -0.5;

#[derive(Debug, Clone)]
pub struct SentimentLexicon {
    entries: HashMap<String, f64>,
    negators: HashSet<String>,
    negation_factor: f64,
}

impl Default for SentimentLexicon {
    fn default() -> Self {
        SentimentLexicon::parse(SHIPPED_LEXICON, SHIPPED_NEGATORS, DEFAULT_NEGATION_FACTOR)
            .expect("shipped sentiment lexicon parses")
    }
}

impl SentimentLexicon {
    pub fn new(
        entries: HashMap<String, f64>,
        negators: HashSet<String>,
        negation_factor: f64,
    ) -> Result<Self, LexicalError> {
        if let Some((w, p)) = entries.iter().find(|(_, p)| !(-1.0..=1.0).contains(*p)) {
            return Err(LexicalError::Parse(format!("polarity of `{w}` out of [-1, 1]: {p}")));
        }
        if let Some(w) = negators.iter().find(|w| entries.contains_key(*w)) {
            return Err(LexicalError::Parse(format!("negator `{w}` also has a polarity entry")));
        }
        if !negation_factor.is_finite() {
            return Err(LexicalError::Parse("negation factor must be finite".into()));
        }
        Ok(SentimentLexicon {
            entries,
            negators,
            negation_factor,
        })
    }

    /// `lexicon` is TSV `word<TAB>polarity`; `negators` one word per line.
    /// Lines starting with `#` are comments in both.
    pub fn parse(lexicon: &str, negators: &str, negation_factor: f64) -> Result<Self, LexicalError> {
        let mut entries = HashMap::new();
        for (i, line) in lexicon.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, pol) = line
                .split_once('\t')
                .ok_or_else(|| LexicalError::Parse(format!("lexicon line {}: expected word<TAB>polarity", i + 1)))?;
            let pol: f64 = pol
                .trim()
                .parse()
                .map_err(|e| LexicalError::Parse(format!("lexicon line {}: {e}", i + 1)))?;
            entries.insert(word.to_lowercase(), pol);
        }
        let negators = negators
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        SentimentLexicon::new(entries, negators, negation_factor)
    }

    /// Loads a lexicon TSV from disk, paired with the shipped negator list.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexicalError> {
        let path = path.as_ref();
        let mut s = String::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_string(&mut s))
            .map_err(|e| LexicalError::Io(format!("{}: {e}", path.display())))?;
        SentimentLexicon::parse(&s, SHIPPED_NEGATORS, DEFAULT_NEGATION_FACTOR)
    }

    pub fn polarity_of(&self, word: &str) -> Option<f64> {
        self.entries.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn is_negator(&self, word: &str) -> bool {
        self.negators.contains(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn negation_factor(&self) -> f64 {
        self.negation_factor
    }

    /// Iterates entries in unspecified order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(w, &p)| (w.as_str(), p))
    }
}

/// Mean polarity of the lexicon words in `text`, in `[-1, 1]`.
///
/// A matched word preceded within [`NEGATION_WINDOW`] tokens by a negator is
/// scaled by the negation factor. No matches gives `0.0`.
pub fn sentiment_polarity(text: &str, lexicon: &SentimentLexicon) -> f64 {
    let tokens = tokenize(text);
    let mut sum = 0.0;
    let mut matched = 0usize;
    for (i, tok) in tokens.iter().enumerate() {
        let Some(mut p) = lexicon.polarity_of(tok) else {
            continue;
        };
        let lo = i.saturating_sub(NEGATION_WINDOW);
        if tokens[lo..i].iter().any(|t| lexicon.is_negator(t)) {
            p *= lexicon.negation_factor;
        }
        sum += p;
        matched += 1;
    }
    if matched == 0 {
        0.0
    } else {
        (sum / matched as f64).clamp(-1.0, 1.0)
    }
}

/// Two-decimal token for a polarity value; `-0.00` is written `0.00`.
pub fn polarity_token(p: f64) -> String {
    let r = (p.clamp(-1.0, 1.0) * 100.0).round() / 100.0;
    if r == 0.0 {
        "0.00".to_string()
    } else {
        format!("{r:.2}")
    }
}
