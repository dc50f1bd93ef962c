//! Rule-based tagger onto the eight lexical categories used for entrainment.
//!
//! Lookup order: word table, then suffix table, then token shape (numeric →
//! `CD`, other alphabetic → `NN`), and `OTHER` for anything left.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::LexicalError;

const SHIPPED_LEXICON: &str = include_str!("../../data/pos_lexicon.tsv");
const SHIPPED_SUFFIXES: &str = include_str!("../../data/pos_suffixes.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LexCategory {
    NN,
    JJ,
    VB,
    RB,
    CC,
    CD,
    IN,
    PRP,
    OTHER,
}

impl LexCategory {
    /// The categories entrainment is measured over; `OTHER` is excluded.
    pub const TRACKED: [LexCategory; 8] = [
        LexCategory::NN,
        LexCategory::JJ,
        LexCategory::VB,
        LexCategory::RB,
        LexCategory::CC,
        LexCategory::CD,
        LexCategory::IN,
        LexCategory::PRP,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LexCategory::NN => "NN",
            LexCategory::JJ => "JJ",
            LexCategory::VB => "VB",
            LexCategory::RB => "RB",
            LexCategory::CC => "CC",
            LexCategory::CD => "CD",
            LexCategory::IN => "IN",
            LexCategory::PRP => "PRP",
            LexCategory::OTHER => "OTHER",
        }
    }

    fn bit(self) -> u16 {
        1 << (self as u16)
    }
}

impl fmt::Display for LexCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LexCategory {
    type Err = LexicalError;

    fn from_str(s: &str) -> Result<Self, LexicalError> {
        Ok(match s {
            "NN" => LexCategory::NN,
            "JJ" => LexCategory::JJ,
            "VB" => LexCategory::VB,
            "RB" => LexCategory::RB,
            "CC" => LexCategory::CC,
            "CD" => LexCategory::CD,
            "IN" => LexCategory::IN,
            "PRP" => LexCategory::PRP,
            "OTHER" => LexCategory::OTHER,
            _ => return Err(LexicalError::Parse(format!("unknown lexical category `{s}`"))),
        })
    }
}

/// Set of categories present in one utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct CategorySet(u16);

impl CategorySet {
    pub fn insert(&mut self, c: LexCategory) {
        self.0 |= c.bit();
    }

    pub fn contains(self, c: LexCategory) -> bool {
        self.0 & c.bit() != 0
    }
}

impl FromIterator<LexCategory> for CategorySet {
    fn from_iter<I: IntoIterator<Item = LexCategory>>(iter: I) -> Self {
        let mut s = CategorySet::default();
        for c in iter {
            s.insert(c);
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct PosTagger {
    words: HashMap<String, LexCategory>,
    suffixes: Vec<(String, LexCategory)>,
}

impl Default for PosTagger {
    fn default() -> Self {
        PosTagger::from_tables(SHIPPED_LEXICON, SHIPPED_SUFFIXES).expect("shipped POS tables parse")
    }
}

impl PosTagger {
    /// Parses a word table and a suffix table, both `key<TAB>CATEGORY` with
    /// `#` comments.
    pub fn from_tables(lexicon: &str, suffixes: &str) -> Result<Self, LexicalError> {
        let words = parse_table(lexicon)?.into_iter().collect();
        let suffixes = parse_table(suffixes)?;
        Ok(PosTagger { words, suffixes })
    }

    pub fn tag(&self, tokens: &[String]) -> Vec<LexCategory> {
        tokens.iter().map(|t| self.tag_token(t)).collect()
    }

    pub fn tag_token(&self, token: &str) -> LexCategory {
        if let Some(&c) = self.words.get(token) {
            return c;
        }
        let has_digit = token.chars().any(|c| c.is_ascii_digit());
        if has_digit && token.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',') {
            return LexCategory::CD;
        }
        let wordlike = token.chars().any(char::is_alphabetic)
            && token.chars().all(|c| c.is_alphanumeric() || c == '\'' || c == '-');
        if !wordlike {
            return LexCategory::OTHER;
        }
        let len = token.chars().count();
        for (suffix, c) in &self.suffixes {
            if token.ends_with(suffix.as_str()) && len >= suffix.chars().count() + 2 {
                return *c;
            }
        }
        LexCategory::NN
    }

    /// Lexicon words with category `c`, sorted.
    pub fn words_of(&self, c: LexCategory) -> Vec<&str> {
        let mut w: Vec<&str> = self
            .words
            .iter()
            .filter(|&(_, &cat)| cat == c)
            .map(|(w, _)| w.as_str())
            .collect();
        w.sort_unstable();
        w
    }

    /// Categories present in an utterance.
    pub fn category_set(&self, text: &str) -> CategorySet {
        super::tokenize(text).iter().map(|t| self.tag_token(t)).collect()
    }
}

fn parse_table(src: &str) -> Result<Vec<(String, LexCategory)>, LexicalError> {
    let mut out = Vec::new();
    for (i, line) in src.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, cat) = line
            .split_once('\t')
            .ok_or_else(|| LexicalError::Parse(format!("line {}: expected key<TAB>category", i + 1)))?;
        out.push((key.to_string(), cat.trim().parse()?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexical::tokenize;
    use LexCategory::*;

    fn tag(s: &str) -> Vec<LexCategory> {
        PosTagger::default().tag(&tokenize(s))
    }

    #[test]
    fn shipped_rules() {
        let p = PosTagger::default();
        assert_eq!(p.tag(&["quickly".to_string()]), [RB]);
        assert_eq!(p.tag(&["and".to_string()]), [CC]);
        assert!(p.tag(&[]).is_empty());
        assert_eq!(p.tag_token("42"), CD);
        assert_eq!(p.tag_token("3.5"), CD);
        assert_eq!(p.tag_token("we"), PRP);
        assert_eq!(p.tag_token("into"), IN);
        assert_eq!(p.tag_token("zebra"), NN);
        assert_eq!(p.tag_token("."), OTHER);
        assert_eq!(p.tag_token("the"), OTHER);
        assert_eq!(p.tag_token("careful"), JJ);
        assert_eq!(p.tag_token("walking"), VB);
    }

    #[test]
    fn sentence() {
        assert_eq!(
            tag("I don't have any kids."),
            [PRP, VB, RB, VB, OTHER, NN, OTHER]
        );
        assert_eq!(tag("Good card."), [JJ, NN, OTHER]);
    }

    #[test]
    fn category_set_membership() {
        let s = PosTagger::default().category_set("we trade two cards");
        assert!(s.contains(PRP) && s.contains(VB) && s.contains(CD) && s.contains(NN));
        assert!(!s.contains(JJ));
    }

    #[test]
    fn bad_table_rejected() {
        assert!(PosTagger::from_tables("dog\tNOUN\n", "").is_err());
        assert!(PosTagger::from_tables("dog NN\n", "").is_err());
    }
}
