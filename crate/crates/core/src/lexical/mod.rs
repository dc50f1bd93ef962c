//! Tokenization, lexical categories, sentiment polarity and dialogue acts.

mod dialogue_act;
mod pos;
mod sentiment;
mod tokenize;

use thiserror::Error;

pub use dialogue_act::{
    classify_da, da_sequence, load_da_corpus, ngram_features, train_da_baseline, write_da_corpus,
    DaClassifier, DaTrainConfig, DialogueActTagger, PreTagged, TagInventory, MODEL_FORMAT_VERSION,
};
pub use pos::{CategorySet, LexCategory, PosTagger};
pub use sentiment::{
    polarity_token, sentiment_polarity, SentimentLexicon, DEFAULT_NEGATION_FACTOR, NEGATION_WINDOW,
};
pub use tokenize::tokenize;

use crate::corpus::Transcript;
use crate::embedding::TokenSequence;

#[derive(Debug, Error)]
pub enum LexicalError {
    #[error("{0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("dialogue-act training corpus is empty")]
    EmptyCorpus,
    #[error("dialogue-act training corpus needs at least two distinct tags")]
    SingleTag,
    #[error("`{0}` is not in the dialogue-act tag inventory")]
    UnknownTag(String),
    #[error("utterance {index} carries no dialogue-act tag")]
    MissingTag { index: usize },
}

pub fn pos_tag(tokens: &[String]) -> Vec<LexCategory> {
    thread_local! {
        static TAGGER: PosTagger = PosTagger::default();
    }
    TAGGER.with(|t| t.tag(tokens))
}

/// One two-decimal polarity token per utterance, in order.
pub fn sentiment_sequence(t: &Transcript, lexicon: &SentimentLexicon) -> TokenSequence {
    t.utterances()
        .iter()
        .map(|u| polarity_token(sentiment_polarity(&u.text, lexicon)))
        .collect()
}
