//! Seeded synthetic team dialogues with a plantable conflict signal.
//!
//! Half the teams come from a low-conflict generator and half from a
//! high-conflict one. `separation` moves three independent knobs away from a
//! shared neutral setting:
//!
//! * dialogue acts: share of acts drawn from the class's own act pool,
//! * sentiment: share of polar words with the class's sign,
//! * entrainment: probability that a reply copies (low conflict) or avoids
//!   (high conflict) the word categories of the turn it answers.
//!
//! At separation 0 both generators are the same distribution.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ConflictScore, Transcript, Utterance};
use crate::lexical::{tokenize, LexCategory, PosTagger, SentimentLexicon, TagInventory};
use crate::seed;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synth configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_teams: usize,
    pub team_size: usize,
    pub min_utterances: usize,
    pub max_utterances: usize,
    pub separation: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_teams: 60,
            team_size: 4,
            min_utterances: 60,
            max_utterances: 120,
            separation: 1.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidConfig(m.to_string()));
        if self.n_teams < 2 || !self.n_teams.is_multiple_of(2) {
            return bad("n_teams must be even and at least 2");
        }
        if !(3..=4).contains(&self.team_size) {
            return bad("team_size must be 3 or 4");
        }
        if self.min_utterances < 3 || self.min_utterances > self.max_utterances {
            return bad("need 3 <= min_utterances <= max_utterances");
        }
        if !(0.0..=1.0).contains(&self.separation) {
            return bad("separation must lie in [0, 1]");
        }
        Ok(())
    }
}

const LOW_CONFLICT_ACTS: [&str; 8] = ["aa", "ba", "sd", "qw", "ad", "oo_co_cc", "na", "ft"];
const HIGH_CONFLICT_ACTS: [&str; 8] = ["ar", "ng", "sv", "br", "nn", "qy^d", "h", "arp_nd"];

/// Categories whose presence the echo mechanism controls. JJ is left to the
/// sentiment word.
const CONTENT: [LexCategory; 7] = [
    LexCategory::NN,
    LexCategory::VB,
    LexCategory::RB,
    LexCategory::CC,
    LexCategory::CD,
    LexCategory::IN,
    LexCategory::PRP,
];

const CATEGORY_RATE: f64 = 0.5;
/// Echo probability at full separation. Below 1 so that echoing teams still
/// vary their category mix; a constant mix carries no entrainment.
const MAX_ECHO: f64 = 0.6;
const SENTIMENT_RATE: f64 = 0.7;
const POLARITY_CUTOFF: f64 = 0.5;

/// Word pools built from the shipped lexicons.
struct Pools {
    content: Vec<Vec<String>>,
    positive: Vec<String>,
    negative: Vec<String>,
    cue: Vec<String>,
}

impl Pools {
    fn build() -> Self {
        let tagger = PosTagger::default();
        let lex = SentimentLexicon::default();
        // A word qualifies if it survives tokenization intact and carries no
        // polarity of its own.
        let plain = |w: &str| tokenize(w) == [w] && !lex.contains(w) && !lex.is_negator(w);
        let content = CONTENT
            .iter()
            .map(|&c| {
                tagger
                    .words_of(c)
                    .into_iter()
                    .filter(|w| plain(w))
                    .map(String::from)
                    .collect::<Vec<_>>()
            })
            .collect();
        let cue = tagger
            .words_of(LexCategory::OTHER)
            .into_iter()
            .filter(|w| plain(w) && w.chars().all(char::is_alphabetic))
            .map(String::from)
            .collect();
        let mut polar: Vec<(&str, f64)> = lex
            .entries()
            .filter(|&(w, p)| {
                p.abs() >= POLARITY_CUTOFF && tokenize(w) == [w] && tagger.tag_token(w) == LexCategory::JJ
            })
            .collect();
        polar.sort_by(|a, b| a.0.cmp(b.0));
        let pick = |positive: bool| {
            polar
                .iter()
                .filter(|&&(_, p)| (p > 0.0) == positive)
                .map(|&(w, _)| w.to_string())
                .collect::<Vec<_>>()
        };
        Pools {
            content,
            positive: pick(true),
            negative: pick(false),
            cue,
        }
    }

    fn cue_for(&self, act: &str) -> &str {
        let inv = TagInventory::default();
        let i = inv.codes().iter().position(|c| c == act).unwrap_or(0);
        &self.cue[i % self.cue.len()]
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Class {
    Low,
    High,
}

fn choose<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    items.choose(rng).expect("non-empty pool")
}

fn utterance_text(pools: &Pools, act: &str, present: &[bool; 7], polar: Option<&str>, rng: &mut ChaCha8Rng) -> String {
    let mut words = vec![pools.cue_for(act).to_string()];
    for (k, &on) in present.iter().enumerate() {
        if on {
            words.push(choose(rng, &pools.content[k]).clone());
        }
    }
    if let Some(p) = polar {
        words.push(p.to_string());
    }
    let mut s = words.join(" ");
    s.push_str(if act.starts_with('q') { " ?" } else { " ." });
    s
}

fn dialogue(pools: &Pools, cfg: &SynthConfig, class: Class, team: usize, rng: &mut ChaCha8Rng) -> Transcript {
    let s = cfg.separation;
    let n = rng.gen_range(cfg.min_utterances..=cfg.max_utterances);
    let names: Vec<String> = (1..=cfg.team_size).map(|i| format!("P{i}")).collect();
    let (own, other) = match class {
        Class::Low => (&LOW_CONFLICT_ACTS, &HIGH_CONFLICT_ACTS),
        Class::High => (&HIGH_CONFLICT_ACTS, &LOW_CONFLICT_ACTS),
    };
    let p_positive = match class {
        Class::Low => (1.0 + s) / 2.0,
        Class::High => (1.0 - s) / 2.0,
    };

    let mut utterances = Vec::with_capacity(n);
    let mut speaker = rng.gen_range(0..names.len());
    let mut prev = [false; 7];
    for index in 0..n {
        if index > 0 {
            let step = rng.gen_range(1..names.len());
            speaker = (speaker + step) % names.len();
        }
        let act = if rng.gen_bool((1.0 + s) / 2.0) {
            *choose(rng, own)
        } else {
            *choose(rng, other)
        };
        let mut present = [false; 7];
        if index > 0 && rng.gen_bool(MAX_ECHO * s) {
            for k in 0..7 {
                present[k] = match class {
                    Class::Low => prev[k],
                    Class::High => !prev[k],
                };
            }
        } else {
            for p in present.iter_mut() {
                *p = rng.gen_bool(CATEGORY_RATE);
            }
        }
        let polar = if rng.gen_bool(SENTIMENT_RATE) {
            let pool = if rng.gen_bool(p_positive) {
                &pools.positive
            } else {
                &pools.negative
            };
            Some(choose(rng, pool).as_str())
        } else {
            None
        };
        let text = utterance_text(pools, act, &present, polar, rng);
        let mut u = Utterance::new(index, names[speaker].clone(), text);
        u.da = Some(act.to_string());
        utterances.push(u);
        prev = present;
    }

    let z = match class {
        Class::Low => -rng.gen_range(0.1..2.0),
        Class::High => rng.gen_range(0.1..2.0),
    };
    Transcript::new(
        format!("team{team:03}"),
        "s1",
        utterances,
        Some(ConflictScore::new(z).expect("finite z-score")),
    )
    .expect("generated transcript is valid")
}

/// Generates `n_teams` transcripts, half per class, in team-id order.
pub fn generate(cfg: &SynthConfig) -> Result<Vec<Transcript>, SynthError> {
    cfg.validate()?;
    let pools = Pools::build();
    let mut rng = seed::rng(seed::derive(cfg.seed, "synth", 0));
    let mut classes: Vec<Class> = (0..cfg.n_teams)
        .map(|i| if i < cfg.n_teams / 2 { Class::Low } else { Class::High })
        .collect();
    classes.shuffle(&mut rng);
    Ok(classes
        .iter()
        .enumerate()
        .map(|(team, &class)| dialogue(&pools, cfg, class, team, &mut rng))
        .collect())
}

/// `(text, act)` pairs from pre-tagged transcripts, for training the
/// dialogue-act classifier.
pub fn da_training_pairs(transcripts: &[Transcript]) -> Vec<(String, String)> {
    transcripts
        .iter()
        .flat_map(|t| t.utterances())
        .filter_map(|u| u.da.as_ref().map(|d| (u.text.clone(), d.clone())))
        .collect()
}
