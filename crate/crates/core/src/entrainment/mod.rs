//! Syntactic entrainment between speakers and its graph-kernel encoding.
//!
//! For an ordered speaker pair `(x, y)` and a lexical category `c`, the
//! entrainment of `y` to `x` is
//!
//! ```text
//! Ent_c(x, y) = P(reply has c | trigger has c) - P(reply has c)
//! ```
//!
//! estimated over adjacency pairs where an utterance by `y` immediately
//! follows one by `x`. Averaging over the categories where the conditional
//! is defined gives one number per ordered pair; positive values become
//! edges `y -> x` of the team's [`EntrainmentGraph`]. Six node centralities
//! averaged over the team form the [`KernelVector`] that is binned into
//! tokens for the embedder.

mod centrality;
mod graph;

use thiserror::Error;

pub use centrality::{
    betweenness, closeness, degree, in_degree, katz, katz_attenuation, kernel_vector, kernel_vectors, pagerank,
    spectral_radius, team_vector, KernelVector, PAGERANK_DAMPING, PAGERANK_TOLERANCE,
};
pub use graph::{Edge, EntrainmentGraph, MAX_NODES};

use crate::corpus::{Transcript, Utterance};
use crate::embedding::TokenSequence;
use crate::lexical::{CategorySet, LexCategory, PosTagger};

#[derive(Debug, Error, PartialEq)]
pub enum EntrainmentError {
    #[error("entrainment graph needs at least 2 speakers, got {0}")]
    TooFewSpeakers(usize),
    #[error("entrainment graph supports at most {MAX_NODES} speakers, got {0}")]
    TooManySpeakers(usize),
    #[error("speaker `{0}` is not a graph node")]
    UnknownSpeaker(String),
    #[error("invalid edge {from}->{to}: {reason}")]
    InvalidEdge {
        from: usize,
        to: usize,
        reason: &'static str,
    },
}

/// A transcript with the lexical categories of each utterance precomputed.
#[derive(Debug, Clone)]
pub struct TaggedTranscript<'a> {
    transcript: &'a Transcript,
    categories: Vec<CategorySet>,
}

impl<'a> TaggedTranscript<'a> {
    pub fn new(transcript: &'a Transcript, tagger: &PosTagger) -> Self {
        let categories = transcript
            .utterances()
            .iter()
            .map(|u| tagger.category_set(&u.text))
            .collect();
        TaggedTranscript {
            transcript,
            categories,
        }
    }

    pub fn transcript(&self) -> &'a Transcript {
        self.transcript
    }

    pub fn categories(&self) -> &[CategorySet] {
        &self.categories
    }
}

/// A trigger by `x` and the reply by `y` right after it.
#[derive(Debug, Clone, Copy)]
pub struct AdjacencyPair<'a> {
    pub trigger: &'a Utterance,
    pub reply: &'a Utterance,
    pub trigger_categories: CategorySet,
    pub reply_categories: CategorySet,
}

/// Every consecutive `(u_i by x, u_{i+1} by y)`. Empty when `x == y`.
pub fn adjacency_pairs<'a>(t: &TaggedTranscript<'a>, x: &str, y: &str) -> Vec<AdjacencyPair<'a>> {
    if x == y {
        return Vec::new();
    }
    let utts = t.transcript.utterances();
    (0..utts.len().saturating_sub(1))
        .filter(|&i| utts[i].speaker == x && utts[i + 1].speaker == y)
        .map(|i| AdjacencyPair {
            trigger: &utts[i],
            reply: &utts[i + 1],
            trigger_categories: t.categories[i],
            reply_categories: t.categories[i + 1],
        })
        .collect()
}

/// Per-category entrainment over one ordered pair's adjacency pairs.
/// `None` when no trigger contains `c`.
pub fn entrainment_c(pairs: &[AdjacencyPair<'_>], c: LexCategory) -> Option<f64> {
    let mut trig = 0usize;
    let mut both = 0usize;
    let mut reply = 0usize;
    for p in pairs {
        let t = p.trigger_categories.contains(c);
        let r = p.reply_categories.contains(c);
        trig += usize::from(t);
        both += usize::from(t && r);
        reply += usize::from(r);
    }
    if trig == 0 {
        return None;
    }
    Some(both as f64 / trig as f64 - reply as f64 / pairs.len() as f64)
}

/// Mean of [`entrainment_c`] over the tracked categories where it is defined.
pub fn entrainment_mean(t: &TaggedTranscript<'_>, x: &str, y: &str) -> Option<f64> {
    let pairs = adjacency_pairs(t, x, y);
    mean_over_categories(&pairs)
}

fn mean_over_categories(pairs: &[AdjacencyPair<'_>]) -> Option<f64> {
    let defined: Vec<f64> = LexCategory::TRACKED
        .iter()
        .filter_map(|&c| entrainment_c(pairs, c))
        .collect();
    if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    }
}

/// Graph over the transcript's own speakers.
pub fn build_graph(t: &Transcript, tagger: &PosTagger) -> Result<EntrainmentGraph, EntrainmentError> {
    let nodes: Vec<String> = t.speakers().into_iter().map(str::to_string).collect();
    build_graph_for(t, &nodes, tagger)
}

/// Graph over a fixed roster, so that a phase segment where some team
/// member is silent still yields a node for them.
pub fn build_graph_for(
    t: &Transcript,
    nodes: &[String],
    tagger: &PosTagger,
) -> Result<EntrainmentGraph, EntrainmentError> {
    if let Some(u) = t.utterances().iter().find(|u| !nodes.contains(&u.speaker)) {
        return Err(EntrainmentError::UnknownSpeaker(u.speaker.clone()));
    }
    let tagged = TaggedTranscript::new(t, tagger);
    let mut edges = Vec::new();
    for (xi, x) in nodes.iter().enumerate() {
        for (yi, y) in nodes.iter().enumerate() {
            if xi == yi {
                continue;
            }
            if let Some(w) = entrainment_mean(&tagged, x, y) {
                if w > 0.0 {
                    edges.push(Edge {
                        from: yi,
                        to: xi,
                        weight: w,
                    });
                }
            }
        }
    }
    EntrainmentGraph::new(nodes.to_vec(), edges)
}

/// Min-max range of the Katz component over a corpus of team vectors.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KatzScaling {
    pub min: f64,
    pub max: f64,
}

impl KatzScaling {
    pub fn fit(vectors: &[KernelVector]) -> Self {
        let min = vectors.iter().map(|v| v.katz).fold(f64::INFINITY, f64::min);
        let max = vectors.iter().map(|v| v.katz).fold(f64::NEG_INFINITY, f64::max);
        if vectors.is_empty() {
            KatzScaling { min: 0.0, max: 0.0 }
        } else {
            KatzScaling { min, max }
        }
    }

    pub fn scale(&self, katz: f64) -> f64 {
        let span = self.max - self.min;
        if span > 0.0 {
            ((katz - self.min) / span).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

pub const BINS: usize = 10;

/// Uniform bin in `0..BINS` for a value in `[0, 1]`; 1.0 lands in the top bin.
pub fn bin(value: f64) -> usize {
    let v = if value.is_finite() { value.clamp(0.0, 1.0) } else { 0.0 };
    ((v * BINS as f64).floor() as usize).min(BINS - 1)
}

/// Six tokens `k{i}_b{j}`: kernel `i` in [`KernelVector::as_array`] order,
/// bin `j` of its value (Katz rescaled with `scaling` first).
pub fn entrainment_tokens(v: &KernelVector, scaling: &KatzScaling) -> TokenSequence {
    let mut vals = v.as_array();
    vals[5] = scaling.scale(v.katz);
    vals.iter()
        .enumerate()
        .map(|(i, &x)| format!("k{i}_b{}", bin(x)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexical::tokenize;
    use LexCategory::*;

    fn transcript(turns: &[(&str, &str)]) -> Transcript {
        Transcript::from_turns("T", "s", turns, None).unwrap()
    }

    fn speakers_only(seq: &str) -> Transcript {
        let turns: Vec<(String, String)> = seq.chars().map(|c| (c.to_string(), "ok".to_string())).collect();
        Transcript::from_turns("T", "s", &turns, None).unwrap()
    }

    #[test]
    fn pair_counts() {
        let p = PosTagger::default();
        let t = speakers_only("ABAB");
        let tt = TaggedTranscript::new(&t, &p);
        assert_eq!(adjacency_pairs(&tt, "A", "B").len(), 2);
        assert_eq!(adjacency_pairs(&tt, "B", "A").len(), 1);
        assert!(adjacency_pairs(&tt, "A", "A").is_empty());

        let t = speakers_only("AAB");
        let tt = TaggedTranscript::new(&t, &p);
        let pairs = adjacency_pairs(&tt, "A", "B");
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].trigger.index, 1);

        let t = speakers_only("ABCABC");
        let tt = TaggedTranscript::new(&t, &p);
        assert_eq!(adjacency_pairs(&tt, "A", "B").len(), 2);
        assert_eq!(adjacency_pairs(&tt, "B", "A").len(), 0);
    }

    // Trigger/reply category sets built directly.
    fn pairs_from(sets: &[(CategorySet, CategorySet)]) -> Vec<AdjacencyPair<'static>> {
        static U: std::sync::OnceLock<Utterance> = std::sync::OnceLock::new();
        let u = U.get_or_init(|| Utterance::new(0, "x", ""));
        sets.iter()
            .map(|&(t, r)| AdjacencyPair {
                trigger: u,
                reply: u,
                trigger_categories: t,
                reply_categories: r,
            })
            .collect()
    }

    fn set(cs: &[LexCategory]) -> CategorySet {
        cs.iter().copied().collect()
    }

    #[test]
    fn eq1_examples() {
        let n = set(&[NN]);
        let e = set(&[]);
        // replies never contain NN
        assert_eq!(entrainment_c(&pairs_from(&[(n, e), (e, e)]), NN), Some(0.0));
        // replies always contain NN
        assert_eq!(entrainment_c(&pairs_from(&[(n, n), (e, n), (n, n)]), NN), Some(0.0));
        // 2 of 4 triggers have NN, both echoed; other replies lack it: 2/2 - 2/4
        assert_eq!(entrainment_c(&pairs_from(&[(n, n), (n, n), (e, e), (e, e)]), NN), Some(0.5));
        // no trigger has NN
        assert_eq!(entrainment_c(&pairs_from(&[(e, n)]), NN), None);
        assert_eq!(entrainment_c(&[], NN), None);
    }

    #[test]
    fn independent_replies_give_no_edges() {
        // Every utterance has the same categories, so every Ent_c is 1 - 1 = 0.
        let t = transcript(&[("A", "we move"), ("B", "we move"), ("C", "we move"), ("A", "we move"), ("C", "we move")]);
        let g = build_graph(&t, &PosTagger::default()).unwrap();
        assert_eq!(g.node_count(), 3);
        assert!(g.edges().is_empty());
    }

    // B echoes every noun A says; A never picks up B's.
    fn echo_fixture() -> Transcript {
        transcript(&[
            ("A", "the city"),
            ("B", "the city"),
            ("A", "the"),
            ("B", "the"),
            ("A", "the station"),
            ("B", "station"),
            ("A", "the"),
            ("B", "uh"),
            ("A", "cards"),
            ("B", "cards"),
            ("A", "so"),
            ("B", "uh"),
        ])
    }

    #[test]
    fn one_way_echo_gives_single_edge() {
        // (x=A, y=B): 6 pairs. A has NN at 0,4,8 and B echoes all three;
        // B replies carry NN exactly 3 times: Ent_NN = 3/3 - 3/6 = 0.5.
        // A has CC ("so") once and B lacks it: Ent_CC = 0 - 0. Mean 0.25.
        // (x=B, y=A): 5 pairs. B has NN at 1,5,9, answered by "the", "the",
        // "so"; A replies with NN at 4 and 8: Ent_NN = 0/3 - 2/5 = -0.4.
        let p = PosTagger::default();
        let t = echo_fixture();
        let tt = TaggedTranscript::new(&t, &p);
        assert_eq!(adjacency_pairs(&tt, "A", "B").len(), 6);
        assert_eq!(entrainment_mean(&tt, "A", "B"), Some(0.25));
        assert_eq!(entrainment_mean(&tt, "B", "A"), Some(-0.4));
        let g = build_graph(&t, &p).unwrap();
        assert_eq!(g.edges().len(), 1);
        let e = g.edges()[0];
        assert_eq!((g.nodes()[e.from].as_str(), g.nodes()[e.to].as_str()), ("B", "A"));
        assert_eq!(e.weight, 0.25);
    }

    #[test]
    fn zero_mean_is_not_an_edge() {
        let p = PosTagger::default();
        let t = transcript(&[
            ("A", "cards"),
            ("B", "cards"),
            ("A", "cards"),
            ("B", "the"),
            ("A", "the"),
            ("B", "the"),
            ("A", "the"),
            ("B", "cards"),
            ("A", "cards"),
        ]);
        // (x=A,y=B): trig NN at 0,2, echoed once; replies with NN 1,7: 1/2 - 2/4 = 0.
        // (x=B,y=A): trig NN at 1,7, both echoed; replies with NN 2,8: 2/2 - 2/4.
        let tt = TaggedTranscript::new(&t, &p);
        assert_eq!(entrainment_mean(&tt, "A", "B"), Some(0.0));
        assert_eq!(entrainment_mean(&tt, "B", "A"), Some(0.5));
        let g = build_graph(&t, &p).unwrap();
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.weight(1, 0), None);
        assert_eq!(g.weight(0, 1), Some(0.5));
    }

    #[test]
    fn mutual_echo_gives_two_edges() {
        let p = PosTagger::default();
        let t = transcript(&[
            ("A", "cards"),
            ("B", "cards"),
            ("A", "cards"),
            ("B", "the"),
            ("A", "the"),
            ("B", "the"),
            ("A", "the"),
            ("B", "uh"),
        ]);
        // (x=A,y=B): pairs (0,1)(2,3)(4,5)(6,7); trig NN at 0,2; echo at 1 only;
        //   Ent = 1/2 - 1/4 = 0.25, edge B->A.
        // (x=B,y=A): pairs (1,2)(3,4)(5,6); trig NN at 1, echoed at 2;
        //   Ent = 1/1 - 1/3, edge A->B.
        let g = build_graph(&t, &p).unwrap();
        assert_eq!(g.edges().len(), 2);
        let w = |from: &str, to: &str| g.weight(g.index_of(from).unwrap(), g.index_of(to).unwrap());
        assert_eq!(w("B", "A"), Some(0.25));
        assert_eq!(w("A", "B"), Some(1.0 - 1.0 / 3.0));
    }

    #[test]
    fn entrainment_c_matches_recount() {
        // Brute force straight from text for a small irregular transcript.
        let t = transcript(&[
            ("A", "we should trade two cards"),
            ("B", "yes we trade"),
            ("C", "maybe"),
            ("A", "and then the red city"),
            ("B", "red city quickly"),
            ("A", "into the station"),
            ("C", "two"),
            ("B", "okay"),
        ]);
        let p = PosTagger::default();
        let tt = TaggedTranscript::new(&t, &p);
        for x in ["A", "B", "C"] {
            for y in ["A", "B", "C"] {
                if x == y {
                    continue;
                }
                for c in LexCategory::TRACKED {
                    let has = |s: &str| tokenize(s).iter().any(|tok| p.tag_token(tok) == c);
                    let u = t.utterances();
                    let (mut n, mut tr, mut bo, mut re) = (0usize, 0usize, 0usize, 0usize);
                    for i in 0..u.len() - 1 {
                        if u[i].speaker == x && u[i + 1].speaker == y {
                            n += 1;
                            let a = has(&u[i].text);
                            let b = has(&u[i + 1].text);
                            tr += a as usize;
                            bo += (a && b) as usize;
                            re += b as usize;
                        }
                    }
                    let expect = (tr > 0).then(|| bo as f64 / tr as f64 - re as f64 / n as f64);
                    assert_eq!(entrainment_c(&adjacency_pairs(&tt, x, y), c), expect);
                }
            }
        }
    }

    #[test]
    fn roster_graph_and_errors() {
        let p = PosTagger::default();
        let t = transcript(&[("A", "x"), ("B", "y")]);
        let nodes = vec!["A".to_string(), "B".to_string(), "C".to_string()];
        let g = build_graph_for(&t, &nodes, &p).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(
            build_graph_for(&t, &nodes[..1], &p).unwrap_err(),
            EntrainmentError::UnknownSpeaker("B".into())
        );
    }

    #[test]
    fn bins_and_tokens() {
        assert_eq!(bin(0.0), 0);
        assert_eq!(bin(0.0999), 0);
        assert_eq!(bin(0.1), 1);
        assert_eq!(bin(0.95), 9);
        assert_eq!(bin(1.0), 9);
        assert_eq!(bin(-0.3), 0);
        let v = KernelVector {
            pagerank: 0.5,
            betweenness: 0.0,
            closeness: 1.0,
            degree: 0.25,
            in_degree: 0.33,
            katz: 1.5,
        };
        let s = KatzScaling { min: 1.0, max: 2.0 };
        assert_eq!(
            entrainment_tokens(&v, &s),
            ["k0_b5", "k1_b0", "k2_b9", "k3_b2", "k4_b3", "k5_b5"]
        );
        assert_eq!(KatzScaling::fit(&[v, v]).scale(1.5), 0.0);
    }
}
