//! Team-conflict prediction from multiparty dialogue transcripts.
//!
//! A transcript is turned into one of three token sequences (dialogue acts,
//! quantized sentiment polarities, or binned entrainment-graph centralities),
//! the sequences are embedded with a paragraph-vector model, and the resulting
//! team vectors are classified into high/low conflict with a linear model.
//!
//! Per-team featurization and repeated evaluation runs are data-parallel when
//! the `parallel` feature (on by default) is enabled; every parallel path has
//! a sequential counterpart selected through [`par::Execution`].

pub mod corpus;
pub mod embedding;
pub mod entrainment;
pub mod lexical;
pub mod models;
pub mod par;
pub mod pipeline;
pub mod project;
pub mod seed;
pub mod stats;
pub mod synth;

pub use corpus::{ConflictLabel, ConflictScore, Phase, Transcript, Utterance};
pub use embedding::{Doc2VecConfig, Doc2VecModel, TokenSequence};
pub use pipeline::{EvalReport, PipelineConfig};
