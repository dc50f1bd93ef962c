//! Paragraph vectors (PV-DM and PV-DBOW) trained with negative sampling.
//!
//! PV-DM averages the document vector with the input vectors of a symmetric
//! context window and scores the centre token against the output matrix;
//! PV-DBOW scores every token from the document vector alone. Both minimise
//!
//! ```text
//! -ln s(o_t . h) - sum_k ln s(-o_k . h)
//! ```
//!
//! over the target `t` and sampled negatives `k`, with `s` the logistic
//! function, by plain SGD whose rate decays linearly to 1e-4 of its start.

mod train;
mod vocab;

use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use train::{infer_vector, loss_and_grad, train, Example, Gradients, Inferred};
pub use vocab::{build_vocab, Vocabulary, SAMPLING_POWER};

use crate::par::Execution;

/// A featurized dialogue.
pub type TokenSequence = Vec<String>;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("no documents to train on")]
    EmptyCorpus,
    #[error("vocabulary is empty after min_count pruning")]
    EmptyVocabulary,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite parameter after epoch {epoch}")]
    NonFinite { epoch: usize },
    #[error("{0}")]
    Io(String),
    #[error("malformed model or embedding file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    PvDm,
    PvDbow,
}

impl FromStr for Mode {
    type Err = EmbeddingError;

    fn from_str(s: &str) -> Result<Self, EmbeddingError> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "pvdm" | "dm" => Ok(Mode::PvDm),
            "pvdbow" | "dbow" => Ok(Mode::PvDbow),
            _ => Err(EmbeddingError::InvalidConfig(format!("unknown mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Doc2VecConfig {
    pub dim: usize,
    /// Tokens on each side of the target (PV-DM).
    pub window: usize,
    pub epochs: usize,
    /// Negative samples per target.
    pub negative: usize,
    pub initial_lr: f64,
    pub min_count: u64,
    pub mode: Mode,
    pub seed: u64,
    /// Parallel mode updates shared rows without locks and is not
    /// reproducible run to run.
    pub execution: Execution,
}

impl Default for Doc2VecConfig {
    fn default() -> Self {
        Doc2VecConfig {
            dim: 100,
            window: 10,
            epochs: 5,
            negative: 5,
            initial_lr: 0.025,
            min_count: 1,
            mode: Mode::PvDm,
            seed: 1,
            execution: Execution::Sequential,
        }
    }
}

impl Doc2VecConfig {
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        let bad = |m: &str| Err(EmbeddingError::InvalidConfig(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be >= 1");
        }
        if self.window == 0 {
            return bad("window must be >= 1");
        }
        if self.negative == 0 {
            return bad("negative must be >= 1");
        }
        if !(self.initial_lr.is_finite() && self.initial_lr > 0.0) {
            return bad("initial_lr must be positive");
        }
        Ok(())
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Doc2VecModel {
    format_version: u32,
    pub config: Doc2VecConfig,
    pub vocab: Vocabulary,
    /// Input vectors, one row per vocabulary entry.
    pub words: Matrix,
    /// One row per training document.
    pub docs: Matrix,
    /// Output (negative-sampling) vectors, one row per vocabulary entry.
    pub output: Matrix,
    /// Mean per-example loss of each training epoch.
    pub epoch_losses: Vec<f64>,
}

impl Doc2VecModel {
    pub(crate) fn new(config: Doc2VecConfig, vocab: Vocabulary, words: Matrix, docs: Matrix, output: Matrix) -> Self {
        Doc2VecModel {
            format_version: MODEL_FORMAT_VERSION,
            config,
            vocab,
            words,
            docs,
            output,
            epoch_losses: Vec::new(),
        }
    }

    pub fn doc_vector(&self, i: usize) -> &[f64] {
        self.docs.row(i)
    }

    pub fn doc_vectors(&self) -> Vec<Vec<f64>> {
        self.docs.to_rows()
    }

    pub fn is_finite(&self) -> bool {
        self.words.is_finite() && self.docs.is_finite() && self.output.is_finite()
    }

    pub fn save<W: Write>(&self, w: W) -> Result<(), EmbeddingError> {
        serde_json::to_writer(w, self).map_err(|e| EmbeddingError::Io(e.to_string()))
    }

    pub fn load<R: Read>(r: R) -> Result<Self, EmbeddingError> {
        let mut m: Doc2VecModel = serde_json::from_reader(r).map_err(|e| EmbeddingError::Format(e.to_string()))?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(EmbeddingError::Format(format!(
                "unsupported model version {}",
                m.format_version
            )));
        }
        let (v, d) = (m.vocab.len(), m.config.dim);
        let shapes_ok = m.words.rows == v
            && m.output.rows == v
            && m.words.cols == d
            && m.output.cols == d
            && m.docs.cols == d
            && m.words.data.len() == v * d
            && m.output.data.len() == v * d
            && m.docs.data.len() == m.docs.rows * d;
        if !shapes_ok {
            return Err(EmbeddingError::Format("matrix shapes do not match config/vocabulary".into()));
        }
        m.vocab.rebuild();
        Ok(m)
    }

    pub fn save_file(&self, path: impl AsRef<Path>) -> Result<(), EmbeddingError> {
        let f = std::fs::File::create(path.as_ref()).map_err(|e| EmbeddingError::Io(e.to_string()))?;
        self.save(std::io::BufWriter::new(f))
    }

    pub fn load_file(path: impl AsRef<Path>) -> Result<Self, EmbeddingError> {
        let f = std::fs::File::open(path.as_ref()).map_err(|e| EmbeddingError::Io(e.to_string()))?;
        Doc2VecModel::load(std::io::BufReader::new(f))
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// One embedded document with its identity.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRow {
    pub team_id: String,
    pub session_id: String,
    pub vector: Vec<f64>,
}

/// CSV with header `team_id,session_id,v_0,...,v_{dim-1}`.
pub fn write_embeddings_csv<W: Write>(w: W, rows: &[EmbeddingRow]) -> Result<(), EmbeddingError> {
    let dim = rows.first().map_or(0, |r| r.vector.len());
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["team_id".to_string(), "session_id".to_string()];
    header.extend((0..dim).map(|i| format!("v_{i}")));
    let io = |e: csv::Error| EmbeddingError::Io(e.to_string());
    out.write_record(&header).map_err(io)?;
    for r in rows {
        if r.vector.len() != dim {
            return Err(EmbeddingError::Format("rows have different dimensions".into()));
        }
        let mut rec = vec![r.team_id.clone(), r.session_id.clone()];
        rec.extend(r.vector.iter().map(|v| v.to_string()));
        out.write_record(&rec).map_err(io)?;
    }
    out.flush().map_err(|e| EmbeddingError::Io(e.to_string()))
}

pub fn read_embeddings_csv<R: Read>(r: R) -> Result<Vec<EmbeddingRow>, EmbeddingError> {
    let mut rdr = csv::Reader::from_reader(r);
    let fmt = |e: csv::Error| EmbeddingError::Format(e.to_string());
    let header = rdr.headers().map_err(fmt)?.clone();
    if header.len() < 2 || &header[0] != "team_id" || &header[1] != "session_id" {
        return Err(EmbeddingError::Format("expected header team_id,session_id,v_0,...".into()));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(fmt)?;
        let vector = rec
            .iter()
            .skip(2)
            .map(|s| s.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| EmbeddingError::Format(format!("row {}: {e}", i + 2)))?;
        rows.push(EmbeddingRow {
            team_id: rec[0].to_string(),
            session_id: rec[1].to_string(),
            vector,
        });
    }
    Ok(rows)
}
