use std::collections::BTreeMap;
#[cfg(feature = "parallel")]
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Doc2VecConfig, Doc2VecModel, EmbeddingError, Matrix, Mode, TokenSequence, Vocabulary};
use crate::seed;

/// Final learning rate as a fraction of the initial one.
const MIN_LR_FRACTION: f64 = 1e-4;

/// One training instance: `h = mean(doc, context...)` scores `target`
/// against `negatives`. PV-DBOW instances have an empty context.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub doc: usize,
    pub context: Vec<usize>,
    pub target: usize,
    pub negatives: Vec<usize>,
}

/// Sparse gradients keyed by row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradients {
    pub words: BTreeMap<usize, Vec<f64>>,
    pub docs: BTreeMap<usize, Vec<f64>>,
    pub output: BTreeMap<usize, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inferred {
    pub vector: Vec<f64>,
    /// Set when the document had no in-vocabulary token; `vector` is zero.
    pub all_oov: bool,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Negative-sampling loss and its gradient over a microbatch, summed.
pub fn loss_and_grad(model: &Doc2VecModel, batch: &[Example]) -> (f64, Gradients) {
    let dim = model.config.dim;
    let mut grads = Gradients::default();
    let mut loss = 0.0;
    let mut h = vec![0.0; dim];
    for ex in batch {
        let count = (1 + ex.context.len()) as f64;
        h.copy_from_slice(model.docs.row(ex.doc));
        for &c in &ex.context {
            for (hv, wv) in h.iter_mut().zip(model.words.row(c)) {
                *hv += wv;
            }
        }
        h.iter_mut().for_each(|v| *v /= count);

        let mut dh = vec![0.0; dim];
        let targets = std::iter::once((ex.target, 1.0)).chain(ex.negatives.iter().map(|&n| (n, 0.0)));
        for (word, label) in targets {
            let o = model.output.row(word);
            let f = dot(o, &h);
            loss += if label == 1.0 { softplus(-f) } else { softplus(f) };
            let g = sigmoid(f) - label;
            let go = grads.output.entry(word).or_insert_with(|| vec![0.0; dim]);
            for k in 0..dim {
                go[k] += g * h[k];
                dh[k] += g * o[k];
            }
        }
        let gd = grads.docs.entry(ex.doc).or_insert_with(|| vec![0.0; dim]);
        for k in 0..dim {
            gd[k] += dh[k] / count;
        }
        for &c in &ex.context {
            let gw = grads.words.entry(c).or_insert_with(|| vec![0.0; dim]);
            for k in 0..dim {
                gw[k] += dh[k] / count;
            }
        }
    }
    (loss, grads)
}

/// Row access for SGD; lets the same step run on owned matrices, on
/// lock-free shared storage, and on frozen matrices.
trait RowStore {
    fn read_row(&self, i: usize, out: &mut [f64]);
    /// `row_i += scale * x`
    fn add_row(&mut self, i: usize, scale: f64, x: &[f64]);
}

impl RowStore for Matrix {
    fn read_row(&self, i: usize, out: &mut [f64]) {
        out.copy_from_slice(self.row(i));
    }

    fn add_row(&mut self, i: usize, scale: f64, x: &[f64]) {
        for (r, v) in self.row_mut(i).iter_mut().zip(x) {
            *r += scale * v;
        }
    }
}

struct Frozen<'a>(&'a Matrix);

impl RowStore for Frozen<'_> {
    fn read_row(&self, i: usize, out: &mut [f64]) {
        out.copy_from_slice(self.0.row(i));
    }

    fn add_row(&mut self, _: usize, _: f64, _: &[f64]) {}
}

#[cfg(feature = "parallel")]
/// f64 bits in relaxed atomics. Concurrent read-modify-write of a row may
/// lose updates, which parallel training accepts.
struct SharedMatrix {
    cols: usize,
    data: Vec<AtomicU64>,
}

#[cfg(feature = "parallel")]
impl SharedMatrix {
    fn from_matrix(m: &Matrix) -> Self {
        SharedMatrix {
            cols: m.cols(),
            data: m.as_slice().iter().map(|v| AtomicU64::new(v.to_bits())).collect(),
        }
    }

    fn write_back(&self, m: &mut Matrix) {
        for (dst, src) in m.as_mut_slice().iter_mut().zip(&self.data) {
            *dst = f64::from_bits(src.load(Ordering::Relaxed));
        }
    }

    fn handle(&self) -> SharedRows<'_> {
        SharedRows(self)
    }
}

#[cfg(feature = "parallel")]
#[derive(Clone, Copy)]
struct SharedRows<'a>(&'a SharedMatrix);

#[cfg(feature = "parallel")]
impl RowStore for SharedRows<'_> {
    fn read_row(&self, i: usize, out: &mut [f64]) {
        let c = self.0.cols;
        for (o, a) in out.iter_mut().zip(&self.0.data[i * c..(i + 1) * c]) {
            *o = f64::from_bits(a.load(Ordering::Relaxed));
        }
    }

    fn add_row(&mut self, i: usize, scale: f64, x: &[f64]) {
        let c = self.0.cols;
        for (a, v) in self.0.data[i * c..(i + 1) * c].iter().zip(x) {
            let cur = f64::from_bits(a.load(Ordering::Relaxed));
            a.store((cur + scale * v).to_bits(), Ordering::Relaxed);
        }
    }
}

struct Scratch {
    h: Vec<f64>,
    row: Vec<f64>,
    neu1e: Vec<f64>,
    context: Vec<usize>,
    negatives: Vec<usize>,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        Scratch {
            h: vec![0.0; dim],
            row: vec![0.0; dim],
            neu1e: vec![0.0; dim],
            context: Vec::new(),
            negatives: Vec::new(),
        }
    }
}

/// One SGD step on `s.context`/`s.negatives`; returns the example's loss.
fn sgd_step<W: RowStore, D: RowStore, O: RowStore>(
    words: &mut W,
    docs: &mut D,
    output: &mut O,
    doc: usize,
    target: usize,
    lr: f64,
    s: &mut Scratch,
) -> f64 {
    let count = (1 + s.context.len()) as f64;
    docs.read_row(doc, &mut s.h);
    for &c in &s.context {
        words.read_row(c, &mut s.row);
        for (hv, wv) in s.h.iter_mut().zip(&s.row) {
            *hv += wv;
        }
    }
    s.h.iter_mut().for_each(|v| *v /= count);
    s.neu1e.iter_mut().for_each(|v| *v = 0.0);

    let mut loss = 0.0;
    for k in 0..=s.negatives.len() {
        let (word, label) = if k == 0 { (target, 1.0) } else { (s.negatives[k - 1], 0.0) };
        output.read_row(word, &mut s.row);
        let f = dot(&s.row, &s.h);
        loss += if label == 1.0 { softplus(-f) } else { softplus(f) };
        let g = sigmoid(f) - label;
        for (e, o) in s.neu1e.iter_mut().zip(&s.row) {
            *e += g * o;
        }
        output.add_row(word, -lr * g, &s.h);
    }
    let step = -lr / count;
    docs.add_row(doc, step, &s.neu1e);
    for &c in &s.context {
        words.add_row(c, step, &s.neu1e);
    }
    loss
}

fn fill_context(mode: Mode, window: usize, ids: &[usize], pos: usize, out: &mut Vec<usize>) {
    out.clear();
    if mode == Mode::PvDm {
        let lo = pos.saturating_sub(window);
        let hi = (pos + window + 1).min(ids.len());
        out.extend_from_slice(&ids[lo..pos]);
        out.extend_from_slice(&ids[pos + 1..hi]);
    }
}

fn fill_negatives(vocab: &Vocabulary, n: usize, target: usize, rng: &mut ChaCha8Rng, out: &mut Vec<usize>) {
    out.clear();
    for _ in 0..n {
        let w = vocab.sample(rng);
        if w != target {
            out.push(w);
        }
    }
}

fn learning_rate(initial: f64, step: usize, total: usize) -> f64 {
    let progress = if total == 0 { 0.0 } else { step as f64 / total as f64 };
    initial * (1.0 - (1.0 - MIN_LR_FRACTION) * progress.min(1.0))
}

fn uniform_init(rows: usize, dim: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut m = Matrix::zeros(rows, dim);
    let half = 0.5 / dim as f64;
    for v in m.as_mut_slice() {
        *v = rng.gen_range(-half..half);
    }
    m
}

/// Runs one pass over `docs[range]`, returning (loss sum, example count).
#[allow(clippy::too_many_arguments)]
fn run_docs<W: RowStore, D: RowStore, O: RowStore>(
    cfg: &Doc2VecConfig,
    vocab: &Vocabulary,
    encoded: &[Vec<usize>],
    doc_rows: impl Iterator<Item = usize>,
    words: &mut W,
    docs: &mut D,
    output: &mut O,
    mut step: usize,
    total: usize,
    rng: &mut ChaCha8Rng,
    s: &mut Scratch,
) -> (f64, usize) {
    let mut loss = 0.0;
    let mut n = 0;
    for d in doc_rows {
        let ids = &encoded[d];
        for pos in 0..ids.len() {
            let lr = learning_rate(cfg.initial_lr, step, total);
            fill_context(cfg.mode, cfg.window, ids, pos, &mut s.context);
            fill_negatives(vocab, cfg.negative, ids[pos], rng, &mut s.negatives);
            loss += sgd_step(words, docs, output, d, ids[pos], lr, s);
            n += 1;
            step += 1;
        }
    }
    (loss, n)
}

pub fn train(docs: &[TokenSequence], config: &Doc2VecConfig) -> Result<Doc2VecModel, EmbeddingError> {
    config.validate()?;
    if docs.is_empty() {
        return Err(EmbeddingError::EmptyCorpus);
    }
    let vocab = Vocabulary::build(docs, config.min_count)?;
    let encoded: Vec<Vec<usize>> = docs.iter().map(|d| vocab.encode(d)).collect();
    let tokens: usize = encoded.iter().map(Vec::len).sum();
    let total = tokens * config.epochs;

    let mut init_rng = seed::rng(seed::derive(config.seed, "doc2vec-init", 0));
    let words = uniform_init(vocab.len(), config.dim, &mut init_rng);
    let doc_m = uniform_init(docs.len(), config.dim, &mut init_rng);
    let output = Matrix::zeros(vocab.len(), config.dim);
    let mut model = Doc2VecModel::new(*config, vocab, words, doc_m, output);

    let mut rng = seed::rng(seed::derive(config.seed, "doc2vec-train", 0));
    let mut scratch = Scratch::new(config.dim);
    for epoch in 0..config.epochs {
        let start = epoch * tokens;
        let (loss, n) = if config.execution.is_parallel() {
            parallel_epoch(&mut model, &encoded, epoch, start, total)
        } else {
            let Doc2VecModel {
                vocab,
                words,
                docs,
                output,
                ..
            } = &mut model;
            run_docs(
                config,
                vocab,
                &encoded,
                0..encoded.len(),
                words,
                docs,
                output,
                start,
                total,
                &mut rng,
                &mut scratch,
            )
        };
        if !model.is_finite() {
            return Err(EmbeddingError::NonFinite { epoch: epoch + 1 });
        }
        model.epoch_losses.push(if n == 0 { 0.0 } else { loss / n as f64 });
    }
    Ok(model)
}

#[cfg(feature = "parallel")]
fn parallel_epoch(
    model: &mut Doc2VecModel,
    encoded: &[Vec<usize>],
    epoch: usize,
    start: usize,
    total: usize,
) -> (f64, usize) {
    use rayon::prelude::*;

    let cfg = model.config;
    let n_chunks = (rayon::current_num_threads() * 4).clamp(1, encoded.len().max(1));
    let chunk_len = encoded.len().div_ceil(n_chunks);
    let words = SharedMatrix::from_matrix(&model.words);
    let docs = SharedMatrix::from_matrix(&model.docs);
    let output = SharedMatrix::from_matrix(&model.output);
    let offsets: Vec<usize> = encoded
        .chunks(chunk_len)
        .scan(0, |acc, c| {
            let o = *acc;
            *acc += c.iter().map(Vec::len).sum::<usize>();
            Some(o)
        })
        .collect();
    let vocab = &model.vocab;
    let (loss, n) = offsets
        .par_iter()
        .enumerate()
        .map(|(ci, &offset)| {
            let lo = ci * chunk_len;
            let hi = (lo + chunk_len).min(encoded.len());
            let mut rng = seed::rng(seed::derive(cfg.seed, "doc2vec-train", ((epoch as u64) << 32) | ci as u64));
            let mut s = Scratch::new(cfg.dim);
            run_docs(
                &cfg,
                vocab,
                encoded,
                lo..hi,
                &mut words.handle(),
                &mut docs.handle(),
                &mut output.handle(),
                start + offset,
                total,
                &mut rng,
                &mut s,
            )
        })
        .reduce(|| (0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    words.write_back(&mut model.words);
    docs.write_back(&mut model.docs);
    output.write_back(&mut model.output);
    (loss, n)
}

#[cfg(not(feature = "parallel"))]
fn parallel_epoch(_: &mut Doc2VecModel, _: &[Vec<usize>], _: usize, _: usize, _: usize) -> (f64, usize) {
    unreachable!("Execution::is_parallel is false without the parallel feature")
}

/// Fits a fresh document vector with the word and output matrices frozen.
pub fn infer_vector(model: &Doc2VecModel, doc: &[String], steps: usize) -> Inferred {
    let cfg = &model.config;
    let ids = model.vocab.encode(doc);
    if ids.is_empty() {
        return Inferred {
            vector: vec![0.0; cfg.dim],
            all_oov: true,
        };
    }
    let mut rng = seed::rng(seed::derive(cfg.seed, "doc2vec-infer", 0));
    let mut d = uniform_init(1, cfg.dim, &mut rng);
    let total = steps * ids.len();
    let mut s = Scratch::new(cfg.dim);
    let one = [ids];
    for epoch in 0..steps {
        run_docs(
            cfg,
            &model.vocab,
            &one,
            std::iter::once(0),
            &mut Frozen(&model.words),
            &mut d,
            &mut Frozen(&model.output),
            epoch * one[0].len(),
            total,
            &mut rng,
            &mut s,
        );
    }
    Inferred {
        vector: d.row(0).to_vec(),
        all_oov: false,
    }
}
