//! Linear classifiers over team vectors, stratified cross-validation, and
//! repeated-seed evaluation.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Phase;
use crate::par::Execution;
use crate::seed;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training data contains a single class")]
    SingleClass,
    #[error("no training examples")]
    Empty,
    #[error("example {index} has {got} features, expected {expected}")]
    DimensionMismatch { index: usize, got: usize, expected: usize },
    #[error("{0} labels for {1} examples")]
    LabelCount(usize, usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot make {k} folds from {n} examples")]
    InvalidFolds { k: usize, n: usize },
    #[error("non-finite parameters after training")]
    NonFinite,
    #[error("run table: {0}")]
    Csv(String),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Svm,
    LogReg,
}

impl FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "svm" => Ok(ModelKind::Svm),
            "logreg" | "lr" | "logistic" => Ok(ModelKind::LogReg),
            _ => Err(ModelError::InvalidConfig(format!("unknown classifier {s:?}"))),
        }
    }
}

/// Which token sequence a team vector was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Feature {
    Da,
    Sentiment,
    Entrainment,
}

impl Feature {
    pub const ALL: [Feature; 3] = [Feature::Da, Feature::Sentiment, Feature::Entrainment];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Da => "da",
            Feature::Sentiment => "sentiment",
            Feature::Entrainment => "entrainment",
        }
    }

    /// Column heading for report tables.
    pub fn title(self) -> &'static str {
        match self {
            Feature::Da => "DA",
            Feature::Sentiment => "Sentiment",
            Feature::Entrainment => "Entrainment",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "da" | "dialogue-act" | "dialogue_act" => Ok(Feature::Da),
            "sentiment" => Ok(Feature::Sentiment),
            "entrainment" => Ok(Feature::Entrainment),
            _ => Err(ModelError::InvalidConfig(format!("unknown feature {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub kind: ModelKind,
}

impl LinearModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }
}

/// True means the positive class.
pub fn predict(m: &LinearModel, x: &[f64]) -> bool {
    match m.kind {
        ModelKind::Svm => m.score(x) > 0.0,
        ModelKind::LogReg => sigmoid(m.score(x)) >= 0.5,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// L2 strength.
    pub lambda: f64,
    pub epochs: usize,
    /// Gradient-descent step for logistic regression.
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 0.01,
            epochs: 200,
            learning_rate: 0.5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(ModelError::InvalidConfig("lambda must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(ModelError::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ModelError::InvalidConfig("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn check_data(x: &[Vec<f64>], y: &[bool]) -> Result<usize> {
    if x.is_empty() {
        return Err(ModelError::Empty);
    }
    if x.len() != y.len() {
        return Err(ModelError::LabelCount(y.len(), x.len()));
    }
    let dim = x[0].len();
    if let Some((index, row)) = x.iter().enumerate().find(|(_, r)| r.len() != dim) {
        return Err(ModelError::DimensionMismatch {
            index,
            got: row.len(),
            expected: dim,
        });
    }
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(ModelError::SingleClass);
    }
    Ok(dim)
}

fn finish(weights: Vec<f64>, bias: f64, kind: ModelKind) -> Result<LinearModel> {
    if !(bias.is_finite() && weights.iter().all(|w| w.is_finite())) {
        return Err(ModelError::NonFinite);
    }
    Ok(LinearModel { weights, bias, kind })
}

/// Pegasos on the L2-regularized hinge loss. The bias is handled as an
/// extra constant feature, so it is regularized along with the weights.
pub fn train_svm(x: &[Vec<f64>], y: &[bool], config: &TrainConfig) -> Result<LinearModel> {
    config.validate()?;
    let dim = check_data(x, y)?;
    let lambda = config.lambda;
    let radius = 1.0 / lambda.sqrt();
    let mut w = vec![0.0; dim + 1];
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut rng = seed::rng(seed::derive(config.seed, "svm", 0));
    let mut t = 0u64;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let yi = if y[i] { 1.0 } else { -1.0 };
            let margin = yi * (w[..dim].iter().zip(&x[i]).map(|(a, b)| a * b).sum::<f64>() + w[dim]);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                for (wv, xv) in w.iter_mut().zip(&x[i]) {
                    *wv += eta * yi * xv;
                }
                w[dim] += eta * yi;
            }
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|v| *v *= s);
            }
        }
    }
    let bias = w.pop().expect("bias slot");
    finish(w, bias, ModelKind::Svm)
}

/// Full-batch gradient descent on mean cross-entropy plus `lambda/2 |w|^2`
/// (bias unregularized). Deterministic; the seed is unused.
pub fn train_logreg(x: &[Vec<f64>], y: &[bool], config: &TrainConfig) -> Result<LinearModel> {
    config.validate()?;
    let dim = check_data(x, y)?;
    let n = x.len() as f64;
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut gw = vec![0.0; dim];
    for _ in 0..config.epochs {
        gw.iter_mut().zip(&w).for_each(|(g, wv)| *g = config.lambda * wv);
        let mut gb = 0.0;
        for (xi, &yi) in x.iter().zip(y) {
            let z = w.iter().zip(xi).map(|(a, c)| a * c).sum::<f64>() + b;
            let r = (sigmoid(z) - if yi { 1.0 } else { 0.0 }) / n;
            for (g, v) in gw.iter_mut().zip(xi) {
                *g += r * v;
            }
            gb += r;
        }
        for (wv, g) in w.iter_mut().zip(&gw) {
            *wv -= config.learning_rate * g;
        }
        b -= config.learning_rate * gb;
    }
    finish(w, b, ModelKind::LogReg)
}

pub fn train(kind: ModelKind, x: &[Vec<f64>], y: &[bool], config: &TrainConfig) -> Result<LinearModel> {
    match kind {
        ModelKind::Svm => train_svm(x, y, config),
        ModelKind::LogReg => train_logreg(x, y, config),
    }
}

pub fn accuracy(m: &LinearModel, x: &[Vec<f64>], y: &[bool]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let hits = x.iter().zip(y).filter(|(xi, &yi)| predict(m, xi) == yi).count();
    hits as f64 / x.len() as f64
}

/// Fold id per example. Each class is shuffled separately and dealt
/// round-robin, continuing where the previous class stopped, so fold sizes
/// differ by at most one and class ratios are preserved.
pub fn stratified_folds(y: &[bool], k: usize, seed_: u64) -> Result<Vec<usize>> {
    if k < 2 || k > y.len() {
        return Err(ModelError::InvalidFolds { k, n: y.len() });
    }
    let mut rng = seed::rng(seed::derive(seed_, "folds", 0));
    let mut folds = vec![0; y.len()];
    let mut next = 0;
    for class in [false, true] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            folds[i] = next % k;
            next += 1;
        }
    }
    Ok(folds)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub k: usize,
    pub leave_one_out: bool,
    /// z-score features using training-fold statistics.
    pub standardize: bool,
    pub kind: ModelKind,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            k: 5,
            leave_one_out: false,
            standardize: true,
            kind: ModelKind::Svm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    /// Mean of the per-fold held-out accuracies.
    pub accuracy: f64,
    pub fold_accuracies: Vec<f64>,
}

struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    fn fit(rows: &[&Vec<f64>]) -> Self {
        let dim = rows[0].len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            mean.iter_mut().zip(r.iter()).for_each(|(m, v)| *m += v / n);
        }
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        let scale = var.into_iter().map(|v| if v > 0.0 { v.sqrt() } else { 1.0 }).collect();
        Standardizer { mean, scale }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

/// Held-out accuracy under stratified k-fold (or leave-one-out) CV.
/// A training split that ends up single-class predicts that class.
pub fn cross_validate(
    x: &[Vec<f64>],
    y: &[bool],
    cv: &CvConfig,
    train_cfg: &TrainConfig,
) -> Result<CvResult> {
    check_data(x, y)?;
    let (k, folds) = if cv.leave_one_out {
        (x.len(), (0..x.len()).collect())
    } else {
        (cv.k, stratified_folds(y, cv.k, train_cfg.seed)?)
    };
    let mut fold_accuracies = Vec::with_capacity(k);
    for f in 0..k {
        let train_idx: Vec<usize> = (0..x.len()).filter(|&i| folds[i] != f).collect();
        let test_idx: Vec<usize> = (0..x.len()).filter(|&i| folds[i] == f).collect();
        if test_idx.is_empty() {
            continue;
        }
        let rows: Vec<&Vec<f64>> = train_idx.iter().map(|&i| &x[i]).collect();
        let prep = cv.standardize.then(|| Standardizer::fit(&rows));
        let tx = |i: usize| match &prep {
            Some(s) => s.apply(&x[i]),
            None => x[i].clone(),
        };
        let train_x: Vec<Vec<f64>> = train_idx.iter().map(|&i| tx(i)).collect();
        let train_y: Vec<bool> = train_idx.iter().map(|&i| y[i]).collect();
        let fold_cfg = TrainConfig {
            seed: seed::derive(train_cfg.seed, "fold", f as u64),
            ..*train_cfg
        };
        let hits = match train(cv.kind, &train_x, &train_y, &fold_cfg) {
            Ok(m) => test_idx.iter().filter(|&&i| predict(&m, &tx(i)) == y[i]).count(),
            Err(ModelError::SingleClass) => test_idx.iter().filter(|&&i| y[i] == train_y[0]).count(),
            Err(e) => return Err(e),
        };
        fold_accuracies.push(hits as f64 / test_idx.len() as f64);
    }
    let accuracy = fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64;
    Ok(CvResult {
        accuracy,
        fold_accuracies,
    })
}

/// One point of a repeated-evaluation distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRun {
    pub feature: Feature,
    pub phase: Phase,
    pub seed: u64,
    pub accuracy: f64,
}

/// Per-run seeds fanned out from `master`.
pub fn run_seeds(master: u64, n_runs: usize) -> Vec<u64> {
    (0..n_runs as u64).map(|i| seed::derive(master, "run", i)).collect()
}

/// Evaluates `run` once per derived seed and returns `(seed, accuracy)`
/// in run order. Runs are independent, so they may execute in parallel.
pub fn repeated_eval<E, F>(master: u64, n_runs: usize, execution: Execution, run: F) -> Result<Vec<(u64, f64)>, E>
where
    E: Send,
    F: Fn(u64) -> Result<f64, E> + Sync + Send,
{
    let seeds = run_seeds(master, n_runs);
    execution.try_map(&seeds, |&s| run(s).map(|acc| (s, acc)))
}

pub fn write_runs_csv<W: Write>(w: W, runs: &[EvalRun]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let err = |e: csv::Error| ModelError::Csv(e.to_string());
    wr.write_record(["feature", "phase", "seed", "accuracy"]).map_err(err)?;
    for r in runs {
        wr.write_record([
            r.feature.name().to_string(),
            r.phase.name().to_string(),
            r.seed.to_string(),
            format!("{}", r.accuracy),
        ])
        .map_err(err)?;
    }
    wr.flush().map_err(|e| ModelError::Csv(e.to_string()))
}

pub fn read_runs_csv<R: Read>(r: R) -> Result<Vec<EvalRun>> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers().map_err(|e| ModelError::Csv(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ModelError::Csv(format!("missing column {name:?}")))
    };
    let (cf, cp, cs, ca) = (col("feature")?, col("phase")?, col("seed")?, col("accuracy")?);
    let mut runs = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| ModelError::Csv(e.to_string()))?;
        let line = i + 2;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let bad = |what: &str| ModelError::Csv(format!("line {line}: bad {what}"));
        let accuracy: f64 = field(ca).parse().map_err(|_| bad("accuracy"))?;
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(bad("accuracy"));
        }
        runs.push(EvalRun {
            feature: field(cf).parse().map_err(|_| bad("feature"))?,
            phase: field(cp).parse().map_err(|_| bad("phase"))?,
            seed: field(cs).parse().map_err(|_| bad("seed"))?,
            accuracy,
        });
    }
    Ok(runs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn blobs(n: usize, sep: f64, seed_: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut rng = seed::rng(seed_);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let pos = i % 2 == 0;
            let c = if pos { sep / 2.0 } else { -sep / 2.0 };
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            x.push(vec![c + a, b]);
            y.push(pos);
        }
        (x, y)
    }

    #[test]
    fn one_dimensional_separable() {
        let x = vec![vec![-1.0], vec![1.0]];
        for kind in [ModelKind::Svm, ModelKind::LogReg] {
            let cfg = TrainConfig::default();
            let m = train(kind, &x, &[false, true], &cfg).unwrap();
            assert!(m.weights[0] > 0.0);
            assert_eq!(accuracy(&m, &x, &[false, true]), 1.0);
            let flipped = train(kind, &x, &[true, false], &cfg).unwrap();
            assert!(flipped.weights[0] < 0.0);
        }
    }

    #[test]
    fn errors() {
        let cfg = TrainConfig::default();
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(train_svm(&x, &[true, true], &cfg), Err(ModelError::SingleClass)));
        assert!(matches!(train_svm(&[], &[], &cfg), Err(ModelError::Empty)));
        assert!(matches!(
            train_logreg(&[vec![0.0], vec![1.0, 2.0]], &[true, false], &cfg),
            Err(ModelError::DimensionMismatch { index: 1, .. })
        ));
        let bad = TrainConfig { lambda: 0.0, ..cfg };
        assert!(matches!(train_svm(&x, &[true, false], &bad), Err(ModelError::InvalidConfig(_))));
        assert!(matches!(stratified_folds(&[true, false], 3, 0), Err(ModelError::InvalidFolds { .. })));
    }

    #[test]
    fn separated_blobs_cross_validate() {
        let (x, y) = blobs(20, 4.0, 3);
        for kind in [ModelKind::Svm, ModelKind::LogReg] {
            let cv = CvConfig {
                kind,
                ..Default::default()
            };
            let r = cross_validate(&x, &y, &cv, &TrainConfig::default()).unwrap();
            assert!(r.accuracy >= 0.95, "{kind:?}: {r:?}");
            assert_eq!(r.fold_accuracies.len(), 5);
            let loo = CvConfig {
                leave_one_out: true,
                ..cv
            };
            assert!(cross_validate(&x, &y, &loo, &TrainConfig::default()).unwrap().accuracy >= 0.9);
        }
    }

    #[test]
    fn majority_predictor_on_balanced_labels() {
        let y: Vec<bool> = (0..40).map(|i| i % 2 == 0).collect();
        let always_true = LinearModel {
            weights: vec![0.0],
            bias: 1.0,
            kind: ModelKind::Svm,
        };
        let x = vec![vec![0.0]; 40];
        assert_eq!(accuracy(&always_true, &x, &y), 0.5);
        let (bx, by) = blobs(40, 6.0, 9);
        for kind in [ModelKind::Svm, ModelKind::LogReg] {
            let m = train(kind, &bx, &by, &TrainConfig::default()).unwrap();
            assert!(accuracy(&m, &bx, &by) > 0.5);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let (x, y) = blobs(30, 1.0, 5);
        let cfg = TrainConfig {
            seed: 17,
            ..Default::default()
        };
        assert_eq!(train_svm(&x, &y, &cfg).unwrap(), train_svm(&x, &y, &cfg).unwrap());
    }

    #[test]
    fn repeated_eval_modes_agree() {
        let (x, y) = blobs(30, 2.0, 5);
        let run = |s: u64| -> Result<f64> {
            let cfg = TrainConfig {
                seed: s,
                ..Default::default()
            };
            Ok(cross_validate(&x, &y, &CvConfig::default(), &cfg)?.accuracy)
        };
        let a = repeated_eval(1, 6, Execution::Sequential, run).unwrap();
        let b = repeated_eval(1, 6, Execution::Parallel, run).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 6);
        assert_eq!(a.iter().map(|r| r.0).collect::<Vec<_>>(), run_seeds(1, 6));
    }

    #[test]
    fn runs_csv_round_trip() {
        let runs = vec![
            EvalRun {
                feature: Feature::Da,
                phase: Phase::Initial,
                seed: 7,
                accuracy: 0.75,
            },
            EvalRun {
                feature: Feature::Entrainment,
                phase: Phase::Whole,
                seed: u64::MAX,
                accuracy: 1.0 / 3.0,
            },
        ];
        let mut buf = Vec::new();
        write_runs_csv(&mut buf, &runs).unwrap();
        assert!(buf.starts_with(b"feature,phase,seed,accuracy\n"));
        assert_eq!(read_runs_csv(buf.as_slice()).unwrap(), runs);
        assert!(read_runs_csv("feature,phase,seed,accuracy\nda,whole,1,1.5\n".as_bytes()).is_err());
        assert!(read_runs_csv("feature,phase,seed\nda,whole,1\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition_and_stratify(labels in prop::collection::vec(any::<bool>(), 5..60), k in 2usize..6, s in any::<u64>()) {
            let folds = stratified_folds(&labels, k, s).unwrap();
            prop_assert_eq!(folds.len(), labels.len());
            let mut sizes = vec![0usize; k];
            for &f in &folds {
                prop_assert!(f < k);
                sizes[f] += 1;
            }
            let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
            prop_assert!(hi - lo <= 1);
            // Per-class counts per fold also differ by at most one.
            for class in [false, true] {
                let mut c = vec![0usize; k];
                for (i, &f) in folds.iter().enumerate() {
                    if labels[i] == class { c[f] += 1; }
                }
                prop_assert!(c.iter().max().unwrap() - c.iter().min().unwrap() <= 1);
            }
        }

        #[test]
        fn folds_depend_only_on_labels_and_seed(labels in prop::collection::vec(any::<bool>(), 5..40), s in any::<u64>()) {
            prop_assert_eq!(stratified_folds(&labels, 5, s).unwrap(), stratified_folds(&labels, 5, s).unwrap());
        }

        #[test]
        fn svm_sign_scale_invariant(w in prop::collection::vec(-5.0f64..5.0, 3), b in -5.0f64..5.0, c in 0.01f64..100.0, x in prop::collection::vec(-5.0f64..5.0, 3)) {
            let m = LinearModel { weights: w.clone(), bias: b, kind: ModelKind::Svm };
            let scaled = LinearModel { weights: w.iter().map(|v| v * c).collect(), bias: b * c, kind: ModelKind::Svm };
            let s = m.score(&x);
            prop_assume!(s.abs() > 1e-9);
            prop_assert_eq!(predict(&m, &x), predict(&scaled, &x));
        }
    }

    #[test]
    fn feature_and_kind_parse() {
        assert_eq!("DA".parse::<Feature>().unwrap(), Feature::Da);
        assert_eq!("logreg".parse::<ModelKind>().unwrap(), ModelKind::LogReg);
        assert!("tsne".parse::<Feature>().is_err());
    }
}
