//! End-to-end orchestration: featurize every (feature, phase) cell, embed,
//! cross-validate, and collect repeated-run accuracy distributions.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{binarize_outcomes, load_transcripts, CorpusError, Format, Phase, Threshold, Transcript};
use crate::embedding::{self, Doc2VecConfig, EmbeddingError, EmbeddingRow, Mode, TokenSequence};
use crate::entrainment::{
    build_graph_for, entrainment_tokens, team_vector, EntrainmentError, EntrainmentGraph, KatzScaling, KernelVector,
};
use crate::lexical::{
    da_sequence, sentiment_sequence, DaClassifier, DialogueActTagger, LexicalError, PosTagger, PreTagged,
    SentimentLexicon, TagInventory,
};
use crate::models::{self, CvConfig, EvalRun, Feature, ModelError, ModelKind, TrainConfig};
use crate::par::Execution;
use crate::seed;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Lexical(#[from] LexicalError),
    #[error("{key}: {source}")]
    Entrainment {
        key: String,
        #[source]
        source: EntrainmentError,
    },
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error("transcript {0} has no process_conflict_z outcome")]
    MissingOutcome(String),
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;

fn io_err(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Flat run configuration; every key is optional and unknown keys are
/// rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Transcript file (`.jsonl` or `.csv`).
    pub input: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Trained dialogue-act classifier; without one, utterances must carry `da`.
    pub da_model: Option<PathBuf>,
    pub tag_inventory: Option<PathBuf>,
    pub sentiment_lexicon: Option<PathBuf>,
    pub features: Vec<Feature>,
    pub phases: Vec<Phase>,
    pub threshold: Threshold,

    pub dim: usize,
    pub window: usize,
    pub doc2vec_epochs: usize,
    pub negative: usize,
    pub learning_rate: f64,
    pub min_count: u64,
    pub mode: Mode,

    pub classifier: ModelKind,
    pub lambda: f64,
    pub classifier_epochs: usize,
    pub logreg_learning_rate: f64,
    pub folds: usize,
    pub leave_one_out: bool,
    pub standardize: bool,

    /// Repeated evaluations per cell, each with its own derived seed.
    pub runs: usize,
    pub seed: u64,
    /// Spreads teams and runs over threads; results are identical either way.
    pub execution: Execution,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let d2v = Doc2VecConfig::default();
        let clf = TrainConfig::default();
        let cv = CvConfig::default();
        PipelineConfig {
            input: None,
            output_dir: PathBuf::from("report"),
            da_model: None,
            tag_inventory: None,
            sentiment_lexicon: None,
            features: Feature::ALL.to_vec(),
            phases: Phase::ALL.to_vec(),
            threshold: Threshold::Median,
            dim: d2v.dim,
            window: d2v.window,
            doc2vec_epochs: d2v.epochs,
            negative: d2v.negative,
            learning_rate: d2v.initial_lr,
            min_count: d2v.min_count,
            mode: d2v.mode,
            classifier: cv.kind,
            lambda: clf.lambda,
            classifier_epochs: clf.epochs,
            logreg_learning_rate: clf.learning_rate,
            folds: cv.k,
            leave_one_out: cv.leave_one_out,
            standardize: cv.standardize,
            runs: 30,
            seed: 0,
            execution: Execution::Parallel,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(src: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(src).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let src = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_toml(&src)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_string()));
        if self.features.is_empty() || self.phases.is_empty() {
            return bad("at least one feature and one phase are required");
        }
        let mut f = self.features.clone();
        f.sort();
        f.dedup();
        let mut p = self.phases.clone();
        p.sort();
        p.dedup();
        if f.len() != self.features.len() || p.len() != self.phases.len() {
            return bad("features and phases must not repeat");
        }
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if !self.leave_one_out && self.folds < 2 {
            return bad("folds must be at least 2");
        }
        self.doc2vec_config(0).validate()?;
        self.train_config(0).validate()?;
        Ok(())
    }

    pub fn doc2vec_config(&self, seed_: u64) -> Doc2VecConfig {
        Doc2VecConfig {
            dim: self.dim,
            window: self.window,
            epochs: self.doc2vec_epochs,
            negative: self.negative,
            initial_lr: self.learning_rate,
            min_count: self.min_count,
            mode: self.mode,
            seed: seed_,
            execution: Execution::Sequential,
        }
    }

    pub fn train_config(&self, seed_: u64) -> TrainConfig {
        TrainConfig {
            lambda: self.lambda,
            epochs: self.classifier_epochs,
            learning_rate: self.logreg_learning_rate,
            seed: seed_,
        }
    }

    pub fn cv_config(&self) -> CvConfig {
        CvConfig {
            k: self.folds,
            leave_one_out: self.leave_one_out,
            standardize: self.standardize,
            kind: self.classifier,
        }
    }
}

pub enum DaSource {
    PreTagged(PreTagged),
    Model(DaClassifier),
}

impl DaSource {
    pub fn tagger(&self) -> &dyn DialogueActTagger {
        match self {
            DaSource::PreTagged(p) => p,
            DaSource::Model(m) => m,
        }
    }
}

/// Lexical resources shared by every featurization.
pub struct Resources {
    pub pos: PosTagger,
    pub lexicon: SentimentLexicon,
    pub da: DaSource,
}

impl Default for Resources {
    fn default() -> Self {
        Resources {
            pos: PosTagger::default(),
            lexicon: SentimentLexicon::default(),
            da: DaSource::PreTagged(PreTagged::default()),
        }
    }
}

impl Resources {
    pub fn from_config(cfg: &PipelineConfig) -> Result<Self> {
        let lexicon = match &cfg.sentiment_lexicon {
            Some(p) => SentimentLexicon::load(p)?,
            None => SentimentLexicon::default(),
        };
        let da = match (&cfg.da_model, &cfg.tag_inventory) {
            (Some(m), _) => DaSource::Model(DaClassifier::load(m)?),
            (None, Some(inv)) => DaSource::PreTagged(PreTagged {
                inventory: TagInventory::load(inv)?,
            }),
            (None, None) => DaSource::PreTagged(PreTagged::default()),
        };
        Ok(Resources {
            pos: PosTagger::default(),
            lexicon,
            da,
        })
    }
}

fn roster(t: &Transcript) -> Vec<String> {
    t.speakers().into_iter().map(str::to_string).collect()
}

/// Entrainment graph of one phase over the whole dialogue's speakers.
pub fn phase_graph(t: &Transcript, phase: Phase, pos: &PosTagger) -> Result<EntrainmentGraph> {
    let part = phase.select(t)?;
    build_graph_for(&part, &roster(t), pos).map_err(|source| PipelineError::Entrainment { key: t.key(), source })
}

pub fn entrainment_graphs(
    transcripts: &[Transcript],
    phase: Phase,
    res: &Resources,
    execution: Execution,
) -> Result<Vec<EntrainmentGraph>> {
    execution.try_map(transcripts, |t| phase_graph(t, phase, &res.pos))
}

/// One token sequence per transcript, in input order.
pub fn featurize(
    transcripts: &[Transcript],
    feature: Feature,
    phase: Phase,
    res: &Resources,
    execution: Execution,
) -> Result<Vec<TokenSequence>> {
    match feature {
        Feature::Da => execution.try_map(transcripts, |t| Ok(da_sequence(&phase.select(t)?, res.da.tagger())?)),
        Feature::Sentiment => {
            execution.try_map(transcripts, |t| Ok(sentiment_sequence(&phase.select(t)?, &res.lexicon)))
        }
        Feature::Entrainment => {
            let vectors: Vec<KernelVector> = execution.try_map(transcripts, |t| {
                phase_graph(t, phase, &res.pos).map(|g| team_vector(&g))
            })?;
            // Katz is unbounded, so it is rescaled against this corpus before binning.
            let scaling = KatzScaling::fit(&vectors);
            Ok(vectors.iter().map(|v| entrainment_tokens(v, &scaling)).collect())
        }
    }
}

/// `true` marks the high-conflict (positive) class.
pub fn labels(transcripts: &[Transcript], threshold: Threshold) -> Result<Vec<bool>> {
    let scores = transcripts
        .iter()
        .map(|t| t.outcome().ok_or_else(|| PipelineError::MissingOutcome(t.key())))
        .collect::<Result<Vec<_>>>()?;
    Ok(binarize_outcomes(&scores, threshold)?
        .into_iter()
        .map(|l| l.is_high_conflict())
        .collect())
}

/// Seed for one cell of one run, keyed by names so that requesting a
/// subset of cells reproduces the same numbers.
fn cell_seed(run_seed: u64, stage: &str, feature: Feature, phase: Phase) -> u64 {
    seed::derive(run_seed, &format!("{stage}/{feature}/{phase}"), 0)
}

/// Trains embeddings for `docs` and returns the cross-validated accuracy
/// together with the document vectors.
pub fn evaluate_cell(
    cfg: &PipelineConfig,
    docs: &[TokenSequence],
    y: &[bool],
    feature: Feature,
    phase: Phase,
    run_seed: u64,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let model = embedding::train(docs, &cfg.doc2vec_config(cell_seed(run_seed, "doc2vec", feature, phase)))?;
    let x = model.doc_vectors();
    let train = cfg.train_config(cell_seed(run_seed, "classifier", feature, phase));
    let cv = models::cross_validate(&x, y, &cfg.cv_config(), &train)?;
    Ok((cv.accuracy, x))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub feature: Feature,
    pub phase: Phase,
    /// Mean accuracy over runs.
    pub accuracy: f64,
    /// Sample standard deviation over runs (0 for a single run).
    pub std_dev: f64,
    pub runs: Vec<EvalRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub master_seed: u64,
    pub runs: usize,
    pub documents: usize,
    pub classifier: ModelKind,
    pub features: Vec<Feature>,
    pub phases: Vec<Phase>,
    pub cells: Vec<CellResult>,
}

impl EvalReport {
    pub fn cell(&self, feature: Feature, phase: Phase) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.feature == feature && c.phase == phase)
    }

    pub fn eval_runs(&self) -> Vec<EvalRun> {
        self.cells.iter().flat_map(|c| c.runs.iter().copied()).collect()
    }

    /// Phases down, features across, mean accuracy in each cell. The first
    /// line is a `#` comment carrying the seed and run count.
    pub fn table_csv(&self) -> String {
        let mut s = format!(
            "# master_seed={} runs={} classifier={} documents={}\nphase",
            self.master_seed,
            self.runs,
            match self.classifier {
                ModelKind::Svm => "svm",
                ModelKind::LogReg => "logreg",
            },
            self.documents
        );
        for f in &self.features {
            s.push(',');
            s.push_str(f.title());
        }
        s.push('\n');
        for &p in &self.phases {
            s.push_str(p.name());
            for &f in &self.features {
                let c = self.cell(f, p).expect("every requested cell is evaluated");
                s.push_str(&format!(",{:.6}", c.accuracy));
            }
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone)]
pub struct CellEmbeddings {
    pub feature: Feature,
    pub phase: Phase,
    pub rows: Vec<EmbeddingRow>,
}

pub struct PipelineOutput {
    pub report: EvalReport,
    /// Document vectors of the first run, one set per cell.
    pub embeddings: Vec<CellEmbeddings>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn run_pipeline(cfg: &PipelineConfig, transcripts: &[Transcript], res: &Resources) -> Result<PipelineOutput> {
    cfg.validate()?;
    let y = labels(transcripts, cfg.threshold)?;
    let cells: Vec<(Feature, Phase)> = cfg
        .phases
        .iter()
        .flat_map(|&p| cfg.features.iter().map(move |&f| (f, p)))
        .collect();
    let mut docs = Vec::with_capacity(cells.len());
    for &(f, p) in &cells {
        docs.push(featurize(transcripts, f, p, res, cfg.execution)?);
    }

    let seeds = models::run_seeds(cfg.seed, cfg.runs);
    let per_run: Vec<Vec<(f64, Vec<Vec<f64>>)>> = cfg.execution.try_map(&seeds, |&s| {
        cells
            .iter()
            .zip(&docs)
            .map(|(&(f, p), d)| evaluate_cell(cfg, d, &y, f, p, s))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut results = Vec::with_capacity(cells.len());
    let mut embeddings = Vec::with_capacity(cells.len());
    for (ci, &(feature, phase)) in cells.iter().enumerate() {
        let runs: Vec<EvalRun> = seeds
            .iter()
            .zip(&per_run)
            .map(|(&seed, r)| EvalRun {
                feature,
                phase,
                seed,
                accuracy: r[ci].0,
            })
            .collect();
        let accs: Vec<f64> = runs.iter().map(|r| r.accuracy).collect();
        let (accuracy, std_dev) = mean_std(&accs);
        results.push(CellResult {
            feature,
            phase,
            accuracy,
            std_dev,
            runs,
        });
        let rows = transcripts
            .iter()
            .zip(&per_run[0][ci].1)
            .map(|(t, v)| EmbeddingRow {
                team_id: t.team_id().to_string(),
                session_id: t.session_id().to_string(),
                vector: v.clone(),
            })
            .collect();
        embeddings.push(CellEmbeddings { feature, phase, rows });
    }
    Ok(PipelineOutput {
        report: EvalReport {
            master_seed: cfg.seed,
            runs: cfg.runs,
            documents: transcripts.len(),
            classifier: cfg.classifier,
            features: cfg.features.clone(),
            phases: cfg.phases.clone(),
            cells: results,
        },
        embeddings,
    })
}

/// Loads the configured input and resources, then runs every cell.
pub fn run_from_config(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| PipelineError::Config("`input` is required".into()))?;
    let transcripts = load_transcripts(input, Format::from_path(input))?;
    run_pipeline(cfg, &transcripts, &Resources::from_config(cfg)?)
}

pub fn embeddings_file_name(feature: Feature, phase: Phase) -> String {
    format!("embeddings_{feature}_{phase}.csv")
}

/// Writes `report.csv`, `report.json`, `runs.csv` and one embedding CSV per
/// cell into `dir`.
pub fn write_outputs(out: &PipelineOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: Vec<u8>| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        written.push(path);
        Ok(())
    };
    put("report.csv", out.report.table_csv().into_bytes())?;
    let mut json = out.report.to_json();
    json.push('\n');
    put("report.json", json.into_bytes())?;
    let mut runs = Vec::new();
    models::write_runs_csv(&mut runs, &out.report.eval_runs())?;
    put("runs.csv", runs)?;
    for c in &out.embeddings {
        let mut buf = Vec::new();
        embedding::write_embeddings_csv(&mut buf, &c.rows)?;
        put(&embeddings_file_name(c.feature, c.phase), buf)?;
    }
    Ok(written)
}
