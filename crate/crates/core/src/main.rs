use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use teamvec::corpus::{self, Format, Phase, Threshold, Transcript};
use teamvec::embedding::{self, EmbeddingRow, Mode, TokenSequence};
use teamvec::lexical::{self, DaTrainConfig, TagInventory};
use teamvec::models::{self, Feature, ModelKind};
use teamvec::par::Execution;
use teamvec::pipeline::{self, PipelineConfig, Resources};
use teamvec::{project, stats, synth};

/// Exit status 1.
const USAGE: u8 = 1;
/// Exit status 2.
const DATA: u8 = 2;

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

fn usage(e: impl ToString) -> Failure {
    Failure {
        code: USAGE,
        message: e.to_string(),
    }
}

fn data(e: impl ToString) -> Failure {
    Failure {
        code: DATA,
        message: e.to_string(),
    }
}

fn at(path: &Path, e: impl std::fmt::Display) -> Failure {
    data(format!("{}: {e}", path.display()))
}

type Outcome = Result<(), Failure>;

#[derive(Parser)]
#[command(name = "teamvec", version, about = "Dialogue embeddings for team-conflict prediction")]
struct Cli {
    /// Run everything on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a transcript corpus and rewrite it as JSONL.
    Ingest(IngestArgs),
    /// Turn each transcript into a token sequence for one feature and phase.
    Featurize(FeaturizeArgs),
    /// Train paragraph vectors on featurized documents.
    Embed(EmbedArgs),
    /// Cross-validate a classifier on an embedding CSV.
    Evaluate(EvaluateArgs),
    /// Run every configured (feature, phase) cell and write the report.
    Report(ReportArgs),
    /// Generate a synthetic corpus with a planted conflict signal.
    Synth(SynthArgs),
    /// Distribution tests on accuracy samples.
    Stats {
        #[command(subcommand)]
        test: StatsCommand,
    },
    /// Project an embedding CSV onto its first two principal axes.
    Project(ProjectArgs),
    /// Train the n-gram dialogue-act baseline from `text<TAB>tag` lines.
    TrainDa(TrainDaArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Jsonl,
    Csv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Jsonl => Format::Jsonl,
            FormatArg::Csv => Format::Csv,
        }
    }
}

#[derive(Args)]
struct CorpusArgs {
    /// Transcript file (.jsonl or .csv).
    #[arg(long, short)]
    input: PathBuf,
    /// Override format detection by extension.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

impl CorpusArgs {
    fn load(&self) -> Result<Vec<Transcript>, Failure> {
        let format = self.format.map_or_else(|| Format::from_path(&self.input), Format::from);
        corpus::load_transcripts(&self.input, format).map_err(|e| at(&self.input, e))
    }
}

#[derive(Args)]
struct ResourceArgs {
    /// Trained DA model JSON; without it the `da` field on each utterance is used.
    #[arg(long)]
    da_model: Option<PathBuf>,
    /// Tag inventory for pre-tagged corpora.
    #[arg(long)]
    tag_inventory: Option<PathBuf>,
    /// Sentiment lexicon TSV replacing the shipped one.
    #[arg(long)]
    lexicon: Option<PathBuf>,
}

impl ResourceArgs {
    fn load(&self) -> Result<Resources, Failure> {
        let cfg = PipelineConfig {
            da_model: self.da_model.clone(),
            tag_inventory: self.tag_inventory.clone(),
            sentiment_lexicon: self.lexicon.clone(),
            ..Default::default()
        };
        Resources::from_config(&cfg).map_err(data)
    }
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Normalized JSONL output; summary only when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FeaturizeArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    feature: Feature,
    #[arg(long, default_value = "whole")]
    phase: Phase,
    #[command(flatten)]
    resources: ResourceArgs,
    /// Token JSONL output (stdout when omitted).
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Directory for per-dialogue graph DOT and JSON files (entrainment only).
    #[arg(long)]
    graphs: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct Document {
    team_id: String,
    session_id: String,
    tokens: TokenSequence,
}

#[derive(Args)]
struct EmbedArgs {
    /// Token JSONL written by `featurize`.
    #[arg(long, short)]
    input: PathBuf,
    /// Embedding CSV output.
    #[arg(long, short)]
    output: PathBuf,
    /// Also save the trained model as JSON.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    negative: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Embedding CSV.
    #[arg(long, short)]
    embeddings: PathBuf,
    /// Corpus holding the outcome scores for each (team, session).
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    classifier: Option<ModelKind>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    threshold: Option<Threshold>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ReportArgs {
    /// TOML run configuration.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Overrides `input` from the config.
    #[arg(long, short)]
    input: Option<PathBuf>,
    /// Overrides `output_dir` from the config.
    #[arg(long, short)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, short)]
    output: PathBuf,
    /// Also write `text<TAB>tag` DA training lines.
    #[arg(long)]
    da_output: Option<PathBuf>,
    #[arg(long, default_value_t = 60)]
    teams: usize,
    #[arg(long, default_value_t = 4)]
    team_size: usize,
    #[arg(long, default_value_t = 60)]
    min_utterances: usize,
    #[arg(long, default_value_t = 120)]
    max_utterances: usize,
    #[arg(long, default_value_t = 1.0)]
    separation: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum StatsCommand {
    /// Two-sample Kolmogorov-Smirnov test.
    Ks(KsArgs),
    /// D'Agostino-Pearson normality test.
    Normality(NormalityArgs),
}

#[derive(Args)]
struct KsArgs {
    /// Runs CSV written by `report`.
    #[arg(long, requires_all = ["first", "second"], conflicts_with_all = ["a", "b"])]
    runs: Option<PathBuf>,
    /// Cell as FEATURE:PHASE.
    #[arg(long)]
    first: Option<String>,
    #[arg(long)]
    second: Option<String>,
    /// File of numbers, one per line.
    #[arg(long, requires = "b")]
    a: Option<PathBuf>,
    #[arg(long, requires = "a")]
    b: Option<PathBuf>,
}

#[derive(Args)]
struct NormalityArgs {
    #[arg(long, requires = "cell", conflicts_with = "values")]
    runs: Option<PathBuf>,
    /// Cell as FEATURE:PHASE.
    #[arg(long)]
    cell: Option<String>,
    /// File of numbers, one per line.
    #[arg(long)]
    values: Option<PathBuf>,
}

#[derive(Args)]
struct ProjectArgs {
    #[arg(long, short)]
    embeddings: PathBuf,
    /// Projection CSV output.
    #[arg(long, short)]
    output: PathBuf,
    /// Corpus used to label points high/low.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, default_value = "median")]
    threshold: Threshold,
}

#[derive(Args)]
struct TrainDaArgs {
    /// `text<TAB>tag` training lines.
    #[arg(long, short)]
    corpus: PathBuf,
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long)]
    tag_inventory: Option<PathBuf>,
    /// Fraction held out for the reported accuracy.
    #[arg(long, default_value_t = 0.1)]
    holdout: f64,
    #[arg(long, default_value_t = 15)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| at(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| at(path, e))
}

fn execution(cli_sequential: bool) -> Execution {
    if cli_sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, Failure> {
    match path {
        Some(p) => PipelineConfig::load(p).map_err(usage),
        None => Ok(PipelineConfig::default()),
    }
}

fn ingest(a: &IngestArgs) -> Outcome {
    let ts = a.corpus.load()?;
    let utterances: usize = ts.iter().map(Transcript::len).sum();
    let with_outcome = ts.iter().filter(|t| t.outcome().is_some()).count();
    if let Some(out) = &a.output {
        let mut w = create(out)?;
        corpus::write_jsonl(&mut w, &ts).map_err(|e| at(out, e))?;
        w.flush().map_err(|e| at(out, e))?;
    }
    println!(
        "transcripts={} utterances={} with_outcome={}",
        ts.len(),
        utterances,
        with_outcome
    );
    Ok(())
}

fn file_stem(t: &Transcript, phase: Phase) -> String {
    let clean = |s: &str| s.replace(|c: char| !c.is_ascii_alphanumeric() && c != '-' && c != '_', "_");
    format!("{}_{}_{}", clean(t.team_id()), clean(t.session_id()), phase)
}

fn featurize(a: &FeaturizeArgs, exec: Execution) -> Outcome {
    if a.graphs.is_some() && a.feature != Feature::Entrainment {
        return Err(usage("--graphs only applies to --feature entrainment"));
    }
    let ts = a.corpus.load()?;
    let res = a.resources.load()?;
    let docs = pipeline::featurize(&ts, a.feature, a.phase, &res, exec).map_err(data)?;
    if let Some(dir) = &a.graphs {
        fs::create_dir_all(dir).map_err(|e| at(dir, e))?;
        let graphs = pipeline::entrainment_graphs(&ts, a.phase, &res, exec).map_err(data)?;
        for (t, g) in ts.iter().zip(&graphs) {
            let stem = file_stem(t, a.phase);
            for (ext, body) in [("dot", g.to_dot()), ("json", g.to_json())] {
                let path = dir.join(format!("{stem}.{ext}"));
                fs::write(&path, body).map_err(|e| at(&path, e))?;
            }
        }
    }
    let mut out: Box<dyn Write> = match &a.output {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    for (t, tokens) in ts.iter().zip(docs) {
        let line = serde_json::to_string(&Document {
            team_id: t.team_id().to_string(),
            session_id: t.session_id().to_string(),
            tokens,
        })
        .map_err(data)?;
        match writeln!(out, "{line}") {
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => return Ok(()),
            r => r.map_err(data)?,
        }
    }
    match out.flush() {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(data(e)),
        _ => Ok(()),
    }
}

fn read_documents(path: &Path) -> Result<Vec<Document>, Failure> {
    let f = File::open(path).map_err(|e| at(path, e))?;
    let mut docs = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| at(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        docs.push(serde_json::from_str(&line).map_err(|e| at(path, format!("line {}: {e}", i + 1)))?);
    }
    if docs.is_empty() {
        return Err(at(path, "no documents"));
    }
    Ok(docs)
}

fn embed(a: &EmbedArgs) -> Outcome {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(v) = a.dim {
        cfg.dim = v;
    }
    if let Some(v) = a.window {
        cfg.window = v;
    }
    if let Some(v) = a.epochs {
        cfg.doc2vec_epochs = v;
    }
    if let Some(v) = a.negative {
        cfg.negative = v;
    }
    if let Some(v) = a.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = a.mode {
        cfg.mode = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    let d2v = cfg.doc2vec_config(cfg.seed);
    d2v.validate().map_err(usage)?;
    let docs = read_documents(&a.input)?;
    let tokens: Vec<TokenSequence> = docs.iter().map(|d| d.tokens.clone()).collect();
    let model = embedding::train(&tokens, &d2v).map_err(data)?;
    let rows: Vec<EmbeddingRow> = docs
        .iter()
        .zip(model.doc_vectors())
        .map(|(d, vector)| EmbeddingRow {
            team_id: d.team_id.clone(),
            session_id: d.session_id.clone(),
            vector,
        })
        .collect();
    let mut w = create(&a.output)?;
    embedding::write_embeddings_csv(&mut w, &rows).map_err(|e| at(&a.output, e))?;
    w.flush().map_err(|e| at(&a.output, e))?;
    if let Some(p) = &a.model {
        model.save_file(p).map_err(|e| at(p, e))?;
    }
    eprintln!(
        "documents={} vocabulary={} final_loss={:.6}",
        rows.len(),
        model.vocab.len(),
        model.epoch_losses.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn read_embeddings(path: &Path) -> Result<Vec<EmbeddingRow>, Failure> {
    let f = File::open(path).map_err(|e| at(path, e))?;
    let rows = embedding::read_embeddings_csv(BufReader::new(f)).map_err(|e| at(path, e))?;
    if rows.is_empty() {
        return Err(at(path, "no rows"));
    }
    Ok(rows)
}

/// Labels aligned with `rows` by (team, session).
fn aligned_labels(rows: &[EmbeddingRow], ts: &[Transcript], threshold: Threshold) -> Result<Vec<bool>, Failure> {
    let y = pipeline::labels(ts, threshold).map_err(data)?;
    let by_key: std::collections::HashMap<(&str, &str), bool> = ts
        .iter()
        .zip(&y)
        .map(|(t, &l)| ((t.team_id(), t.session_id()), l))
        .collect();
    rows.iter()
        .map(|r| {
            by_key
                .get(&(r.team_id.as_str(), r.session_id.as_str()))
                .copied()
                .ok_or_else(|| data(format!("no outcome for {}/{}", r.team_id, r.session_id)))
        })
        .collect()
}

fn evaluate(a: &EvaluateArgs) -> Outcome {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(v) = a.classifier {
        cfg.classifier = v;
    }
    if let Some(v) = a.folds {
        cfg.folds = v;
    }
    if let Some(v) = a.threshold {
        cfg.threshold = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    cfg.validate().map_err(usage)?;
    let rows = read_embeddings(&a.embeddings)?;
    let ts = a.corpus.load()?;
    let y = aligned_labels(&rows, &ts, cfg.threshold)?;
    let x: Vec<Vec<f64>> = rows.into_iter().map(|r| r.vector).collect();
    let cv = models::cross_validate(&x, &y, &cfg.cv_config(), &cfg.train_config(cfg.seed)).map_err(data)?;
    println!("{}", serde_json::to_string(&cv).map_err(data)?);
    Ok(())
}

fn report(a: &ReportArgs, exec_flag: bool) -> Outcome {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(v) = &a.input {
        cfg.input = Some(v.clone());
    }
    if let Some(v) = &a.output_dir {
        cfg.output_dir = v.clone();
    }
    if let Some(v) = a.runs {
        cfg.runs = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if exec_flag {
        cfg.execution = Execution::Sequential;
    }
    if a.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    cfg.validate().map_err(usage)?;
    let Some(input) = cfg.input.clone() else {
        return Err(usage("no input: pass --input or set `input` in the config"));
    };
    let ts = corpus::load_transcripts(&input, Format::from_path(&input)).map_err(|e| at(&input, e))?;
    let res = Resources::from_config(&cfg).map_err(data)?;
    let out = pipeline::run_pipeline(&cfg, &ts, &res).map_err(data)?;
    pipeline::write_outputs(&out, &cfg.output_dir).map_err(data)?;
    print!("{}", out.report.table_csv());
    Ok(())
}

fn synth_cmd(a: &SynthArgs) -> Outcome {
    let cfg = synth::SynthConfig {
        n_teams: a.teams,
        team_size: a.team_size,
        min_utterances: a.min_utterances,
        max_utterances: a.max_utterances,
        separation: a.separation,
        seed: a.seed,
    };
    cfg.validate().map_err(usage)?;
    let ts = synth::generate(&cfg).map_err(data)?;
    let mut w = create(&a.output)?;
    corpus::write_jsonl(&mut w, &ts).map_err(|e| at(&a.output, e))?;
    w.flush().map_err(|e| at(&a.output, e))?;
    if let Some(p) = &a.da_output {
        let mut w = create(p)?;
        lexical::write_da_corpus(&mut w, &synth::da_training_pairs(&ts)).map_err(|e| at(p, e))?;
        w.flush().map_err(|e| at(p, e))?;
    }
    eprintln!("teams={} separation={} seed={}", ts.len(), a.separation, a.seed);
    Ok(())
}

fn read_values(path: &Path) -> Result<Vec<f64>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| at(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|e| at(path, format!("line {}: {e}", i + 1)))
        })
        .collect()
}

fn parse_cell(s: &str) -> Result<(Feature, Phase), Failure> {
    let (f, p) = s
        .split_once(':')
        .ok_or_else(|| usage(format!("cell `{s}` is not FEATURE:PHASE")))?;
    Ok((f.parse().map_err(usage)?, p.parse().map_err(usage)?))
}

fn cell_values(runs: &Path, cell: &str) -> Result<Vec<f64>, Failure> {
    let (feature, phase) = parse_cell(cell)?;
    let f = File::open(runs).map_err(|e| at(runs, e))?;
    let all = models::read_runs_csv(BufReader::new(f)).map_err(|e| at(runs, e))?;
    let v: Vec<f64> = all
        .iter()
        .filter(|r| r.feature == feature && r.phase == phase)
        .map(|r| r.accuracy)
        .collect();
    if v.is_empty() {
        return Err(at(runs, format!("no runs for {cell}")));
    }
    Ok(v)
}

fn stats_cmd(t: &StatsCommand) -> Outcome {
    let result = match t {
        StatsCommand::Ks(a) => {
            let (x, y) = match (&a.runs, &a.first, &a.second, &a.a, &a.b) {
                (Some(r), Some(f), Some(s), None, None) => (cell_values(r, f)?, cell_values(r, s)?),
                (None, _, _, Some(pa), Some(pb)) => (read_values(pa)?, read_values(pb)?),
                _ => return Err(usage("give either --runs with --first/--second, or --a and --b")),
            };
            stats::ks_two_sample(&x, &y).map_err(data)?
        }
        StatsCommand::Normality(a) => {
            let v = match (&a.runs, &a.cell, &a.values) {
                (Some(r), Some(c), None) => cell_values(r, c)?,
                (None, None, Some(p)) => read_values(p)?,
                _ => return Err(usage("give either --runs with --cell, or --values")),
            };
            stats::dagostino_pearson(&v).map_err(data)?
        }
    };
    println!("{}", serde_json::to_string(&result).map_err(data)?);
    Ok(())
}

fn project_cmd(a: &ProjectArgs) -> Outcome {
    let rows = read_embeddings(&a.embeddings)?;
    let labels = match &a.labels {
        Some(p) => {
            let ts = corpus::load_transcripts(p, Format::from_path(p)).map_err(|e| at(p, e))?;
            Some(aligned_labels(&rows, &ts, a.threshold)?)
        }
        None => None,
    };
    let vectors: Vec<Vec<f64>> = rows.iter().map(|r| r.vector.clone()).collect();
    let proj = project::project_2d(&vectors).map_err(|e| at(&a.embeddings, e))?;
    let mut w = csv::Writer::from_writer(create(&a.output)?);
    let csv_err = |e: csv::Error| at(&a.output, e);
    w.write_record(["team_id", "session_id", "x", "y", "label"]).map_err(csv_err)?;
    for (i, (r, p)) in rows.iter().zip(&proj.points).enumerate() {
        let label = labels.as_ref().map_or("", |l| if l[i] { "high" } else { "low" });
        w.write_record([
            r.team_id.as_str(),
            r.session_id.as_str(),
            &p[0].to_string(),
            &p[1].to_string(),
            label,
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| at(&a.output, e))?;
    eprintln!("explained={:.4},{:.4}", proj.explained[0], proj.explained[1]);
    Ok(())
}

fn train_da(a: &TrainDaArgs) -> Outcome {
    if !(0.0..1.0).contains(&a.holdout) {
        return Err(usage("--holdout must be in [0, 1)"));
    }
    let inventory = match &a.tag_inventory {
        Some(p) => TagInventory::load(p).map_err(|e| at(p, e))?,
        None => TagInventory::default(),
    };
    let all = lexical::load_da_corpus(&a.corpus).map_err(|e| at(&a.corpus, e))?;
    // Every k-th line held out, deterministic and order-preserving.
    let (train, held): (Vec<_>, Vec<_>) = if a.holdout > 0.0 {
        let k = (1.0 / a.holdout).round().max(2.0) as usize;
        let (h, t): (Vec<_>, Vec<_>) = all.iter().cloned().enumerate().partition(|(i, _)| i % k == k - 1);
        (t.into_iter().map(|x| x.1).collect(), h.into_iter().map(|x| x.1).collect())
    } else {
        (all, Vec::new())
    };
    let cfg = DaTrainConfig {
        epochs: a.epochs,
        seed: a.seed,
        ..Default::default()
    };
    let model = lexical::train_da_baseline(&train, &inventory, &cfg).map_err(data)?;
    model.save(&a.output).map_err(|e| at(&a.output, e))?;
    let held_acc = if held.is_empty() {
        "n/a".to_string()
    } else {
        format!("{:.4}", model.accuracy(&held))
    };
    println!(
        "train={} heldout={} train_accuracy={:.4} heldout_accuracy={}",
        train.len(),
        held.len(),
        model.accuracy(&train),
        held_acc
    );
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    let exec = execution(cli.sequential);
    match &cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Featurize(a) => featurize(a, exec),
        Command::Embed(a) => embed(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Report(a) => report(a, cli.sequential),
        Command::Synth(a) => synth_cmd(a),
        Command::Stats { test } => stats_cmd(test),
        Command::Project(a) => project_cmd(a),
        Command::TrainDa(a) => train_da(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
