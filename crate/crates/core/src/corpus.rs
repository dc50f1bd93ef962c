//! Transcript data model, ingestion, phase segmentation and outcome labels.
//!
//! Canonical input is JSONL, one utterance per line:
//!
//! ```text
//! {"team_id": "T01", "session_id": "g1", "speaker": "A", "text": "Ok I'm going to", "process_conflict_z": -0.4}
//! ```
//!
//! `process_conflict_z` may be omitted or `null`. An optional `"da"` field
//! carries a dialogue-act tag from an external tagger. CSV input uses the
//! same columns in the same order (`team_id,session_id,speaker,text,
//! process_conflict_z[,da]`) with a mandatory header row.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot open {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: missing field `{field}`")]
    MissingField { line: usize, field: &'static str },
    #[error("line {line}: empty utterance text")]
    EmptyText { line: usize },
    #[error("transcript {team_id}/{session_id} has only one speaker")]
    SingleSpeaker { team_id: String, session_id: String },
    #[error("transcript {team_id}/{session_id} has no utterances")]
    NoUtterances { team_id: String, session_id: String },
    #[error("transcript {team_id}/{session_id}: utterance indices must strictly increase")]
    IndexOrder { team_id: String, session_id: String },
    #[error("line {line}: conflicting process_conflict_z for {team_id}/{session_id}")]
    ConflictingOutcome {
        line: usize,
        team_id: String,
        session_id: String,
    },
    #[error("non-finite conflict score")]
    NonFiniteScore,
    #[error("need at least 3 utterances to segment phases, got {0}")]
    TooShortForPhases(usize),
    #[error("no conflict scores to binarize")]
    EmptyScores,
    #[error("unknown {kind} `{value}`")]
    UnknownName { kind: &'static str, value: String },
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    /// 0-based position within the full dialogue.
    pub index: usize,
    pub speaker: String,
    pub text: String,
    /// Dialogue-act tag supplied with the input, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub da: Option<String>,
}

impl Utterance {
    pub fn new(index: usize, speaker: impl Into<String>, text: impl Into<String>) -> Self {
        Utterance {
            index,
            speaker: speaker.into(),
            text: text.into(),
            da: None,
        }
    }
}

/// Process-conflict z-score of a team.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConflictScore(f64);

impl ConflictScore {
    pub fn new(z: f64) -> Result<Self> {
        if z.is_finite() {
            Ok(ConflictScore(z))
        } else {
            Err(CorpusError::NonFiniteScore)
        }
    }

    pub fn z(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConflictLabel {
    /// Low process conflict.
    HighPerforming,
    /// High process conflict.
    LowPerforming,
}

impl ConflictLabel {
    /// Positive class for the binary classifiers.
    pub fn is_high_conflict(self) -> bool {
        self == ConflictLabel::LowPerforming
    }

    pub fn short(self) -> &'static str {
        match self {
            ConflictLabel::HighPerforming => "HP",
            ConflictLabel::LowPerforming => "LP",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    team_id: String,
    session_id: String,
    utterances: Vec<Utterance>,
    outcome: Option<ConflictScore>,
}

impl Transcript {
    /// Builds a validated transcript: at least one utterance, at least two
    /// distinct speakers, strictly increasing utterance indices.
    pub fn new(
        team_id: impl Into<String>,
        session_id: impl Into<String>,
        utterances: Vec<Utterance>,
        outcome: Option<ConflictScore>,
    ) -> Result<Self> {
        let t = Transcript {
            team_id: team_id.into(),
            session_id: session_id.into(),
            utterances,
            outcome,
        };
        if t.utterances.is_empty() {
            return Err(CorpusError::NoUtterances {
                team_id: t.team_id,
                session_id: t.session_id,
            });
        }
        if t.utterances.windows(2).any(|w| w[1].index <= w[0].index) {
            return Err(CorpusError::IndexOrder {
                team_id: t.team_id,
                session_id: t.session_id,
            });
        }
        if t.speakers().len() < 2 {
            return Err(CorpusError::SingleSpeaker {
                team_id: t.team_id,
                session_id: t.session_id,
            });
        }
        Ok(t)
    }

    /// Convenience for fixtures: speakers and texts, indices assigned 0..n.
    pub fn from_turns<S: AsRef<str>, T: AsRef<str>>(
        team_id: &str,
        session_id: &str,
        turns: &[(S, T)],
        outcome: Option<ConflictScore>,
    ) -> Result<Self> {
        let utterances = turns
            .iter()
            .enumerate()
            .map(|(i, (s, t))| Utterance::new(i, s.as_ref(), t.as_ref()))
            .collect();
        Transcript::new(team_id, session_id, utterances, outcome)
    }

    pub fn team_id(&self) -> &str {
        &self.team_id
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn utterances(&self) -> &[Utterance] {
        &self.utterances
    }

    pub fn outcome(&self) -> Option<ConflictScore> {
        self.outcome
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    /// Distinct speakers in order of first appearance.
    pub fn speakers(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for u in &self.utterances {
            if !out.contains(&u.speaker.as_str()) {
                out.push(&u.speaker);
            }
        }
        out
    }

    /// `team_id/session_id`.
    pub fn key(&self) -> String {
        format!("{}/{}", self.team_id, self.session_id)
    }

    // Segments may legitimately hold a single speaker, so they skip validation.
    fn slice(&self, range: std::ops::Range<usize>) -> Transcript {
        Transcript {
            team_id: self.team_id.clone(),
            session_id: self.session_id.clone(),
            utterances: self.utterances[range].to_vec(),
            outcome: self.outcome,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Whole,
    Initial,
    Middle,
    End,
}

impl Phase {
    pub const ALL: [Phase; 4] = [Phase::Whole, Phase::Initial, Phase::Middle, Phase::End];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Whole => "whole",
            Phase::Initial => "initial",
            Phase::Middle => "middle",
            Phase::End => "end",
        }
    }

    /// The part of `t` this phase covers.
    pub fn select(self, t: &Transcript) -> Result<Transcript> {
        match self {
            Phase::Whole => Ok(t.clone()),
            Phase::Initial => Ok(segment_phases(t)?.0),
            Phase::Middle => Ok(segment_phases(t)?.1),
            Phase::End => Ok(segment_phases(t)?.2),
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Phase {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "whole" => Ok(Phase::Whole),
            "initial" | "early" => Ok(Phase::Initial),
            "middle" => Ok(Phase::Middle),
            "end" | "late" => Ok(Phase::End),
            _ => Err(CorpusError::UnknownName {
                kind: "phase",
                value: s.to_string(),
            }),
        }
    }
}

/// Splits a transcript into three contiguous thirds. When the length is not
/// divisible by three the earlier segments take the extra utterances.
pub fn segment_phases(t: &Transcript) -> Result<(Transcript, Transcript, Transcript)> {
    let n = t.len();
    if n < 3 {
        return Err(CorpusError::TooShortForPhases(n));
    }
    let [a, b, _] = phase_sizes(n);
    Ok((t.slice(0..a), t.slice(a..a + b), t.slice(a + b..n)))
}

/// Sizes of the initial, middle and end segments for a dialogue of `n` utterances.
pub fn phase_sizes(n: usize) -> [usize; 3] {
    let (base, rem) = (n / 3, n % 3);
    [base + usize::from(rem > 0), base + usize::from(rem > 1), base]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Threshold {
    /// Corpus median; the default.
    #[default]
    Median,
    /// Sign of the z-score.
    Zero,
}

impl FromStr for Threshold {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "median" => Ok(Threshold::Median),
            "zero" | "sign" => Ok(Threshold::Zero),
            _ => Err(CorpusError::UnknownName {
                kind: "threshold",
                value: s.to_string(),
            }),
        }
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// Teams strictly below the threshold are `HighPerforming`; ties and
/// everything above are `LowPerforming`.
pub fn binarize_outcomes(scores: &[ConflictScore], threshold: Threshold) -> Result<Vec<ConflictLabel>> {
    if scores.is_empty() {
        return Err(CorpusError::EmptyScores);
    }
    let z: Vec<f64> = scores.iter().map(|s| s.z()).collect();
    if z.iter().any(|v| !v.is_finite()) {
        return Err(CorpusError::NonFiniteScore);
    }
    let cut = match threshold {
        Threshold::Median => median(&z).expect("non-empty"),
        Threshold::Zero => 0.0,
    };
    Ok(z
        .iter()
        .map(|&v| {
            if v < cut {
                ConflictLabel::HighPerforming
            } else {
                ConflictLabel::LowPerforming
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Jsonl,
    Csv,
}

impl Format {
    /// Guess from a file extension; JSONL unless the extension is `.csv`.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Jsonl,
        }
    }
}

impl FromStr for Format {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            _ => Err(CorpusError::UnknownName {
                kind: "format",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Accept utterances whose text is empty.
    pub allow_empty_text: bool,
}

#[derive(Debug, Default, Deserialize)]
struct RawRecord {
    team_id: Option<String>,
    session_id: Option<String>,
    speaker: Option<String>,
    text: Option<String>,
    process_conflict_z: Option<f64>,
    da: Option<String>,
}

#[derive(Serialize)]
struct OutRecord<'a> {
    team_id: &'a str,
    session_id: &'a str,
    speaker: &'a str,
    text: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    process_conflict_z: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    da: Option<&'a str>,
}

pub fn load_transcripts(path: impl AsRef<Path>, format: Format) -> Result<Vec<Transcript>> {
    load_transcripts_with(path, format, LoadOptions::default())
}

pub fn load_transcripts_with(
    path: impl AsRef<Path>,
    format: Format,
    opts: LoadOptions,
) -> Result<Vec<Transcript>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    match format {
        Format::Jsonl => read_jsonl(BufReader::new(file), opts),
        Format::Csv => read_csv(file, opts),
    }
}

pub fn read_jsonl<R: BufRead>(reader: R, opts: LoadOptions) -> Result<Vec<Transcript>> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| CorpusError::Malformed {
            line: lineno,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: lineno,
            message: e.to_string(),
        })?;
        records.push((lineno, raw));
    }
    group_records(records, opts)
}

pub fn read_csv<R: Read>(reader: R, opts: LoadOptions) -> Result<Vec<Transcript>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        // Header is line 1.
        let lineno = i + 2;
        let row = row.map_err(|e| CorpusError::Malformed {
            line: lineno,
            message: e.to_string(),
        })?;
        let field = |k: usize| row.get(k).map(str::to_string);
        let z = match row.get(4).map(str::trim) {
            None | Some("") => None,
            Some(s) => Some(s.parse::<f64>().map_err(|e| CorpusError::Malformed {
                line: lineno,
                message: format!("process_conflict_z: {e}"),
            })?),
        };
        let raw = RawRecord {
            team_id: field(0),
            session_id: field(1),
            speaker: field(2),
            text: field(3),
            process_conflict_z: z,
            da: field(5).filter(|s| !s.is_empty()),
        };
        records.push((lineno, raw));
    }
    group_records(records, opts)
}

struct Group {
    team_id: String,
    session_id: String,
    utterances: Vec<Utterance>,
    outcome: Option<ConflictScore>,
}

fn group_records(records: Vec<(usize, RawRecord)>, opts: LoadOptions) -> Result<Vec<Transcript>> {
    let mut groups: Vec<Group> = Vec::new();
    let mut by_key: HashMap<(String, String), usize> = HashMap::new();
    for (line, raw) in records {
        let team_id = raw.team_id.ok_or(CorpusError::MissingField { line, field: "team_id" })?;
        let session_id = raw
            .session_id
            .ok_or(CorpusError::MissingField { line, field: "session_id" })?;
        let speaker = raw.speaker.ok_or(CorpusError::MissingField { line, field: "speaker" })?;
        let text = raw.text.ok_or(CorpusError::MissingField { line, field: "text" })?;
        if speaker.trim().is_empty() {
            return Err(CorpusError::MissingField { line, field: "speaker" });
        }
        if text.trim().is_empty() && !opts.allow_empty_text {
            return Err(CorpusError::EmptyText { line });
        }
        let outcome = raw
            .process_conflict_z
            .map(ConflictScore::new)
            .transpose()
            .map_err(|_| CorpusError::Malformed {
                line,
                message: "process_conflict_z is not finite".into(),
            })?;
        let gi = *by_key
            .entry((team_id.clone(), session_id.clone()))
            .or_insert_with(|| {
                groups.push(Group {
                    team_id: team_id.clone(),
                    session_id: session_id.clone(),
                    utterances: Vec::new(),
                    outcome: None,
                });
                groups.len() - 1
            });
        let g = &mut groups[gi];
        if let Some(z) = outcome {
            match g.outcome {
                Some(prev) if prev != z => {
                    return Err(CorpusError::ConflictingOutcome {
                        line,
                        team_id,
                        session_id,
                    })
                }
                _ => g.outcome = Some(z),
            }
        }
        let index = g.utterances.len();
        g.utterances.push(Utterance {
            index,
            speaker,
            text,
            da: raw.da,
        });
    }
    groups
        .into_iter()
        .map(|g| Transcript::new(g.team_id, g.session_id, g.utterances, g.outcome))
        .collect()
}

/// Writes transcripts back out as canonical JSONL records.
pub fn write_jsonl<W: Write>(mut w: W, transcripts: &[Transcript]) -> std::io::Result<()> {
    for t in transcripts {
        for u in t.utterances() {
            let rec = OutRecord {
                team_id: t.team_id(),
                session_id: t.session_id(),
                speaker: &u.speaker,
                text: &u.text,
                process_conflict_z: t.outcome().map(ConflictScore::z),
                da: u.da.as_deref(),
            };
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n")?;
        }
    }
    Ok(())
}
