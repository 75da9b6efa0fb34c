//! Subcommand implementations. Each command reads its inputs, runs one
//! stage over every user in turn, writes its outputs into the output
//! directory, and records a `run_<command>.json` metadata file.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::evaluate::{cosine_distance, EvalReport, InstantDistance};
use crate::kalman::{track, Track};
use crate::profile::{build_series, group_by_user, read_events, GenreVocabulary, ProfileSeries, ViewingEvent};
use crate::recommend::{classify, deltas, refine, ScoredGenre};
use crate::synth::{default_vocabulary, generate_events, generate_states, GENERATOR_DESCRIPTION};

pub const TRACE_HEADER: [&str; 6] = ["step", "instant", "genre", "actual", "predicted", "innovation"];

#[derive(Debug, Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct RunMetadata<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    generator: Option<&'a str>,
    config: &'a RunConfig,
    inputs: Vec<InputDigest>,
    outputs: Vec<String>,
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn write_metadata(
    config: &RunConfig,
    command: &str,
    inputs: &[PathBuf],
    outputs: Vec<String>,
    generator: Option<&str>,
) -> Result<()> {
    let inputs = inputs
        .iter()
        .map(|p| {
            Ok(InputDigest {
                path: p.display().to_string(),
                sha256: sha256_file(p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let meta = RunMetadata {
        command,
        version: env!("CARGO_PKG_VERSION"),
        seed: config.seed,
        generator,
        config,
        inputs,
        outputs,
    };
    let path = config.paths.out.join(format!("run_{command}.json"));
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn ensure_out_dir(config: &RunConfig) -> Result<()> {
    let out = &config.paths.out;
    fs::create_dir_all(out).with_context(|| format!("cannot create output directory {}", out.display()))
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if !path.is_file() {
        bail!("{what} file not found: {}", path.display());
    }
    Ok(())
}

/// File-name-safe form of a user id.
pub fn file_stem(user_id: &str) -> String {
    user_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn load_vocab(path: &Path) -> Result<GenreVocabulary> {
    require_file(path, "vocabulary")?;
    let file = File::open(path).with_context(|| format!("cannot open vocabulary {}", path.display()))?;
    let vocab = GenreVocabulary::from_reader(BufReader::new(file))
        .with_context(|| format!("cannot read vocabulary {}", path.display()))?
        .with_context(|| format!("invalid vocabulary {}", path.display()))?;
    Ok(vocab)
}

pub fn load_events(path: &Path) -> Result<Vec<ViewingEvent>> {
    require_file(path, "events")?;
    let file = File::open(path).with_context(|| format!("cannot open events {}", path.display()))?;
    read_events(BufReader::new(file)).with_context(|| format!("invalid events file {}", path.display()))
}

struct Inputs {
    vocab: GenreVocabulary,
    users: BTreeMap<String, Vec<ViewingEvent>>,
    paths: Vec<PathBuf>,
}

fn load_inputs(config: &RunConfig) -> Result<Inputs> {
    let vocab_path = config.paths.vocab();
    let events_path = config.paths.events();
    let vocab = load_vocab(&vocab_path)?;
    let events = load_events(&events_path)?;
    if events.is_empty() {
        bail!("events file {} contains no events", events_path.display());
    }
    for (i, event) in events.iter().enumerate() {
        event
            .validate(&vocab)
            .with_context(|| format!("event {} in {}", i + 1, events_path.display()))?;
    }
    Ok(Inputs {
        vocab,
        users: group_by_user(events),
        paths: vec![events_path, vocab_path],
    })
}

fn model_params(config: &RunConfig, vocab: &GenreVocabulary) -> crate::statespace::ModelParams {
    crate::statespace::ModelParams {
        d: vocab.len(),
        ..config.model
    }
}

fn user_series(config: &RunConfig, vocab: &GenreVocabulary, user: &str, events: &[ViewingEvent]) -> Result<ProfileSeries> {
    build_series(events, vocab, &config.profile.options()).with_context(|| format!("user {user}"))
}

fn user_track(config: &RunConfig, vocab: &GenreVocabulary, series: &ProfileSeries) -> Result<Track> {
    track(series, &model_params(config, vocab)).with_context(|| format!("tracking user {}", series.user_id()))
}

/// Summary of one user's events as seen by `ingest`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestSummary {
    pub user_id: String,
    pub events: usize,
    pub in_window: usize,
    pub nonempty_windows: usize,
    pub num_windows: usize,
}

pub fn cmd_ingest(config: &RunConfig) -> Result<Vec<IngestSummary>> {
    ensure_out_dir(config)?;
    let inputs = load_inputs(config)?;
    let options = config.profile.options();
    let mut summaries = Vec::with_capacity(inputs.users.len());
    for (user, events) in &inputs.users {
        let series = user_series(config, &inputs.vocab, user, events)?;
        let origin = events.iter().map(|e| e.timestamp).min().unwrap_or(0);
        let end = origin + options.window * options.num_windows as i64;
        summaries.push(IngestSummary {
            user_id: user.clone(),
            events: events.len(),
            in_window: events.iter().filter(|e| (origin..end).contains(&e.timestamp)).count(),
            nonempty_windows: series.vectors().iter().filter(|v| !v.is_zero()).count(),
            num_windows: series.len(),
        });
    }
    let name = "ingest_summary.csv";
    let mut w = csv::Writer::from_path(config.paths.out.join(name))?;
    for s in &summaries {
        w.serialize(s)?;
    }
    w.flush()?;
    write_metadata(config, "ingest", &inputs.paths, vec![name.into()], None)?;
    Ok(summaries)
}

pub fn cmd_synth(config: &RunConfig) -> Result<()> {
    ensure_out_dir(config)?;
    let (vocab, mut inputs) = match &config.paths.vocab {
        Some(path) => (load_vocab(path)?, vec![path.clone()]),
        None => (default_vocabulary(config.model.d)?, Vec::new()),
    };
    let mut synth = config.synth_config();
    synth.params.d = vocab.len();
    synth.validate()?;

    let out = &config.paths.out;
    let mut outputs = Vec::new();
    let vocab_path = out.join("vocab.txt");
    if config.paths.vocab.as_deref() != Some(vocab_path.as_path()) {
        let mut text = vocab.names().join("\n");
        text.push('\n');
        fs::write(&vocab_path, text)?;
        outputs.push("vocab.txt".to_string());
    }

    let events_path = out.join("events.jsonl");
    let mut events_out = BufWriter::new(File::create(&events_path)?);
    let truth_path = out.join("ground_truth.csv");
    let mut truth = csv::Writer::from_path(&truth_path)?;
    truth.write_record(["user_id", "step", "genre", "true_position"])?;
    let width = config.synth.users.saturating_sub(1).to_string().len().max(3);
    for index in 0..config.synth.users {
        let user = format!("user-{index:0width$}");
        let user_cfg = synth.for_user(index as u64);
        let run = generate_states(&user_cfg)?;
        for (step, pos) in run.positions(vocab.len()).iter().enumerate() {
            for (g, value) in pos.as_slice().iter().enumerate() {
                truth.write_record([user.clone(), step.to_string(), vocab.name(g).to_string(), value.to_string()])?;
            }
        }
        for event in generate_events(&user_cfg, &vocab, &user)? {
            serde_json::to_writer(&mut events_out, &event)?;
            events_out.write_all(b"\n")?;
        }
    }
    events_out.flush()?;
    truth.flush()?;
    outputs.push("events.jsonl".into());
    outputs.push("ground_truth.csv".into());
    inputs.retain(|p| p.is_file());
    write_metadata(config, "synth", &inputs, outputs, Some(GENERATOR_DESCRIPTION))
}

pub fn write_trace(path: &Path, track: &Track, series: &ProfileSeries, vocab: &GenreVocabulary) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(TRACE_HEADER)?;
    for (step, (point, actual)) in track.points.iter().zip(series.vectors()).enumerate().skip(1) {
        for g in 0..vocab.len() {
            let innovation = point
                .innovation
                .as_ref()
                .map(|i| i.value[g].to_string())
                .unwrap_or_default();
            w.write_record([
                step.to_string(),
                point.instant.to_string(),
                vocab.name(g).to_string(),
                actual[g].to_string(),
                point.estimate.x_hat[g].to_string(),
                innovation,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_track(config: &RunConfig) -> Result<()> {
    ensure_out_dir(config)?;
    let inputs = load_inputs(config)?;
    let mut outputs = Vec::new();
    for (user, events) in &inputs.users {
        let series = user_series(config, &inputs.vocab, user, events)?;
        let track = user_track(config, &inputs.vocab, &series)?;
        let name = format!("trace_{}.csv", file_stem(user));
        write_trace(&config.paths.out.join(&name), &track, &series, &inputs.vocab)?;
        outputs.push(name);
    }
    write_metadata(config, "track", &inputs.paths, outputs, None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationRecord {
    pub user_id: String,
    pub instant: i64,
    pub promoted: Vec<ScoredGenre>,
    pub demoted: Vec<ScoredGenre>,
    pub threshold: f64,
}

const DAY: i64 = 86_400;

/// Recommendation for one user: the forecast profile against the most
/// recent non-empty observed profile, refined by the genres watched on the
/// user's latest viewing day.
pub fn recommend_user(
    config: &RunConfig,
    vocab: &GenreVocabulary,
    user: &str,
    events: &[ViewingEvent],
) -> Result<Option<RecommendationRecord>> {
    let series = user_series(config, vocab, user, events)?;
    let track = user_track(config, vocab, &series)?;
    let Some((instant, calculated)) = series
        .instants()
        .iter()
        .zip(series.vectors())
        .rev()
        .find(|(_, v)| !v.is_zero())
    else {
        return Ok(None);
    };
    let concept_deltas = deltas(calculated, &track.forecast_position(), vocab)?;
    let mut rec = classify(&concept_deltas, config.recommend.tau)?;
    if config.recommend.refine_same_day {
        let last_day = events.iter().map(|e| e.timestamp.div_euclid(DAY)).max();
        let watched: BTreeSet<String> = events
            .iter()
            .filter(|e| Some(e.timestamp.div_euclid(DAY)) == last_day)
            .flat_map(|e| e.genres.iter().cloned())
            .collect();
        rec = refine(&rec, &watched, vocab)?;
    }
    Ok(Some(RecommendationRecord {
        user_id: user.to_string(),
        instant: *instant,
        promoted: rec.promoted,
        demoted: rec.demoted,
        threshold: rec.threshold,
    }))
}

pub fn cmd_recommend(config: &RunConfig) -> Result<Vec<RecommendationRecord>> {
    ensure_out_dir(config)?;
    let inputs = load_inputs(config)?;
    let name = "recommendations.jsonl";
    let mut out = BufWriter::new(File::create(config.paths.out.join(name))?);
    let mut records = Vec::new();
    for (user, events) in &inputs.users {
        match recommend_user(config, &inputs.vocab, user, events)? {
            Some(record) => {
                serde_json::to_writer(&mut out, &record)?;
                out.write_all(b"\n")?;
                records.push(record);
            }
            None => eprintln!("warning: user {user} has no consumption inside the profile windows; skipped"),
        }
    }
    out.flush()?;
    write_metadata(config, "recommend", &inputs.paths, vec![name.into()], None)?;
    Ok(records)
}

#[derive(Debug, Deserialize)]
struct TraceRow {
    step: usize,
    instant: i64,
    #[allow(dead_code)]
    genre: String,
    actual: f64,
    predicted: f64,
}

/// Scores one trace file: every step's actual profile against its prediction.
pub fn evaluate_trace(path: &Path, threshold: f64) -> Result<EvalReport> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("cannot open trace {}", path.display()))?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != TRACE_HEADER {
        bail!("{} is not a trace file (unexpected header)", path.display());
    }
    let mut steps: BTreeMap<usize, (i64, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for row in reader.deserialize() {
        let row: TraceRow = row.with_context(|| format!("malformed row in {}", path.display()))?;
        let entry = steps.entry(row.step).or_insert_with(|| (row.instant, Vec::new(), Vec::new()));
        entry.1.push(row.actual);
        entry.2.push(row.predicted);
    }
    let mut per_instant = Vec::with_capacity(steps.len());
    let mut skipped = 0;
    for (instant, actual, predicted) in steps.into_values() {
        if actual.iter().all(|&v| v == 0.0) {
            skipped += 1;
            continue;
        }
        per_instant.push(InstantDistance {
            instant,
            cosine_distance: cosine_distance(&actual, &predicted),
            zero_prediction: predicted.iter().all(|&v| v == 0.0),
        });
    }
    Ok(EvalReport::from_distances(per_instant, threshold, skipped))
}

#[derive(Debug, Serialize)]
pub struct EvaluationSummary {
    pub threshold: f64,
    /// Pooled over every scored instant of every user.
    pub overall: EvalReport,
    pub users: BTreeMap<String, EvalReport>,
}

pub fn cmd_evaluate(config: &RunConfig) -> Result<EvaluationSummary> {
    ensure_out_dir(config)?;
    let threshold = config.evaluate.threshold;
    let dir = config.paths.traces();
    let mut traces: Vec<PathBuf> = fs::read_dir(&dir)
        .with_context(|| format!("cannot read trace directory {}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("trace_") && n.ends_with(".csv"))
        })
        .collect();
    traces.sort();
    if traces.is_empty() {
        bail!("no trace_*.csv files in {}", dir.display());
    }

    let mut users = BTreeMap::new();
    let mut pooled = Vec::new();
    let mut skipped = 0;
    let mut outputs = Vec::new();
    for path in &traces {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let user = stem.trim_start_matches("trace_").to_string();
        let report = evaluate_trace(path, threshold)?;
        let name = format!("eval_{user}.csv");
        let mut w = csv::Writer::from_path(config.paths.out.join(&name))?;
        w.write_record(["instant", "cosine_distance"])?;
        for p in &report.per_instant {
            w.write_record([p.instant.to_string(), p.cosine_distance.to_string()])?;
        }
        w.flush()?;
        outputs.push(name);
        pooled.extend(report.per_instant.iter().copied());
        skipped += report.skipped_zero_actual;
        users.insert(user, report);
    }
    let summary = EvaluationSummary {
        threshold,
        overall: EvalReport::from_distances(pooled, threshold, skipped),
        users,
    };
    let name = "evaluation.json";
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    fs::write(config.paths.out.join(name), text)?;
    outputs.push(name.into());
    write_metadata(config, "evaluate", &traces, outputs, None)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_stems_are_sanitized() {
        assert_eq!(file_stem("user-001"), "user-001");
        assert_eq!(file_stem("a/b c"), "a_b_c");
    }
}
