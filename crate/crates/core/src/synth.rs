//! Synthetic interest trajectories and viewing logs.
//!
//! All randomness comes from a `ChaCha8Rng` seeded with the configured seed;
//! Gaussian draws use `rand_distr::StandardNormal` (ziggurat). Identical
//! configurations produce bit-identical output.

use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Matrix, Vector};
use crate::profile::{GenreVocabulary, ProfileSeries, ViewingEvent};
use crate::statespace::{transition, ModelParams};

/// Recorded in run metadata so the streams can be reproduced elsewhere.
pub const GENERATOR_DESCRIPTION: &str =
    "ChaCha8Rng (rand_chacha 0.9) seeded via seed_from_u64; Gaussian: rand_distr 0.5 StandardNormal (ziggurat)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// States follow the linear model exactly.
    ModelExact,
    /// Clamped piecewise-linear interest curves with random change-points.
    #[default]
    PiecewiseInterest,
    /// Reflected Gaussian random walk inside the unit cube.
    RandomWalk,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::ModelExact => "model-exact",
            Regime::PiecewiseInterest => "piecewise-interest",
            Regime::RandomWalk => "random-walk",
        })
    }
}

impl std::str::FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "model-exact" => Ok(Self::ModelExact),
            "piecewise-interest" => Ok(Self::PiecewiseInterest),
            "random-walk" => Ok(Self::RandomWalk),
            other => Err(format!(
                "unknown regime '{other}' (expected model-exact, piecewise-interest or random-walk)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub steps: usize,
    pub seed: u64,
    /// Dimension, dynamics and noise scales; `params.d` is the genre count.
    pub params: ModelParams,
    pub regime: Regime,
    /// Viewing events per window with any interest.
    pub events_per_window: usize,
    /// Window length in seconds for generated events.
    pub window: i64,
    /// Timestamp of the first window start.
    pub start: i64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            steps: 35,
            seed: 0,
            params: ModelParams::default(),
            regime: Regime::default(),
            events_per_window: 400,
            window: 5 * 86_400,
            // 2008-09-01T00:00:00Z
            start: 1_220_227_200,
        }
    }
}

impl SynthConfig {
    pub fn d(&self) -> usize {
        self.params.d
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::param("steps", "must be at least 2"));
        }
        if self.params.d == 0 {
            return Err(Error::param("d", "must be at least 1"));
        }
        let p = &self.params;
        if !(p.q >= 0.0 && p.q.is_finite()) || !(p.r >= 0.0 && p.r.is_finite()) {
            return Err(Error::param("noise", "q and r must be finite and >= 0"));
        }
        if p.t_step.is_nan() || p.t_step <= 0.0 || !p.alpha.is_finite() {
            return Err(Error::param("dynamics", "t_step must be > 0 and alpha finite"));
        }
        if self.window <= 0 {
            return Err(Error::param("window", "must be positive"));
        }
        Ok(())
    }

    /// Config for user `index` of a multi-user run.
    pub fn for_user(&self, index: u64) -> SynthConfig {
        SynthConfig {
            seed: self.seed ^ index,
            ..*self
        }
    }
}

/// Ground truth and measurements of one synthetic user.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthRun {
    /// `3d` states `[position; velocity; acceleration]`, one per step.
    pub states: Vec<Vector>,
    /// `d` measurements, one per step.
    pub measurements: Vec<Vector>,
}

impl SynthRun {
    pub fn positions(&self, d: usize) -> Vec<Vector> {
        self.states
            .iter()
            .map(|s| Vector::new(s.as_slice()[..d].to_vec()).expect("finite state"))
            .collect()
    }

    /// Measurements clamped into `[0, 1]` as a profile series with instants
    /// at window ends.
    pub fn measurement_series(&self, user_id: &str, config: &SynthConfig) -> Result<ProfileSeries> {
        let instants = (1..=self.measurements.len() as i64)
            .map(|k| config.start + k * config.window)
            .collect();
        let vectors = self
            .measurements
            .iter()
            .map(|z| Vector::new(z.as_slice().iter().map(|v| v.clamp(0.0, 1.0)).collect()))
            .collect::<Result<Vec<_>>>()?;
        ProfileSeries::new(user_id, instants, vectors)
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn noise(rng: &mut ChaCha8Rng, n: usize, variance: f64) -> Vec<f64> {
    let sd = variance.sqrt();
    (0..n).map(|_| sd * normal(rng)).collect()
}

/// Generates true states and noisy measurements.
pub fn generate_states(config: &SynthConfig) -> Result<SynthRun> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let positions_only = match config.regime {
        Regime::ModelExact => return model_exact(config, &mut rng),
        Regime::PiecewiseInterest => piecewise_interest(config, &mut rng),
        Regime::RandomWalk => random_walk(config, &mut rng),
    };
    let d = config.d();
    let mut states = Vec::with_capacity(config.steps);
    let mut measurements = Vec::with_capacity(config.steps);
    for (k, pos) in positions_only.iter().enumerate() {
        let vel: Vec<f64> = match positions_only.get(k + 1) {
            Some(next) => next.iter().zip(pos).map(|(b, a)| b - a).collect(),
            None => vec![0.0; d],
        };
        let mut state = pos.clone();
        state.extend(vel);
        state.extend(std::iter::repeat_n(0.0, d));
        states.push(Vector::new(state)?);
        let z: Vec<f64> = pos
            .iter()
            .zip(noise(&mut rng, d, config.params.r))
            .map(|(p, v)| p + v)
            .collect();
        measurements.push(Vector::new(z)?);
    }
    Ok(SynthRun {
        states,
        measurements,
    })
}

fn model_exact(config: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<SynthRun> {
    let d = config.d();
    let p = &config.params;
    let a: Matrix = transition(d, p.alpha, p.t_step)?;
    let mut x: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    x.resize(3 * d, 0.0);
    let mut state = Vector::new(x)?;
    let mut states = Vec::with_capacity(config.steps);
    let mut measurements = Vec::with_capacity(config.steps);
    for _ in 0..config.steps {
        let v = Vector::new(noise(rng, d, p.r))?;
        measurements.push(Vector::new(state.as_slice()[..d].to_vec())?.add(&v)?);
        let w = Vector::new(noise(rng, 3 * d, p.q))?;
        let next = a.mul_vec(&state)?.add(&w)?;
        states.push(state);
        state = next;
    }
    Ok(SynthRun {
        states,
        measurements,
    })
}

/// Per-step probability that a genre's slope changes.
const CHANGE_PROBABILITY: f64 = 0.15;
/// Largest slope magnitude of an interest curve, per step.
const MAX_SLOPE: f64 = 0.06;

fn piecewise_interest(config: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let d = config.d();
    // Squaring skews initial interest toward low values, as real profiles
    // concentrate on a few genres.
    let mut level: Vec<f64> = (0..d).map(|_| rng.random::<f64>().powi(2)).collect();
    let mut slope: Vec<f64> = (0..d).map(|_| rng.random_range(-MAX_SLOPE..MAX_SLOPE)).collect();
    let mut out = Vec::with_capacity(config.steps);
    for _ in 0..config.steps {
        out.push(level.clone());
        for g in 0..d {
            if rng.random::<f64>() < CHANGE_PROBABILITY {
                slope[g] = rng.random_range(-MAX_SLOPE..MAX_SLOPE);
            }
            level[g] = (level[g] + slope[g]).clamp(0.0, 1.0);
        }
    }
    out
}

fn reflect_unit(x: f64) -> f64 {
    // Fold onto [0, 2) then mirror the upper half.
    let folded = x.rem_euclid(2.0);
    if folded > 1.0 {
        2.0 - folded
    } else {
        folded
    }
}

fn random_walk(config: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let d = config.d();
    let mut level: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    let mut out = Vec::with_capacity(config.steps);
    for _ in 0..config.steps {
        out.push(level.clone());
        for (x, step) in level.iter_mut().zip(noise(rng, d, config.params.q)) {
            *x = reflect_unit(*x + step);
        }
    }
    out
}

/// Generates a viewing log whose windowed profiles follow the true
/// positions of [`generate_states`], clamped into `[0, 1]`.
///
/// Each window with any interest gets `events_per_window` single-genre
/// events; the genre is drawn proportionally to interest and the watched
/// fraction uniformly from `[0, 1)`. The first event of the log sits exactly
/// on `config.start` so windows computed from the earliest event line up.
pub fn generate_events(config: &SynthConfig, vocab: &GenreVocabulary, user_id: &str) -> Result<Vec<ViewingEvent>> {
    if vocab.len() != config.d() {
        return Err(Error::dims(
            "generate_events",
            format!("vocabulary has {} genres, config has d = {}", vocab.len(), config.d()),
        ));
    }
    let run = generate_states(config)?;
    let interests: Vec<Vec<f64>> = run
        .positions(config.d())
        .into_iter()
        .map(|p| p.as_slice().iter().map(|v| v.clamp(0.0, 1.0)).collect())
        .collect();
    events_from_interests(&interests, config, vocab, user_id)
}

/// Samples a viewing log from explicit per-window interest vectors.
pub fn events_from_interests(
    interests: &[Vec<f64>],
    config: &SynthConfig,
    vocab: &GenreVocabulary,
    user_id: &str,
) -> Result<Vec<ViewingEvent>> {
    if let Some(bad) = interests.iter().find(|i| i.len() != vocab.len()) {
        return Err(Error::dims(
            "events_from_interests",
            format!("interest vector of dim {} for {} genres", bad.len(), vocab.len()),
        ));
    }
    // Separate stream so event sampling does not perturb the trajectory.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5EED_E7E7_u64);
    let mut events = Vec::new();
    for (w, interest) in interests.iter().enumerate() {
        let Ok(genre_dist) = WeightedIndex::new(interest) else {
            // All-zero interest: nothing watched in this window.
            continue;
        };
        let window_start = config.start + w as i64 * config.window;
        let mut offsets: Vec<i64> = (0..config.events_per_window)
            .map(|_| rng.random_range(0..config.window))
            .collect();
        if w == 0 {
            if let Some(first) = offsets.first_mut() {
                *first = 0;
            }
        }
        offsets.sort_unstable();
        for (i, offset) in offsets.into_iter().enumerate() {
            let g = genre_dist.sample(&mut rng);
            events.push(ViewingEvent {
                user_id: user_id.to_string(),
                timestamp: window_start + offset,
                program_id: format!("prog-{g:02}-{w:03}-{i:04}"),
                genres: vec![vocab.name(g).to_string()],
                watched_fraction: rng.random::<f64>(),
            });
        }
    }
    Ok(events)
}

/// Forty-four television genres.
pub const DEFAULT_GENRES: [&str; 44] = [
    "Action", "Adventure", "Animation", "Arts", "Biography", "Business", "Children", "Comedy",
    "Consumer", "Cookery", "Crime", "Current Affairs", "Documentary", "Drama", "Education",
    "Entertainment", "Factual", "Family", "Fantasy", "Film", "Game Show", "Health", "History",
    "Hobbies", "Horror", "Lifestyle", "Music", "Mystery", "Nature", "News", "Politics",
    "Quiz", "Reality", "Religion", "Romance", "Science", "Science Fiction", "Sitcom", "Soap",
    "Sport", "Talk Show", "Thriller", "Travel", "Western",
];

/// The first `d` default genres, or numbered names beyond 44.
pub fn default_vocabulary(d: usize) -> Result<GenreVocabulary> {
    GenreVocabulary::new((0..d).map(|i| match DEFAULT_GENRES.get(i) {
        Some(name) => name.to_string(),
        None => format!("Genre {i:03}"),
    }))
}
