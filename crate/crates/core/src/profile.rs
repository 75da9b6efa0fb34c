//! Turning viewing events into per-user interest profiles.
//!
//! A profile is one point in the genre space per time window. Each event
//! credits every one of its genres according to how much of the programme
//! was watched; window sums are then L1-normalized so profiles of light and
//! heavy viewers are comparable.
//!
//! The credit rule below (full credit from 75% watched, pass-through between
//! 25% and 75%, nothing under 25%) is a stand-in for unpublished interest
//! rules; its thresholds are configurable through [`CreditRule`].

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Vector;

/// One user watching one programme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewingEvent {
    pub user_id: String,
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
    pub program_id: String,
    pub genres: Vec<String>,
    pub watched_fraction: f64,
}

impl ViewingEvent {
    pub fn validate(&self, vocab: &GenreVocabulary) -> Result<()> {
        if !(0.0..=1.0).contains(&self.watched_fraction) {
            return Err(Error::InvalidEvent(format!(
                "watched_fraction {} outside [0, 1] (user {}, program {})",
                self.watched_fraction, self.user_id, self.program_id
            )));
        }
        if self.genres.is_empty() {
            return Err(Error::InvalidEvent(format!(
                "no genres (user {}, program {})",
                self.user_id, self.program_id
            )));
        }
        for genre in &self.genres {
            vocab.index(genre)?;
        }
        Ok(())
    }
}

/// Ordered list of genre names; position in the list is the axis index.
#[derive(Debug, Clone, PartialEq)]
pub struct GenreVocabulary {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl GenreVocabulary {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::InvalidVocabulary("vocabulary is empty".into()));
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::InvalidVocabulary(format!("empty genre name at line {}", i + 1)));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::InvalidVocabulary(format!("duplicate genre '{name}'")));
            }
        }
        Ok(Self { names, index })
    }

    /// Reads one genre name per line. Blank lines are skipped and
    /// surrounding whitespace is trimmed.
    pub fn from_reader(reader: impl BufRead) -> std::io::Result<Result<Self>> {
        let mut names = Vec::new();
        for line in reader.lines() {
            let line = line?;
            let name = line.trim();
            if !name.is_empty() {
                names.push(name.to_string());
            }
        }
        Ok(Self::new(names))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownGenre(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }
}

/// Piecewise interest credit for a watched fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CreditRule {
    /// At or above this fraction the programme counts as fully watched.
    pub full_threshold: f64,
    /// Below this fraction the programme earns nothing.
    pub min_threshold: f64,
}

impl Default for CreditRule {
    fn default() -> Self {
        Self {
            full_threshold: 0.75,
            min_threshold: 0.25,
        }
    }
}

impl CreditRule {
    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..=1.0).contains(&self.min_threshold)
            && (0.0..=1.0).contains(&self.full_threshold)
            && self.min_threshold <= self.full_threshold;
        if ok {
            Ok(())
        } else {
            Err(Error::param(
                "credit thresholds",
                format!(
                    "need 0 <= min ({}) <= full ({}) <= 1",
                    self.min_threshold, self.full_threshold
                ),
            ))
        }
    }

    pub fn credit(&self, watched_fraction: f64) -> f64 {
        if watched_fraction >= self.full_threshold {
            1.0
        } else if watched_fraction >= self.min_threshold {
            watched_fraction
        } else {
            0.0
        }
    }
}

/// Credit earned by each genre of `event` under the default rule.
pub fn credit(event: &ViewingEvent) -> f64 {
    CreditRule::default().credit(event.watched_fraction)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileOptions {
    /// Window length in seconds.
    pub window: i64,
    pub num_windows: usize,
    pub credit: CreditRule,
    /// L1-normalize each window. When off, each component is the mean
    /// credit per event in the window, which still lies in [0, 1].
    pub normalize: bool,
    /// Start of the first window; defaults to the user's earliest event.
    pub origin: Option<i64>,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            window: 5 * 86_400,
            num_windows: 35,
            credit: CreditRule::default(),
            normalize: true,
            origin: None,
        }
    }
}

impl ProfileOptions {
    pub fn validate(&self) -> Result<()> {
        if self.window <= 0 {
            return Err(Error::param("window", "must be positive"));
        }
        if self.num_windows == 0 {
            return Err(Error::param("num_windows", "must be at least 1"));
        }
        self.credit.validate()
    }
}

/// Interest vectors of one user at consecutive window ends.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSeries {
    user_id: String,
    instants: Vec<i64>,
    vectors: Vec<Vector>,
}

impl ProfileSeries {
    pub fn new(user_id: impl Into<String>, instants: Vec<i64>, vectors: Vec<Vector>) -> Result<Self> {
        if instants.len() != vectors.len() {
            return Err(Error::Misaligned(format!(
                "{} instants but {} vectors",
                instants.len(),
                vectors.len()
            )));
        }
        if instants.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Misaligned("instants must be strictly increasing".into()));
        }
        if let Some(first) = vectors.first() {
            let d = first.dim();
            for v in &vectors {
                if v.dim() != d {
                    return Err(Error::dims("ProfileSeries", format!("vector of dim {} in a dim-{d} series", v.dim())));
                }
                if v.as_slice().iter().any(|c| !(0.0..=1.0).contains(c)) {
                    return Err(Error::param("profile component", "must lie in [0, 1]"));
                }
            }
        }
        Ok(Self {
            user_id: user_id.into(),
            instants,
            vectors,
        })
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn instants(&self) -> &[i64] {
        &self.instants
    }

    pub fn vectors(&self) -> &[Vector] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.instants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instants.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vector::dim)
    }
}

/// Builds the profile series of a single user.
///
/// Windows are `[origin + w*window, origin + (w+1)*window)` for
/// `w in 0..num_windows`; each instant is the end of its window. Events
/// outside every window are ignored.
pub fn build_series(
    events: &[ViewingEvent],
    vocab: &GenreVocabulary,
    options: &ProfileOptions,
) -> Result<ProfileSeries> {
    options.validate()?;
    let first = events.first().ok_or(Error::EmptyEvents)?;
    let user_id = first.user_id.clone();
    for event in events {
        event.validate(vocab)?;
        if event.user_id != user_id {
            return Err(Error::InvalidEvent(format!(
                "build_series expects one user, got '{}' and '{}'",
                user_id, event.user_id
            )));
        }
    }
    let origin = options
        .origin
        .unwrap_or_else(|| events.iter().map(|e| e.timestamp).min().unwrap_or(0));

    let d = vocab.len();
    let mut sums = vec![vec![0.0; d]; options.num_windows];
    let mut counts = vec![0usize; options.num_windows];
    for event in events {
        let offset = event.timestamp - origin;
        if offset < 0 {
            continue;
        }
        let w = (offset / options.window) as usize;
        if w >= options.num_windows {
            continue;
        }
        let c = options.credit.credit(event.watched_fraction);
        counts[w] += 1;
        for genre in &event.genres {
            sums[w][vocab.index(genre)?] += c;
        }
    }

    let instants = (1..=options.num_windows as i64)
        .map(|w| origin + w * options.window)
        .collect();
    let vectors = sums
        .into_iter()
        .zip(counts)
        .map(|(sum, count)| {
            if options.normalize {
                l1_normalize(sum)
            } else if count > 0 {
                Vector::new(sum.into_iter().map(|v| v / count as f64).collect())
            } else {
                Ok(Vector::zeros(d))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    ProfileSeries::new(user_id, instants, vectors)
}

fn l1_normalize(sum: Vec<f64>) -> Result<Vector> {
    let total: f64 = sum.iter().sum();
    if total > 0.0 {
        // Clamp guards the last ulp of round-off above 1.
        Vector::new(sum.into_iter().map(|v| (v / total).min(1.0)).collect())
    } else {
        Ok(Vector::zeros(sum.len()))
    }
}

/// Groups events by user, preserving file order within each user.
pub fn group_by_user(events: Vec<ViewingEvent>) -> BTreeMap<String, Vec<ViewingEvent>> {
    let mut users: BTreeMap<String, Vec<ViewingEvent>> = BTreeMap::new();
    for event in events {
        users.entry(event.user_id.clone()).or_default().push(event);
    }
    users
}

/// Parses JSON-lines events. Blank lines are skipped; errors carry the line number.
pub fn read_events(reader: impl BufRead) -> anyhow::Result<Vec<ViewingEvent>> {
    use anyhow::Context;

    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event: ViewingEvent =
            serde_json::from_str(&line).with_context(|| format!("events line {}", i + 1))?;
        events.push(event);
    }
    Ok(events)
}
