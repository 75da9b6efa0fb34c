//! Macroscopic recommendations from predicted interest shifts.
//!
//! The predicted profile is compared genre by genre with the observed one.
//! A genre predicted above its observed level (positive difference) is
//! gaining interest and gets promoted; one predicted below it is losing
//! interest and gets demoted. Only differences of at least `tau` count.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Vector;
use crate::profile::GenreVocabulary;

pub const DEFAULT_TAU: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct ConceptDelta {
    pub genre: String,
    pub calculated: f64,
    pub estimated: f64,
    /// `estimated - calculated`
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredGenre {
    pub genre: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    /// Sorted by difference, largest first.
    pub promoted: Vec<ScoredGenre>,
    /// Sorted by difference, most negative first.
    pub demoted: Vec<ScoredGenre>,
    pub threshold: f64,
}

impl Recommendation {
    pub fn promoted_genres(&self) -> Vec<&str> {
        self.promoted.iter().map(|g| g.genre.as_str()).collect()
    }

    pub fn demoted_genres(&self) -> Vec<&str> {
        self.demoted.iter().map(|g| g.genre.as_str()).collect()
    }
}

pub fn deltas(calculated: &Vector, estimated: &Vector, vocab: &GenreVocabulary) -> Result<Vec<ConceptDelta>> {
    if calculated.dim() != vocab.len() || estimated.dim() != vocab.len() {
        return Err(Error::dims(
            "deltas",
            format!(
                "calculated dim {}, estimated dim {}, vocabulary size {}",
                calculated.dim(),
                estimated.dim(),
                vocab.len()
            ),
        ));
    }
    Ok(vocab
        .names()
        .iter()
        .zip(calculated.as_slice().iter().zip(estimated.as_slice()))
        .map(|(genre, (&c, &e))| ConceptDelta {
            genre: genre.clone(),
            calculated: c,
            estimated: e,
            difference: e - c,
        })
        .collect())
}

fn by_score_then_name(descending: bool) -> impl Fn(&ScoredGenre, &ScoredGenre) -> Ordering {
    move |a, b| {
        let by_score = a.score.total_cmp(&b.score);
        let by_score = if descending { by_score.reverse() } else { by_score };
        by_score.then_with(|| a.genre.cmp(&b.genre))
    }
}

pub fn classify(deltas: &[ConceptDelta], tau: f64) -> Result<Recommendation> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::param("tau", format!("must be > 0, got {tau}")));
    }
    let scored = |d: &ConceptDelta| ScoredGenre {
        genre: d.genre.clone(),
        score: d.difference,
    };
    let mut promoted: Vec<_> = deltas.iter().filter(|d| d.difference >= tau).map(scored).collect();
    let mut demoted: Vec<_> = deltas.iter().filter(|d| d.difference <= -tau).map(scored).collect();
    promoted.sort_by(by_score_then_name(true));
    demoted.sort_by(by_score_then_name(false));
    Ok(Recommendation {
        promoted,
        demoted,
        threshold: tau,
    })
}

/// Drops promoted genres the user already watched today. Demoted genres
/// are left alone.
pub fn refine(
    rec: &Recommendation,
    watched_today: &BTreeSet<String>,
    vocab: &GenreVocabulary,
) -> Result<Recommendation> {
    if let Some(unknown) = watched_today.iter().find(|g| !vocab.contains(g)) {
        return Err(Error::UnknownGenre(unknown.clone()));
    }
    Ok(Recommendation {
        promoted: rec
            .promoted
            .iter()
            .filter(|g| !watched_today.contains(&g.genre))
            .cloned()
            .collect(),
        ..rec.clone()
    })
}
