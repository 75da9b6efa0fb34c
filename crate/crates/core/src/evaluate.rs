//! Tracking quality: cosine distance between predicted and observed profiles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Vector;
use crate::profile::ProfileSeries;

/// Distances below this count as a correct prediction.
pub const DEFAULT_THRESHOLD: f64 = 0.15;

/// `1 - a.b / (|a| |b|)`, or `1.0` when either vector is zero.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na2: f64 = a.iter().map(|x| x * x).sum();
    let nb2: f64 = b.iter().map(|x| x * x).sum();
    if na2 == 0.0 || nb2 == 0.0 {
        return 1.0;
    }
    // sqrt of the product keeps identical inputs at exactly zero distance.
    (1.0 - dot / (na2 * nb2).sqrt()).clamp(0.0, 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstantDistance {
    pub instant: i64,
    pub cosine_distance: f64,
    /// The prediction was the zero vector, so the distance is the 1.0 convention.
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub zero_prediction: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_instant: Vec<InstantDistance>,
    pub fraction_below: f64,
    pub median_distance: Option<f64>,
    pub threshold: f64,
    /// Instants whose observed profile was zero; they carry no distance.
    pub skipped_zero_actual: usize,
}

impl EvalReport {
    /// Builds a report from already computed distances.
    pub fn from_distances(per_instant: Vec<InstantDistance>, threshold: f64, skipped_zero_actual: usize) -> Self {
        let distances: Vec<f64> = per_instant.iter().map(|p| p.cosine_distance).collect();
        Self {
            fraction_below: fraction_below(&distances, threshold),
            median_distance: median(&distances),
            per_instant,
            threshold,
            skipped_zero_actual,
        }
    }
}

pub fn fraction_below(distances: &[f64], threshold: f64) -> f64 {
    if distances.is_empty() {
        return 0.0;
    }
    distances.iter().filter(|&&d| d < threshold).count() as f64 / distances.len() as f64
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Some(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    })
}

/// Scores `predictions[i]` against the observed profile at instant `i + 1`.
pub fn report(series: &ProfileSeries, predictions: &[Vector], threshold: f64) -> Result<EvalReport> {
    if predictions.len() + 1 != series.len() {
        return Err(Error::Misaligned(format!(
            "{} predictions for a series of {} instants (expected {})",
            predictions.len(),
            series.len(),
            series.len().saturating_sub(1)
        )));
    }
    let mut per_instant = Vec::with_capacity(predictions.len());
    let mut skipped = 0;
    for ((&instant, actual), predicted) in series
        .instants()
        .iter()
        .zip(series.vectors())
        .skip(1)
        .zip(predictions)
    {
        if predicted.dim() != actual.dim() {
            return Err(Error::dims(
                "report",
                format!("prediction of dim {} vs profile of dim {}", predicted.dim(), actual.dim()),
            ));
        }
        if actual.is_zero() {
            skipped += 1;
            continue;
        }
        per_instant.push(InstantDistance {
            instant,
            cosine_distance: cosine_distance(actual.as_slice(), predicted.as_slice()),
            zero_prediction: predicted.is_zero(),
        });
    }
    Ok(EvalReport::from_distances(per_instant, threshold, skipped))
}

/// Sample autocorrelation of `x` at lags `1..=max_lag`.
///
/// Uses the biased estimator `sum (x_t - m)(x_{t+k} - m) / sum (x_t - m)^2`.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let var: f64 = centered.iter().map(|v| v * v).sum();
    (1..=max_lag)
        .map(|k| {
            if k >= n || var == 0.0 {
                return 0.0;
            }
            centered[..n - k]
                .iter()
                .zip(&centered[k..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / var
        })
        .collect()
}

/// Whiteness check on a multivariate innovation sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WhitenessReport {
    pub steps: usize,
    pub max_lag: usize,
    /// `3 / sqrt(N)`
    pub bound: f64,
    pub pairs: usize,
    pub within_bound: usize,
}

impl WhitenessReport {
    pub fn fraction_within(&self) -> f64 {
        self.within_bound as f64 / self.pairs as f64
    }
}

/// Counts (component, lag) autocorrelations inside `+-3/sqrt(N)`.
pub fn innovation_whiteness(innovations: &[Vector], max_lag: usize) -> WhitenessReport {
    let n = innovations.len();
    let m = innovations.first().map_or(0, Vector::dim);
    let bound = 3.0 / (n as f64).sqrt();
    let mut within = 0;
    for c in 0..m {
        let series: Vec<f64> = innovations.iter().map(|v| v[c]).collect();
        within += autocorrelation(&series, max_lag)
            .iter()
            .filter(|r| r.abs() <= bound)
            .count();
    }
    WhitenessReport {
        steps: n,
        max_lag,
        bound,
        pairs: m * max_lag,
        within_bound: within,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn distance_cases() {
        assert_eq!(cosine_distance(&[0.3, 0.4], &[0.3, 0.4]), 0.0);
        assert_eq!(cosine_distance(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
        let expected = 1.0 - 1.0 / 2.0_f64.sqrt();
        assert!((cosine_distance(&[1.0, 1.0], &[1.0, 0.0]) - expected).abs() < 1e-15);
        assert!((cosine_distance(&[1.0, 1.0], &[1.0, 0.0]) - 0.29289).abs() < 1e-5);
        assert_eq!(cosine_distance(&[0.0, 0.0], &[1.0, 0.0]), 1.0);
        assert_eq!(cosine_distance(&[1.0, 0.0], &[-1.0, 0.0]), 2.0);
    }

    fn series(values: &[&[f64]]) -> ProfileSeries {
        ProfileSeries::new(
            "u",
            (0..values.len() as i64).map(|i| 10 * (i + 1)).collect(),
            values.iter().map(|v| Vector::new(v.to_vec()).unwrap()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn perfect_predictions() {
        let s = series(&[&[1.0, 0.0], &[0.5, 0.5], &[0.2, 0.8]]);
        let preds: Vec<Vector> = s.vectors()[1..].to_vec();
        let r = report(&s, &preds, DEFAULT_THRESHOLD).unwrap();
        assert!(r.per_instant.iter().all(|p| p.cosine_distance == 0.0));
        assert_eq!(r.fraction_below, 1.0);
        assert_eq!(r.per_instant[0].instant, 20);
    }

    #[test]
    fn single_scored_instant() {
        let s = series(&[&[1.0, 0.0], &[1.0, 1.0]]);
        let r = report(&s, &[Vector::new(vec![1.0, 0.0]).unwrap()], DEFAULT_THRESHOLD).unwrap();
        assert_eq!(r.per_instant.len(), 1);
        assert_eq!(r.median_distance, Some(r.per_instant[0].cosine_distance));
        assert_eq!(r.fraction_below, 0.0);
    }

    #[test]
    fn zero_actuals_are_skipped_and_zero_predictions_flagged() {
        let s = series(&[&[1.0, 0.0], &[0.0, 0.0], &[0.5, 0.5]]);
        let preds = vec![Vector::new(vec![0.5, 0.5]).unwrap(), Vector::zeros(2)];
        let r = report(&s, &preds, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(r.skipped_zero_actual, 1);
        assert_eq!(r.per_instant.len(), 1);
        assert!(r.per_instant[0].zero_prediction);
        assert_eq!(r.per_instant[0].cosine_distance, 1.0);
    }

    #[test]
    fn misalignment_is_rejected() {
        let s = series(&[&[1.0, 0.0], &[0.5, 0.5]]);
        assert!(report(&s, &[], DEFAULT_THRESHOLD).is_err());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn autocorrelation_of_alternating_sequence() {
        let x: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let r = autocorrelation(&x, 2);
        assert!((r[0] + 0.99).abs() < 1e-12);
        assert!((r[1] - 0.98).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn distance_is_symmetric(pairs in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..20)) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            prop_assert_eq!(cosine_distance(&a, &b), cosine_distance(&b, &a));
            let d = cosine_distance(&a, &b);
            prop_assert!((0.0..=2.0).contains(&d));
        }

        #[test]
        fn distance_is_scale_invariant(a in prop::collection::vec(0.01..1.0f64, 1..20), c in 0.01..100.0f64) {
            let scaled: Vec<f64> = a.iter().map(|x| x * c).collect();
            prop_assert!(cosine_distance(&a, &scaled).abs() <= 1e-12);
        }

        #[test]
        fn fraction_below_matches_recount(distances in prop::collection::vec(0.0..2.0f64, 1..40)) {
            let per_instant: Vec<_> = distances
                .iter()
                .enumerate()
                .map(|(i, &d)| InstantDistance { instant: i as i64, cosine_distance: d, zero_prediction: false })
                .collect();
            let r = EvalReport::from_distances(per_instant, 0.15, 0);
            let recount = r.per_instant.iter().filter(|p| p.cosine_distance < r.threshold).count();
            prop_assert_eq!(r.fraction_below, recount as f64 / r.per_instant.len() as f64);
        }
    }
}
