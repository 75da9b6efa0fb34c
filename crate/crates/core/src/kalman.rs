//! One-step-ahead Kalman predictor.
//!
//! For a prediction `x(k|k-1)` with covariance `P(k|k-1)` and a measurement
//! `z(k)`:
//!
//! ```text
//! S        = H P H^T + R
//! K        = A P H^T S^-1
//! x(k+1|k) = A x(k|k-1) + K (z(k) - H x(k|k-1))
//! P(k+1|k) = A P A^T - A P H^T S^-1 H P A^T  [+ Q]
//! ```
//!
//! `S^-1` is applied through a Cholesky solve, never materialized. The `+ Q`
//! term is controlled by [`RiccatiMode`].

use crate::error::{Error, Result};
use crate::matrix::{Matrix, Vector};
use crate::profile::ProfileSeries;
use crate::statespace::{assemble, initial_estimate, ModelMatrices, ModelParams, RiccatiMode};

/// Predicted state and its covariance at step `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEstimate {
    pub x_hat: Vector,
    pub p: Matrix,
    pub k: usize,
}

impl StateEstimate {
    /// The first `d` state components: the predicted profile.
    pub fn position(&self, d: usize) -> Vector {
        Vector::new(self.x_hat.as_slice()[..d].to_vec()).expect("state is finite")
    }
}

/// `z - H x` and its covariance `H P H^T + R`.
#[derive(Debug, Clone, PartialEq)]
pub struct Innovation {
    pub value: Vector,
    pub covariance: Matrix,
}

struct GainTerms {
    innovation_cov: Matrix,
    /// `A P`
    ap: Matrix,
    /// `H P A^T`
    hpa: Matrix,
    gain: Matrix,
}

fn gain_terms(p: &Matrix, model: &ModelMatrices) -> Result<GainTerms> {
    let n = model.state_dim();
    if p.rows() != n || p.cols() != n {
        return Err(Error::dims(
            "gain",
            format!("covariance is {}x{}, state dim is {n}", p.rows(), p.cols()),
        ));
    }
    let hp = model.h.matmul(p)?;
    let innovation_cov = hp.matmul(&model.h.transpose())?.add(&model.r)?.symmetrized()?;
    let ap = model.a.matmul(p)?;
    // P is symmetric, so (A P)^T = P A^T.
    let hpa = model.h.matmul(&ap.transpose())?;
    let gain = innovation_cov.solve_spd(&hpa)?.transpose();
    Ok(GainTerms {
        innovation_cov,
        ap,
        hpa,
        gain,
    })
}

/// Predictor gain `K = A P H^T (H P H^T + R)^-1`, of size `n x m`.
pub fn gain(p: &Matrix, model: &ModelMatrices) -> Result<Matrix> {
    Ok(gain_terms(p, model)?.gain)
}

/// Consumes measurement `z` and returns the prediction for the next step
/// together with the innovation of `z`.
pub fn predict_step(
    prev: &StateEstimate,
    z: &Vector,
    model: &ModelMatrices,
    riccati: RiccatiMode,
) -> Result<(StateEstimate, Innovation)> {
    step(prev, z, model, riccati).map_err(|e| e.at_step(prev.k))
}

fn step(
    prev: &StateEstimate,
    z: &Vector,
    model: &ModelMatrices,
    riccati: RiccatiMode,
) -> Result<(StateEstimate, Innovation)> {
    let m = model.measurement_dim();
    if z.dim() != m {
        return Err(Error::dims(
            "predict_step",
            format!("measurement of dim {} for a dim-{m} model", z.dim()),
        ));
    }
    if prev.x_hat.dim() != model.state_dim() {
        return Err(Error::dims(
            "predict_step",
            format!("state of dim {} for a dim-{} model", prev.x_hat.dim(), model.state_dim()),
        ));
    }
    let terms = gain_terms(&prev.p, model)?;
    let residual = z.sub(&model.h.mul_vec(&prev.x_hat)?)?;

    let x_next = model
        .a
        .mul_vec(&prev.x_hat)?
        .add(&terms.gain.mul_vec(&residual)?)?;

    let apa = model.a.matmul(&terms.ap.transpose())?;
    let mut p_next = apa.sub(&terms.gain.matmul(&terms.hpa)?)?;
    if riccati == RiccatiMode::Include {
        p_next = p_next.add(&model.q)?;
    }
    let next = StateEstimate {
        x_hat: x_next,
        p: p_next.symmetrized()?,
        k: prev.k + 1,
    };
    let innovation = Innovation {
        value: residual,
        covariance: terms.innovation_cov,
    };
    Ok((next, innovation))
}

/// Propagates through the dynamics without a measurement:
/// `x <- A x`, `P <- A P A^T + Q`.
pub fn predict_only(prev: &StateEstimate, model: &ModelMatrices) -> Result<StateEstimate> {
    let propagate = || -> Result<StateEstimate> {
        let ap = model.a.matmul(&prev.p)?;
        let p = model.a.matmul(&ap.transpose())?.add(&model.q)?.symmetrized()?;
        Ok(StateEstimate {
            x_hat: model.a.mul_vec(&prev.x_hat)?,
            p,
            k: prev.k + 1,
        })
    };
    propagate().map_err(|e| e.at_step(prev.k))
}

/// Prediction for one instant of a series.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackPoint {
    pub instant: i64,
    /// Prediction for this instant made from all earlier instants.
    pub estimate: StateEstimate,
    /// `None` when this instant's profile was treated as missing.
    pub innovation: Option<Innovation>,
}

/// Predictions aligned with the instants of a series, plus the forecast
/// for the instant after the last one.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub d: usize,
    pub points: Vec<TrackPoint>,
    pub forecast: StateEstimate,
}

impl Track {
    /// Predicted profile at every instant; the first is the initial estimate.
    pub fn predicted_positions(&self) -> Vec<Vector> {
        self.points.iter().map(|p| p.estimate.position(self.d)).collect()
    }

    pub fn forecast_position(&self) -> Vector {
        self.forecast.position(self.d)
    }
}

/// Runs the predictor over a profile series.
///
/// The filter starts from the first profile. Every instant is then consumed
/// in turn; all-zero profiles mean "no consumption" and only propagate the
/// dynamics unless `params.zero_as_measurement` is set.
pub fn track(series: &ProfileSeries, params: &ModelParams) -> Result<Track> {
    let model = assemble(params)?;
    track_with_model(series, params, &model)
}

pub fn track_with_model(
    series: &ProfileSeries,
    params: &ModelParams,
    model: &ModelMatrices,
) -> Result<Track> {
    let first = series
        .vectors()
        .first()
        .ok_or_else(|| Error::Misaligned("cannot track an empty series".into()))?;
    let mut estimate = initial_estimate(params, first)?;
    let mut points = Vec::with_capacity(series.len());
    for (&instant, z) in series.instants().iter().zip(series.vectors()) {
        let (next, innovation) = if z.is_zero() && !params.zero_as_measurement {
            (predict_only(&estimate, model)?, None)
        } else {
            let (next, innovation) = predict_step(&estimate, z, model, params.riccati_q)?;
            (next, Some(innovation))
        };
        points.push(TrackPoint {
            instant,
            estimate,
            innovation,
        });
        estimate = next;
    }
    Ok(Track {
        d: params.d,
        points,
        forecast: estimate,
    })
}
