//! Kalman-filter tracking of user interest profiles.
//!
//! Users are points moving through a genre space, one axis per genre. Their
//! windowed viewing profiles are tracked with a constant-acceleration
//! Kalman predictor, and the gap between the predicted and the observed
//! profile drives genre-level ("macroscopic") recommendations.
//!
//! Pipeline: [`profile`] builds interest vectors from viewing events,
//! [`statespace`] assembles the model, [`kalman`] runs the predictor,
//! [`recommend`] classifies interest shifts and [`evaluate`] scores the
//! predictions. [`synth`] produces reproducible synthetic data.

pub mod cli;
pub mod config;
pub mod error;
pub mod evaluate;
pub mod kalman;
pub mod matrix;
pub mod profile;
pub mod recommend;
pub mod statespace;
pub mod synth;

pub use error::{Error, Result};
pub use kalman::{predict_only, predict_step, track, Innovation, StateEstimate, Track};
pub use matrix::{Matrix, Vector};
pub use profile::{GenreVocabulary, ProfileSeries, ViewingEvent};
pub use statespace::{assemble, initial_estimate, ModelMatrices, ModelParams, RiccatiMode};
