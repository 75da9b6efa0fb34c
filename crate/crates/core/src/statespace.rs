//! Constant-acceleration state-space model over a `d`-dimensional genre space.
//!
//! The state stacks all positions, then all velocities, then all
//! accelerations: `[x; x'; x'']`, length `3d`. The transition is the block
//! matrix
//!
//! ```text
//!     | aI  TI  T^2/2 I |
//! A = | 0   aI  TI      |
//!     | 0   0   aI      |
//! ```
//!
//! with `a = alpha`, and the measurement `H = [I | 0 | 0]` reads positions only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kalman::StateEstimate;
use crate::matrix::{Matrix, Vector};

/// Whether the covariance recursion adds the process noise `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiccatiMode {
    /// `P+ = A P A^T - A P H^T S^-1 H P A^T + Q`
    #[default]
    Include,
    /// Same recursion without `+ Q`; the covariance decays to zero.
    Omit,
}

impl std::str::FromStr for RiccatiMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "include" => Ok(Self::Include),
            "omit" => Ok(Self::Omit),
            other => Err(format!("expected 'include' or 'omit', got '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub d: usize,
    pub alpha: f64,
    /// Mean interval between two observed positions.
    pub t_step: f64,
    /// Process-noise variance per state component.
    pub q: f64,
    /// Measurement-noise variance per genre.
    pub r: f64,
    /// Initial covariance scale.
    pub p0: f64,
    pub riccati_q: RiccatiMode,
    /// Condition on all-zero profiles instead of treating them as missing.
    pub zero_as_measurement: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            d: 44,
            alpha: 1.0,
            t_step: 1.0,
            q: 1e-3,
            r: 1e-2,
            p0: 1.0,
            riccati_q: RiccatiMode::Include,
            zero_as_measurement: false,
        }
    }
}

impl ModelParams {
    pub fn with_dim(d: usize) -> Self {
        Self {
            d,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::param("d", "must be at least 1"));
        }
        if !self.alpha.is_finite() {
            return Err(Error::param("alpha", "must be finite"));
        }
        if !(self.t_step > 0.0 && self.t_step.is_finite()) {
            return Err(Error::param("t_step", format!("must be > 0, got {}", self.t_step)));
        }
        if !(self.q >= 0.0 && self.q.is_finite()) {
            return Err(Error::param("q", format!("must be >= 0, got {}", self.q)));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::param("r", format!("must be > 0, got {}", self.r)));
        }
        if !(self.p0 > 0.0 && self.p0.is_finite()) {
            return Err(Error::param("p0", format!("must be > 0, got {}", self.p0)));
        }
        Ok(())
    }
}

/// The four matrices of the linear-Gaussian model.
///
/// [`assemble`] builds the constant-acceleration model; [`ModelMatrices::new`]
/// accepts any conforming set, e.g. scalar reductions for analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMatrices {
    pub a: Matrix,
    pub h: Matrix,
    pub q: Matrix,
    pub r: Matrix,
}

impl ModelMatrices {
    pub fn new(a: Matrix, h: Matrix, q: Matrix, r: Matrix) -> Result<Self> {
        let n = a.rows();
        let m = h.rows();
        if !a.is_square() {
            return Err(Error::dims("ModelMatrices", "A must be square"));
        }
        if h.cols() != n {
            return Err(Error::dims("ModelMatrices", format!("H has {} columns, state has {n}", h.cols())));
        }
        if q.rows() != n || q.cols() != n {
            return Err(Error::dims("ModelMatrices", format!("Q must be {n}x{n}")));
        }
        if r.rows() != m || r.cols() != m {
            return Err(Error::dims("ModelMatrices", format!("R must be {m}x{m}")));
        }
        r.cholesky()?;
        Ok(Self { a, h, q, r })
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn measurement_dim(&self) -> usize {
        self.h.rows()
    }
}

/// The `3d x 3d` block transition matrix.
pub fn transition(d: usize, alpha: f64, t_step: f64) -> Result<Matrix> {
    let eye = Matrix::identity(d);
    let zero = Matrix::zeros(d, d);
    let diag = eye.scale(alpha)?;
    let vel = eye.scale(t_step)?;
    let acc = eye.scale(0.5 * t_step * t_step)?;
    Matrix::block3x3([&diag, &vel, &acc, &zero, &diag, &vel, &zero, &zero, &diag])
}

/// Builds `A`, `H`, `Q = q I` and `R = r I` from the parameters.
pub fn assemble(params: &ModelParams) -> Result<ModelMatrices> {
    params.validate()?;
    let d = params.d;
    let a = transition(d, params.alpha, params.t_step)?;

    let mut h = vec![0.0; d * 3 * d];
    for i in 0..d {
        h[i * 3 * d + i] = 1.0;
    }
    let h = Matrix::from_row_major(d, 3 * d, h)?;
    let q = Matrix::identity(3 * d).scale(params.q)?;
    let r = Matrix::identity(d).scale(params.r)?;
    ModelMatrices::new(a, h, q, r)
}

/// Prior for the first step: position at the first measurement, zero
/// velocity and acceleration, covariance `p0 I`.
pub fn initial_estimate(params: &ModelParams, first_measurement: &Vector) -> Result<StateEstimate> {
    params.validate()?;
    let d = params.d;
    if first_measurement.dim() != d {
        return Err(Error::dims(
            "initial_estimate",
            format!("measurement of dim {} for a dim-{d} model", first_measurement.dim()),
        ));
    }
    let mut x = first_measurement.as_slice().to_vec();
    x.resize(3 * d, 0.0);
    Ok(StateEstimate {
        x_hat: Vector::new(x)?,
        p: Matrix::identity(3 * d).scale(params.p0)?,
        k: 0,
    })
}
