//! Test-only oracles, independent of the recursive filter.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

use kalrec::{Matrix, ModelMatrices, Vector};

pub fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn to_na_vec(v: &Vector) -> DVector<f64> {
    DVector::from_column_slice(v.as_slice())
}

/// Conditional mean and covariance of `X_K` given `Z_0 .. Z_{K-1}`, where
/// `X_0 ~ N(x0, p0)`, `X_{j+1} = A X_j + w_j`, `Z_j = H X_j + v_j`, computed by
/// stacking every random input into one Gaussian vector and conditioning
/// the joint distribution directly.
pub fn batch_conditional(
    model: &ModelMatrices,
    x0: &Vector,
    p0: &Matrix,
    measurements: &[Vector],
) -> (DVector<f64>, DMatrix<f64>) {
    let a = to_na(&model.a);
    let h = to_na(&model.h);
    let q = to_na(&model.q);
    let r = to_na(&model.r);
    let n = a.nrows();
    let m = h.nrows();
    let k = measurements.len();

    // xi = [X0; w_0 .. w_{K-1}; v_0 .. v_{K-1}]
    let dim = n + k * n + k * m;
    let mut mean = DVector::zeros(dim);
    mean.rows_mut(0, n).copy_from(&to_na_vec(x0));
    let mut cov = DMatrix::zeros(dim, dim);
    cov.view_mut((0, 0), (n, n)).copy_from(&to_na(p0));
    for j in 0..k {
        let w = n + j * n;
        cov.view_mut((w, w), (n, n)).copy_from(&q);
        let v = n + k * n + j * m;
        cov.view_mut((v, v), (m, m)).copy_from(&r);
    }

    // state_map[j] maps xi to X_j.
    let mut state_map = Vec::with_capacity(k + 1);
    let mut current = DMatrix::zeros(n, dim);
    current.view_mut((0, 0), (n, n)).copy_from(&DMatrix::identity(n, n));
    state_map.push(current.clone());
    for j in 0..k {
        let mut next = &a * &current;
        let w = n + j * n;
        let mut block = next.view_mut((0, w), (n, n));
        block += DMatrix::<f64>::identity(n, n);
        current = next;
        state_map.push(current.clone());
    }

    let mut meas_map = DMatrix::zeros(k * m, dim);
    for (j, map) in state_map.iter().take(k).enumerate() {
        let mut rows = &h * map;
        let v = n + k * n + j * m;
        let mut block = rows.view_mut((0, v), (m, m));
        block += DMatrix::<f64>::identity(m, m);
        meas_map.rows_mut(j * m, m).copy_from(&rows);
    }

    let target = &state_map[k];
    let z = DVector::from_iterator(k * m, measurements.iter().flat_map(|v| v.as_slice().iter().copied()));
    let s_xz = target * &cov * meas_map.transpose();
    let s_zz = &meas_map * &cov * meas_map.transpose();
    let s_xx = target * &cov * target.transpose();
    let lu = s_zz.lu();
    let resid = z - &meas_map * &mean;
    let cond_mean = target * &mean + &s_xz * lu.solve(&resid).expect("joint measurement covariance is invertible");
    let cond_cov = &s_xx - &s_xz * lu.solve(&s_xz.transpose()).expect("invertible");
    (cond_mean, cond_cov)
}

pub fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
}
