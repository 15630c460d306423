//! Linear running-time model `M(I, I_m, O_m) = β₀ + β₁·I + β₂·I_m + β₃·O_m`
//! and its least-squares calibration.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    /// Fixed cost.
    pub beta0: f64,
    /// Cost per tuple of total input.
    pub beta1: f64,
    /// Cost per input tuple on the most loaded worker.
    pub beta2: f64,
    /// Cost per output tuple on the most loaded worker.
    pub beta3: f64,
}

impl Default for CostModel {
    /// Per-tuple units with a 4:1 input-to-output cost ratio on the worker.
    fn default() -> Self {
        Self { beta0: 0.0, beta1: 1.0, beta2: 4.0, beta3: 1.0 }
    }
}

impl CostModel {
    pub fn new(beta0: f64, beta1: f64, beta2: f64, beta3: f64) -> Result<Self> {
        let all = [beta0, beta1, beta2, beta3];
        if all.iter().any(|b| !b.is_finite()) || all[1..].iter().any(|b| *b < 0.0) {
            return Err(Error::InvalidArgument("cost model coefficients must be finite and β₁..β₃ non-negative".into()));
        }
        Ok(Self { beta0, beta1, beta2, beta3 })
    }

    pub fn estimate(&self, input: f64, max_input: f64, max_output: f64) -> f64 {
        self.beta0 + self.beta1 * input + self.beta2 * max_input + self.beta3 * max_output
    }

    fn from_array(b: [f64; 4]) -> Self {
        Self { beta0: b[0], beta1: b[1], beta2: b[2], beta3: b[3] }
    }
}

/// One benchmark run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub input: f64,
    pub max_input: f64,
    pub max_output: f64,
    pub seconds: f64,
}

/// Ordinary least squares fit. Slopes that come out negative are fixed at 0
/// and the remaining terms refit.
pub fn calibrate(observations: &[Observation]) -> Result<CostModel> {
    if observations.len() < 4 {
        return Err(Error::TooFewObservations { needed: 4, got: observations.len() });
    }
    let rows: Vec<[f64; 4]> = observations.iter().map(|o| [1.0, o.input, o.max_input, o.max_output]).collect();
    let y: Vec<f64> = observations.iter().map(|o| o.seconds).collect();
    if rows.iter().flatten().chain(&y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("observations must be finite".into()));
    }

    let mut active = vec![0usize, 1, 2, 3];
    loop {
        let coef = least_squares(&rows, &y, &active)?;
        let mut beta = [0.0; 4];
        for (k, &c) in active.iter().zip(&coef) {
            beta[*k] = c;
        }
        let worst = (1..4).filter(|k| beta[*k] < 0.0).min_by(|a, b| beta[*a].total_cmp(&beta[*b]));
        match worst {
            Some(k) => active.retain(|c| *c != k),
            None => return Ok(CostModel::from_array(beta)),
        }
    }
}

/// Solves `min ‖X[:, cols]·b − y‖` by Householder QR on column-scaled data.
fn least_squares(rows: &[[f64; 4]], y: &[f64], cols: &[usize]) -> Result<Vec<f64>> {
    let (n, k) = (rows.len(), cols.len());
    let scale: Vec<f64> = cols
        .iter()
        .map(|&c| rows.iter().map(|r| r[c].abs()).fold(0.0, f64::max))
        .collect();
    if let Some(pos) = scale.iter().position(|s| *s == 0.0) {
        return Err(Error::RankDeficient(format!("model term {} is zero in every observation", cols[pos])));
    }
    // Column-major copy of the scaled design matrix.
    let mut a: Vec<Vec<f64>> = cols.iter().zip(&scale).map(|(&c, s)| rows.iter().map(|r| r[c] / s).collect()).collect();
    let mut b = y.to_vec();
    let mut diag = vec![0.0; k];
    for j in 0..k {
        let norm = libm::sqrt(a[j][j..].iter().map(|v| v * v).sum::<f64>());
        if norm < 1e-10 * libm::sqrt(n as f64) {
            return Err(Error::RankDeficient(format!(
                "model term {} is a linear combination of the others over these observations",
                cols[j]
            )));
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        diag[j] = alpha;
        if vnorm2 > 0.0 {
            for col in a.iter_mut().skip(j + 1) {
                let dot: f64 = v.iter().zip(&col[j..]).map(|(p, q)| p * q).sum();
                let f = 2.0 * dot / vnorm2;
                for (x, vi) in col[j..].iter_mut().zip(&v) {
                    *x -= f * vi;
                }
            }
            let dot: f64 = v.iter().zip(&b[j..]).map(|(p, q)| p * q).sum();
            let f = 2.0 * dot / vnorm2;
            for (x, vi) in b[j..].iter_mut().zip(&v) {
                *x -= f * vi;
            }
        }
    }
    let mut coef = vec![0.0; k];
    for j in (0..k).rev() {
        let mut acc = b[j];
        for m in j + 1..k {
            acc -= a[m][j] * coef[m];
        }
        coef[j] = acc / diag[j];
    }
    Ok(coef.iter().zip(&scale).map(|(c, s)| c / s).collect())
}
