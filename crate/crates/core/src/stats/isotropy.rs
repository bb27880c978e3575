//! Direction dependence of the longitudinal third moment.
//!
//! Only the observable (delta . n)^3 is examined, with modulus gamma(ell) = ell.

use super::batch::Estimate;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct IsotropyTable {
    pub ell: Vec<f64>,
    /// (1/4pi) sum_i w_i |m_i - S_par|
    pub deviation: Vec<Estimate>,
    /// deviation / (epsilon ell)
    pub normalized: Vec<Estimate>,
    /// (1/4pi) sum_i w_i se(m_i): the deviation expected from noise alone.
    pub noise_floor: Vec<f64>,
}

/// Weighted mean absolute deviation of per-direction means from their sphere mean.
pub fn deviation(weights: &[f64], means: &[f64]) -> f64 {
    let total = 4.0 * PI;
    let s: f64 = weights.iter().zip(means).map(|(w, m)| w * m).sum::<f64>() / total;
    weights.iter().zip(means).map(|(w, m)| w * (m - s).abs()).sum::<f64>() / total
}
