//! Sphere-averaged two-point correlation from the energy spectrum.

use super::batch::Estimate;
use crate::spectral::grid::norm2;
use crate::spectral::SpectralField;
use crate::special::{j0, j1};

/// Energy per integer shell: E[m] = V sum_{|k|^2 = m} |u(k)|^2.
pub fn shell_spectrum(field: &SpectralField) -> Vec<f64> {
    let g = field.grid();
    let kk = g.kmax();
    let mut e = vec![0.0; (3 * kk * kk + 1) as usize];
    for (idx, c) in field.coeffs().iter().enumerate() {
        let m = norm2(g.wavevector(idx)) as usize;
        e[m] += c[0].norm_sqr() + c[1].norm_sqr() + c[2].norm_sqr();
    }
    let v = g.volume();
    e.iter_mut().for_each(|x| *x *= v);
    e
}

/// Gamma_bar(ell) = sum_m E[m] j0(sqrt(m) ell).
pub fn gamma_bar(spectrum: &[f64], ell: f64) -> f64 {
    spectrum.iter().enumerate().map(|(m, e)| e * j0((m as f64).sqrt() * ell)).sum()
}

/// d/d ell of gamma_bar: -sum_m E[m] sqrt(m) j1(sqrt(m) ell).
pub fn gamma_bar_prime(spectrum: &[f64], ell: f64) -> f64 {
    spectrum
        .iter()
        .enumerate()
        .map(|(m, e)| {
            let k = (m as f64).sqrt();
            -e * k * j1(k * ell)
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSet {
    pub ell: Vec<f64>,
    pub gamma_bar: Vec<Estimate>,
    pub gamma_bar_prime: Vec<Estimate>,
    pub h: Vec<Estimate>,
    /// Snapshot-averaged shell spectrum E[|k|^2]; empty when read from CSV.
    pub spectrum: Vec<f64>,
}

impl CorrelationSet {
    /// Closed-form Gamma_bar at any ell from the averaged spectrum.
    pub fn gamma_bar_at(&self, ell: f64) -> f64 {
        gamma_bar(&self.spectrum, ell)
    }
}
