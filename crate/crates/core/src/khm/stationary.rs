//! Stationary balance for a test tensor eta:
//!   1/2 sum_k int d_k eta : D^k dh = 2 nu int lap eta : Gamma dh + 2 int eta : a dh.
//!
//! With u = sum u^_q e^{iq.x} and A(q) the isotropic part of the Fourier
//! transform of eta, the three terms reduce to mode sums:
//!   flux      2V sum A(|q|) Re(conj u^_q . N^_q),  N = P(u.grad u)
//!   viscous  -2 nu V sum A(|q|) |q|^2 |u^_q|^2
//!   forcing   sum over forced lines of A(|k|) sigma_k^2

use super::profiles::{composite_rule, TestTensorPair};
use crate::error::{Error, Result};
use crate::forcing::ForcingSpectrum;
use crate::integrator::Stationarity;
use crate::spectral::grid::norm2;
use crate::spectral::{Grid, SpectralField, Transform};
use crate::stats::accumulator::{sequence, StatAccumulator};
use crate::stats::batch::{batch_length, batch_means, Estimate};
use crate::stats::structure::node_integrals;
use crate::stats::SphereQuadrature;
use std::f64::consts::{E, PI};

/// The three terms for one field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KhmTerms {
    pub flux: f64,
    pub viscous: f64,
    pub forcing: f64,
}

impl KhmTerms {
    /// Left side minus right side.
    pub fn imbalance(&self) -> f64 {
        self.flux - self.viscous - self.forcing
    }
}

/// A(|q|) tabulated on the squared wavenumbers of a grid.
#[derive(Debug, Clone)]
pub struct ShellWeights {
    by_k2: Vec<f64>,
    k2: Vec<u32>,
}

impl ShellWeights {
    pub fn new(eta: &TestTensorPair, grid: &Grid) -> ShellWeights {
        let kk = grid.kmax() as usize;
        let by_k2 = (0..=3 * kk * kk).map(|m| eta.a_eta((m as f64).sqrt())).collect();
        let k2 = grid.wavevectors().map(|k| norm2(k) as u32).collect();
        ShellWeights { by_k2, k2 }
    }

    pub fn at_mode(&self, idx: usize) -> f64 {
        self.by_k2[self.k2[idx] as usize]
    }

    pub fn at_k2(&self, m: u32) -> f64 {
        self.by_k2[m as usize]
    }
}

/// Mode-sum terms; `nonlinear` is P(u.grad u), None when it vanishes.
pub fn khm_terms(
    field: &SpectralField,
    nonlinear: Option<&SpectralField>,
    weights: &ShellWeights,
    forcing: &ForcingSpectrum,
    nu: f64,
) -> KhmTerms {
    let v = field.grid().volume();
    let mut flux = 0.0;
    let mut visc = 0.0;
    let nl = nonlinear.map(|f| f.coeffs());
    for (idx, u) in field.coeffs().iter().enumerate() {
        let a = weights.at_mode(idx);
        if a == 0.0 {
            continue;
        }
        let m = weights.k2[idx] as f64;
        let e = u[0].norm_sqr() + u[1].norm_sqr() + u[2].norm_sqr();
        visc += a * m * e;
        if let Some(nl) = nl {
            let n = nl[idx];
            flux += a * (u[0].conj() * n[0] + u[1].conj() * n[1] + u[2].conj() * n[2]).re;
        }
    }
    let forcing_term = forcing.modes().iter().map(|m| weights.at_k2(norm2(m.k) as u32) * m.sigma2()).sum();
    KhmTerms { flux: 2.0 * v * flux, viscous: -2.0 * nu * v * visc, forcing: forcing_term }
}

/// The flux term of one field assembled from increment statistics:
///   2pi int ell^2 phi' S0 + 2pi int (ell^2 varphi' - 2 ell varphi) S_par + 4pi int ell varphi S0,
/// with S0 and S_par the sphere-averaged x-integrals of this field.
pub fn flux_from_increments(field: &SpectralField, eta: &TestTensorPair, panels: usize, points: usize) -> Result<f64> {
    let (lo, hi) = eta.support();
    let rule = composite_rule(lo, hi, panels, points);
    let ells: Vec<f64> = rule.iter().map(|r| r.0).collect();
    // cubic increments carry wavenumbers up to 3 sqrt(3) kmax
    let x = 3.0 * 3f64.sqrt() * field.grid().kmax() as f64 * hi;
    let quad = SphereQuadrature::build((E * x / 2.0).ceil() as usize + 24)?;
    let t = Transform::new(field.grid().n());
    let mut s0 = vec![0.0; ells.len()];
    let mut sp = vec![0.0; ells.len()];
    for (node, w) in quad.half() {
        let r = node_integrals(field, quad.nodes()[node], &ells, &t);
        for (i, v) in r.iter().enumerate() {
            s0[i] += w * v.flux / (4.0 * PI);
            sp[i] += w * v.longitudinal / (4.0 * PI);
        }
    }
    let (phi, varphi) = (eta.phi(), eta.varphi());
    Ok(rule
        .iter()
        .enumerate()
        .map(|(i, &(l, w))| {
            let (_, pd) = phi.eval(l);
            let (v, vd) = varphi.eval(l);
            w * (2.0 * PI * l * l * pd * s0[i] + 2.0 * PI * (l * l * vd - 2.0 * l * v) * sp[i] + 4.0 * PI * l * v * s0[i])
        })
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct KhmResidual {
    pub label: String,
    /// (LHS - RHS) / epsilon
    pub residual: Estimate,
    /// Same estimator on the first half of every member's series, same batch length.
    pub first_half: Estimate,
    /// first_half.stderr / residual.stderr
    pub se_ratio: f64,
    pub flux: Estimate,
    pub viscous: Estimate,
    pub forcing: f64,
    pub samples: usize,
    pub batch_len: usize,
    /// False when the viscous series fails the half-vs-half comparison.
    pub stationary: bool,
}

/// Accumulates the per-snapshot imbalance for each test tensor.
#[derive(Debug, Clone)]
pub struct KhmStationaryEstimator {
    etas: Vec<TestTensorPair>,
    weights: Vec<ShellWeights>,
    forcing: ForcingSpectrum,
    nu: f64,
    grid: Grid,
    acc: StatAccumulator,
}

impl KhmStationaryEstimator {
    pub fn new(etas: Vec<TestTensorPair>, forcing: &ForcingSpectrum, nu: f64, grid: Grid) -> KhmStationaryEstimator {
        let weights = etas.iter().map(|e| ShellWeights::new(e, &grid)).collect();
        KhmStationaryEstimator { etas, weights, forcing: forcing.clone(), nu, grid, acc: StatAccumulator::new() }
    }

    pub fn etas(&self) -> &[TestTensorPair] {
        &self.etas
    }

    pub fn observe(&mut self, member: usize, index: u64, field: &SpectralField, nonlinear: Option<&SpectralField>) -> Result<()> {
        if *field.grid() != self.grid {
            return Err(Error::GridMismatch(format!(
                "snapshot n = {} but the estimator was set up for n = {}",
                field.grid().n(),
                self.grid.n()
            )));
        }
        let seq = sequence(member, index);
        for (e, w) in self.weights.iter().enumerate() {
            let t = khm_terms(field, nonlinear, w, &self.forcing, self.nu);
            self.acc.push(("flux", e), seq, t.flux);
            self.acc.push(("viscous", e), seq, t.viscous);
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &KhmStationaryEstimator) {
        self.acc.merge(&other.acc);
    }

    pub fn finish(&self) -> Vec<KhmResidual> {
        let eps = self.forcing.epsilon();
        let norm = if eps > 0.0 { 1.0 / eps } else { 1.0 };
        self.etas
            .iter()
            .enumerate()
            .map(|(e, eta)| {
                let forcing = khm_terms(&SpectralField::zeros(self.grid), None, &self.weights[e], &self.forcing, self.nu).forcing;
                let flux = self.acc.series_by_member(("flux", e));
                let visc = self.acc.series_by_member(("viscous", e));
                let resid: Vec<Vec<f64>> = flux
                    .iter()
                    .zip(&visc)
                    .map(|(f, v)| f.iter().zip(v).map(|(f, v)| (f - v - forcing) * norm).collect())
                    .collect();
                let rr: Vec<&[f64]> = resid.iter().map(|m| m.as_slice()).collect();
                let b = rr.first().map_or(1, |m| batch_length(m));
                let residual = batch_means(&rr, b);
                let halves: Vec<&[f64]> = rr.iter().map(|m| &m[..m.len() / 2]).collect();
                let first_half = batch_means(&halves, b);
                let se_ratio = if residual.stderr > 0.0 { first_half.stderr / residual.stderr } else { f64::NAN };
                let fr: Vec<&[f64]> = flux.iter().map(|m| m.as_slice()).collect();
                let vr: Vec<&[f64]> = visc.iter().map(|m| m.as_slice()).collect();
                let stationary = vr.iter().all(|m| m.len() < 2 * b || Stationarity::of(m).converged);
                KhmResidual {
                    label: eta.label.clone(),
                    residual,
                    first_half,
                    se_ratio,
                    flux: batch_means(&fr, b),
                    viscous: batch_means(&vr, b),
                    forcing,
                    samples: rr.iter().map(|m| m.len()).sum(),
                    batch_len: b,
                    stationary,
                }
            })
            .collect()
    }
}
