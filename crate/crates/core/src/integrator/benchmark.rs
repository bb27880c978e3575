//! Exactly solvable cases: the stochastic heat equation, whose forced modes
//! are independent Ornstein-Uhlenbeck processes, and single-wavevector
//! forcing, for which the projected advection vanishes identically.

use super::{energy_report, simulate_ensemble, EnergyReport, RunConfig, Snapshot, SnapshotSink, TrajectoryStats};
use crate::error::Result;
use crate::spectral::grid::norm2;
use crate::stats::batch::{batch_length, batch_means, Estimate};

/// Stationary energy of one +-k pair against the OU prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeVariance {
    pub k: [i32; 3],
    /// <2V sum_d |u_d(k)|^2>
    pub measured: Estimate,
    /// sum over lines at k of sigma^2 / (2 nu |k|^2)
    pub predicted: f64,
}

impl ModeVariance {
    pub fn within(&self, nse: f64) -> bool {
        (self.measured.mean - self.predicted).abs() <= nse * self.measured.stderr
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuBenchReport {
    pub energy: EnergyReport,
    pub modes: Vec<ModeVariance>,
    /// Largest ||P(u.grad u)|| seen over all steps (0 in heat mode).
    pub max_nonlinear_norm: f64,
    pub steps: u64,
    pub samples: usize,
}

impl OuBenchReport {
    /// nu <||grad u||^2> = epsilon within 3 SE.
    pub fn balance_ok(&self) -> bool {
        let d = self.energy.dissipation;
        (d.mean - self.energy.epsilon).abs() <= 3.0 * d.stderr
    }

    pub fn modes_ok(&self) -> bool {
        self.modes.iter().all(|m| m.within(3.0))
    }
}

/// Distinct forced wavevectors with the OU prediction for each pair.
pub fn predicted_mode_energies(cfg: &RunConfig) -> Vec<([i32; 3], f64)> {
    let mut out: Vec<([i32; 3], f64)> = Vec::new();
    for m in cfg.forcing.modes() {
        let v = m.sigma2() / (2.0 * cfg.nu * norm2(m.k) as f64);
        match out.iter_mut().find(|(k, _)| *k == m.k) {
            Some(e) => e.1 += v,
            None => out.push((m.k, v)),
        }
    }
    out
}

struct ModeSink {
    idx: Vec<usize>,
    scale: f64,
    series: Vec<Vec<f64>>,
}

impl SnapshotSink for ModeSink {
    fn observe(&mut self, s: &Snapshot<'_>) -> Result<()> {
        let c = s.field.coeffs();
        for (out, &i) in self.series.iter_mut().zip(&self.idx) {
            out.push(self.scale * c[i].iter().map(|z| z.norm_sqr()).sum::<f64>());
        }
        Ok(())
    }
}

/// Run `cfg` as given (heat mode or not) and compare forced-mode energies
/// and the energy balance with the linear theory.
pub fn ou_benchmark(cfg: &RunConfig) -> Result<OuBenchReport> {
    let pred = predicted_mode_energies(cfg);
    let idx: Vec<usize> = pred.iter().map(|(k, _)| cfg.grid.index(*k)).collect();
    let sinks = (0..cfg.ensemble_size)
        .map(|_| ModeSink { idx: idx.clone(), scale: 2.0 * cfg.grid.volume(), series: vec![Vec::new(); idx.len()] })
        .collect();
    let runs = simulate_ensemble(cfg, sinks)?;
    let stats: Vec<TrajectoryStats> = runs.iter().map(|r| r.0.clone()).collect();
    let energy = energy_report(&stats, cfg.forcing.epsilon(), cfg.nu, cfg.sobolev_s);
    let modes = pred
        .iter()
        .enumerate()
        .map(|(j, &(k, predicted))| {
            let members: Vec<&[f64]> = runs.iter().map(|r| r.2.series[j].as_slice()).collect();
            let b = batch_length(members[0]);
            ModeVariance { k, measured: batch_means(&members, b), predicted }
        })
        .collect();
    Ok(OuBenchReport {
        energy,
        modes,
        max_nonlinear_norm: stats.iter().map(|s| s.max_nonlinear_norm).fold(0.0, f64::max),
        steps: stats.iter().map(|s| s.steps).sum(),
        samples: stats.iter().map(|s| s.energy.len()).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forcing::{build_forcing, ForcingMode, ForcingSpectrum};
    use crate::integrator::BurnIn;
    use crate::spectral::Grid;

    fn heat(nu: f64, forcing: ForcingSpectrum) -> RunConfig {
        RunConfig {
            nu,
            grid: Grid::new(8).unwrap(),
            forcing,
            dt: 0.02,
            burn_in: BurnIn::Time(5.0),
            averaging_time: 400.0,
            snapshot_stride: 1,
            seed: 3,
            ensemble_size: 2,
            nonlinear: false,
            sobolev_s: 1.5,
        }
    }

    #[test]
    fn predictions_add_lines_on_the_same_wavevector() {
        let c = heat(0.5, ForcingSpectrum::low_shell(1.0).unwrap());
        let p = predicted_mode_energies(&c);
        assert_eq!(p.len(), 9);
        // sum_k |k|^2 * prediction * nu = epsilon
        let total: f64 = p.iter().map(|(k, v)| norm2(*k) as f64 * v * c.nu).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn short_heat_run_matches_linear_theory() {
        let c = heat(0.5, ForcingSpectrum::low_shell(0.8).unwrap());
        let r = ou_benchmark(&c).unwrap();
        assert_eq!(r.max_nonlinear_norm, 0.0);
        assert!(r.balance_ok(), "{:?}", r.energy.dissipation);
        for m in &r.modes {
            assert!(m.within(4.0), "{m:?}");
        }
    }

    #[test]
    fn single_wavevector_forcing_has_no_advection() {
        let e2 = [0.0, 0.7, 0.0];
        let e3 = [0.0, 0.0, 0.7];
        let f = build_forcing(vec![ForcingMode { k: [1, 0, 0], alpha: e2, gamma: e3 }]).unwrap();
        let mut c = heat(0.3, f);
        c.nonlinear = true;
        c.averaging_time = 20.0;
        let r = ou_benchmark(&c).unwrap();
        assert!(r.max_nonlinear_norm <= 1e-12, "{}", r.max_nonlinear_norm);
    }
}
