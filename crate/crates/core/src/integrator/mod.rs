//! Exponential Euler-Maruyama integration of the Galerkin-truncated
//! stochastic Navier-Stokes system.

pub mod benchmark;
pub mod checkpoint;

use crate::error::{Error, Result};
use crate::forcing::{ForcingSpectrum, NoiseDraw, NoiseStream};
use crate::spectral::grid::norm2;
use crate::spectral::ops::{advection_from_products, leray_project, products};
use crate::spectral::{Grid, SpectralField, Transform};
use crate::stats::batch::{batch_length, batch_means, Estimate};
use std::time::Instant;

/// Largest admissible u_max dt k_max before a step is split.
pub const CFL_LIMIT: f64 = 0.5;
/// Burn-in length in units of the estimated relaxation time when `BurnIn::Auto`.
pub const AUTO_BURN_IN_TURNOVERS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BurnIn {
    Time(f64),
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub nu: f64,
    pub grid: Grid,
    pub forcing: ForcingSpectrum,
    pub dt: f64,
    pub burn_in: BurnIn,
    pub averaging_time: f64,
    pub snapshot_stride: usize,
    pub seed: u64,
    pub ensemble_size: usize,
    /// false integrates the stochastic heat equation (no advection).
    pub nonlinear: bool,
    /// Exponent s > 1 of the reported regularity norm.
    pub sobolev_s: f64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Validation(format!("{name} must be positive and finite, got {v}")))
            }
        };
        pos("nu", self.nu)?;
        pos("dt", self.dt)?;
        pos("averaging", self.averaging_time)?;
        if let BurnIn::Time(t) = self.burn_in {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::Validation(format!("burn_in must be >= 0, got {t}")));
            }
        }
        if self.snapshot_stride == 0 {
            return Err(Error::Validation("stride must be >= 1".into()));
        }
        if self.ensemble_size == 0 {
            return Err(Error::Validation("ensemble must be >= 1".into()));
        }
        if !(self.sobolev_s > 1.0 && self.sobolev_s.is_finite()) {
            return Err(Error::Validation(format!("s must exceed 1, got {}", self.sobolev_s)));
        }
        for m in self.forcing.modes() {
            if !self.grid.contains(m.k) {
                return Err(Error::UnresolvedForcing(m.k));
            }
        }
        if self.averaging_steps() == 0 {
            return Err(Error::Validation("averaging time shorter than one step".into()));
        }
        Ok(())
    }

    pub fn averaging_steps(&self) -> u64 {
        (self.averaging_time / self.dt).round() as u64
    }
}

/// sqrt((1 - e^{-2 lam dt}) / (2 lam dt)): ratio of the exact stochastic
/// convolution's standard deviation to that of the raw increment.
fn noise_gain(lam_dt: f64) -> f64 {
    if lam_dt < 1e-8 {
        (1.0 - lam_dt + lam_dt * lam_dt * 2.0 / 3.0).sqrt()
    } else {
        (-(-2.0 * lam_dt).exp_m1() / (2.0 * lam_dt)).sqrt()
    }
}

/// Result of one integrator call.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: SpectralField,
    /// ||P(u.grad u)|| of the incoming state (0 in heat mode).
    pub nonlinear_norm: f64,
    /// Number of substeps taken (1 when the CFL bound held).
    pub substeps: u32,
    pub cfl: f64,
}

pub struct Integrator {
    cfg: RunConfig,
    transform: Transform,
    k2: Vec<f64>,
    decay: Vec<f64>,
    forced: Vec<(usize, usize)>,
    gain: Vec<f64>,
}

impl Integrator {
    pub fn new(cfg: &RunConfig) -> Result<Integrator> {
        cfg.validate()?;
        let g = cfg.grid;
        let k2: Vec<f64> = g.wavevectors().map(|k| norm2(k) as f64).collect();
        let decay = k2.iter().map(|&k2| (-cfg.nu * k2 * cfg.dt).exp()).collect();
        let forced: Vec<(usize, usize)> = cfg
            .forcing
            .modes()
            .iter()
            .map(|m| {
                let i = g.index(m.k);
                (i, g.mirror(i))
            })
            .collect();
        let gain = forced.iter().map(|&(i, _)| noise_gain(cfg.nu * k2[i] * cfg.dt)).collect();
        Ok(Integrator { cfg: cfg.clone(), transform: Transform::new(g.n()), k2, decay, forced, gain })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    /// Projected advection and the largest pointwise speed.
    pub fn nonlinearity(&self, state: &SpectralField) -> (SpectralField, f64) {
        let p = products(state, &self.transform);
        (leray_project(&advection_from_products(self.cfg.grid, &p)), p.max_speed)
    }

    /// One exponential step of length `noise.dt` with a precomputed
    /// projected nonlinearity (None in heat mode).
    pub fn step_with(&self, state: &SpectralField, pn: Option<&SpectralField>, noise: &NoiseDraw) -> SpectralField {
        let dt = noise.dt;
        let same_dt = dt == self.cfg.dt;
        let nu = self.cfg.nu;
        let mut out = state.clone();
        {
            let c = out.coeffs_mut();
            let pn = pn.map(|f| f.coeffs());
            for (idx, v) in c.iter_mut().enumerate() {
                let e = if same_dt { self.decay[idx] } else { (-nu * self.k2[idx] * dt).exp() };
                for d in 0..3 {
                    let mut z = v[d];
                    if let Some(pn) = pn {
                        z -= pn[idx][d] * dt;
                    }
                    v[d] = z * e;
                }
            }
            for (line, (&(ip, im), m)) in self.forced.iter().zip(self.cfg.forcing.modes()).enumerate() {
                let g = if same_dt { self.gain[line] } else { noise_gain(nu * self.k2[ip] * dt) };
                let [d1, d2] = noise.increments[line];
                let f = m.fourier_increment(d1 * g, d2 * g);
                for d in 0..3 {
                    c[ip][d] += f[d];
                    c[im][d] += f[d].conj();
                }
            }
        }
        leray_project(&out)
    }

    /// Advance by one configured step, splitting it when the CFL bound fails.
    pub fn advance(&self, state: &SpectralField, step: u64, noise: &NoiseStream) -> Result<StepOutcome> {
        self.advance_from(state, None, step, noise)
    }

    /// As [`Integrator::advance`], reusing `nonlinearity(state)` when the caller already has it.
    pub fn advance_from(
        &self,
        state: &SpectralField,
        known: Option<(SpectralField, f64)>,
        step: u64,
        noise: &NoiseStream,
    ) -> Result<StepOutcome> {
        let lines = self.forced.len();
        let dt = self.cfg.dt;
        if !self.cfg.nonlinear {
            let draw = noise.draw(step, 0, lines, dt);
            let next = self.step_with(state, None, &draw);
            return finish(next, step, 0.0, 1, 0.0);
        }
        let (pn, speed) = known.unwrap_or_else(|| self.nonlinearity(state));
        let nonlinear_norm = pn.energy().sqrt();
        let kmax = self.cfg.grid.kmax() as f64;
        let cfl = speed * dt * kmax;
        if cfl <= CFL_LIMIT {
            let draw = noise.draw(step, 0, lines, dt);
            let next = self.step_with(state, Some(&pn), &draw);
            return finish(next, step, nonlinear_norm, 1, cfl);
        }
        let m = (cfl / CFL_LIMIT).ceil() as u32;
        let h = dt / m as f64;
        let mut cur = self.step_with(state, Some(&pn), &noise.draw(step, 1, lines, h));
        for s in 2..=m {
            let (pn, _) = self.nonlinearity(&cur);
            cur = self.step_with(&cur, Some(&pn), &noise.draw(step, s, lines, h));
        }
        finish(cur, step, nonlinear_norm, m, cfl)
    }
}

fn finish(state: SpectralField, step: u64, nonlinear_norm: f64, substeps: u32, cfl: f64) -> Result<StepOutcome> {
    if !state.is_finite() {
        return Err(Error::BlowUp { step });
    }
    Ok(StepOutcome { state, nonlinear_norm, substeps, cfl })
}

/// One emitted snapshot of a trajectory.
#[derive(Debug)]
pub struct Snapshot<'a> {
    pub member: usize,
    /// Snapshot number within the member, from 0.
    pub index: u64,
    pub step: u64,
    pub time: f64,
    pub field: &'a SpectralField,
    /// P(u.grad u) of `field`; None in heat mode.
    pub nonlinear: Option<&'a SpectralField>,
}

/// Consumer of the snapshot stream.
pub trait SnapshotSink {
    fn observe(&mut self, snap: &Snapshot<'_>) -> Result<()>;
}

impl<F: FnMut(&Snapshot<'_>) -> Result<()>> SnapshotSink for F {
    fn observe(&mut self, snap: &Snapshot<'_>) -> Result<()> {
        self(snap)
    }
}

/// First-half / second-half comparison of the mean energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stationarity {
    pub first_half: Estimate,
    pub second_half: Estimate,
    pub converged: bool,
}

impl Stationarity {
    pub fn of(series: &[f64]) -> Stationarity {
        let h = series.len() / 2;
        let b = batch_length(series);
        let first = batch_means(&[&series[..h]], b);
        let second = batch_means(&[&series[h..]], b);
        let pooled = first.stderr.hypot(second.stderr);
        let converged = (first.mean - second.mean).abs() <= 2.0 * pooled;
        Stationarity { first_half: first, second_half: second, converged }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStats {
    pub member: usize,
    pub times: Vec<f64>,
    /// ||u||^2 at each snapshot.
    pub energy: Vec<f64>,
    /// nu ||grad u||^2 at each snapshot.
    pub dissipation: Vec<f64>,
    /// || |grad|^s u ||^2 at each snapshot.
    pub sobolev: Vec<f64>,
    pub burn_in_time: f64,
    pub burn_in_steps: u64,
    pub steps: u64,
    pub extra_substeps: u64,
    pub max_nonlinear_norm: f64,
    pub wall_clock_s: f64,
    pub stationarity: Stationarity,
}

/// Relaxation-time estimate min(L/U, 1/(nu k_f^2)) with L = 1/k_f, k_f the
/// smallest forced wavenumber and U the rms velocity.
pub fn turnover_time(cfg: &RunConfig, mean_energy: f64) -> f64 {
    let kf = cfg
        .forcing
        .modes()
        .iter()
        .map(|m| m.wavenumber())
        .fold(f64::INFINITY, f64::min);
    let kf = if kf.is_finite() { kf } else { 1.0 };
    let viscous = 1.0 / (cfg.nu * kf * kf);
    let urms = (mean_energy / (3.0 * cfg.grid.volume())).sqrt();
    if urms > 0.0 {
        viscous.min(1.0 / (kf * urms))
    } else {
        viscous
    }
}

/// Integrate member `member` from rest through burn-in, then feed every
/// `snapshot_stride`-th state of the averaging window to `sink`.
/// Returns the energy series and the final state.
pub fn simulate_stationary(
    cfg: &RunConfig,
    member: usize,
    sink: &mut dyn SnapshotSink,
) -> Result<(TrajectoryStats, SpectralField)> {
    let start = Instant::now();
    let integ = Integrator::new(cfg)?;
    let noise = NoiseStream::new(cfg.seed, member as u64);
    let mut state = SpectralField::zeros(cfg.grid);
    let mut step: u64 = 0;
    let mut extra = 0u64;
    let mut max_nl = 0.0f64;

    // burn-in
    let mut energy_sum = 0.0;
    let mut energy_n = 0u64;
    loop {
        let t = step as f64 * cfg.dt;
        let target = match cfg.burn_in {
            BurnIn::Time(b) => b,
            BurnIn::Auto => {
                // average over the second half of the burn-in so far
                let e = if energy_n > 0 { energy_sum / energy_n as f64 } else { 0.0 };
                AUTO_BURN_IN_TURNOVERS * turnover_time(cfg, e)
            }
        };
        if t >= target - 0.5 * cfg.dt {
            break;
        }
        let out = integ.advance(&state, step, &noise)?;
        extra += (out.substeps - 1) as u64;
        max_nl = max_nl.max(out.nonlinear_norm);
        state = out.state;
        step += 1;
        if matches!(cfg.burn_in, BurnIn::Auto) {
            // restart the running mean each time the step count doubles
            if step.is_power_of_two() {
                energy_sum = 0.0;
                energy_n = 0;
            }
            energy_sum += state.energy();
            energy_n += 1;
        }
    }
    let burn_in_steps = step;
    let burn_in_time = step as f64 * cfg.dt;

    let n_avg = cfg.averaging_steps();
    let stride = cfg.snapshot_stride as u64;
    let cap = (n_avg / stride + 1) as usize;
    let mut times = Vec::with_capacity(cap);
    let mut energy = Vec::with_capacity(cap);
    let mut dissipation = Vec::with_capacity(cap);
    let mut sobolev = Vec::with_capacity(cap);
    let mut index = 0u64;
    let mut known = None;
    for i in 1..=n_avg {
        let out = integ.advance_from(&state, known.take(), step, &noise)?;
        extra += (out.substeps - 1) as u64;
        max_nl = max_nl.max(out.nonlinear_norm);
        state = out.state;
        step += 1;
        if i % stride == 0 {
            let time = step as f64 * cfg.dt;
            times.push(time);
            energy.push(state.energy());
            dissipation.push(cfg.nu * state.enstrophy());
            sobolev.push(state.sobolev_norm2(cfg.sobolev_s));
            if cfg.nonlinear {
                known = Some(integ.nonlinearity(&state));
            }
            let nonlinear = known.as_ref().map(|(pn, _)| pn);
            sink.observe(&Snapshot { member, index, step, time, field: &state, nonlinear })?;
            index += 1;
        }
    }
    let stationarity = Stationarity::of(&energy);
    let stats = TrajectoryStats {
        member,
        times,
        energy,
        dissipation,
        sobolev,
        burn_in_time,
        burn_in_steps,
        steps: step,
        extra_substeps: extra,
        max_nonlinear_norm: max_nl,
        wall_clock_s: start.elapsed().as_secs_f64(),
        stationarity,
    };
    Ok((stats, state))
}

/// Run every ensemble member (in parallel on the current rayon pool) and
/// return results in member order.
pub fn simulate_ensemble<S: SnapshotSink + Send>(
    cfg: &RunConfig,
    sinks: Vec<S>,
) -> Result<Vec<(TrajectoryStats, SpectralField, S)>> {
    use rayon::prelude::*;
    assert_eq!(sinks.len(), cfg.ensemble_size, "one sink per member");
    sinks
        .into_par_iter()
        .enumerate()
        .map(|(member, mut sink)| {
            let (stats, state) = simulate_stationary(cfg, member, &mut sink)?;
            Ok((stats, state, sink))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub epsilon: f64,
    pub nu: f64,
    pub s: f64,
    /// nu <||grad u||^2>
    pub dissipation: Estimate,
    /// <||u||^2>
    pub energy: Estimate,
    /// nu <||u||^2>
    pub wad: Estimate,
    /// (nu <||grad u||^2> - epsilon) / epsilon
    pub balance_residual: Estimate,
    /// nu <|| |grad|^s u ||^2>
    pub regularity_norm: Estimate,
    /// (nu <||u||^2> / epsilon)^(1/2)
    pub ell_d: f64,
    pub samples: usize,
}

pub fn energy_report(stats: &[TrajectoryStats], eps: f64, nu: f64, s: f64) -> EnergyReport {
    let est = |f: &dyn Fn(&TrajectoryStats) -> &[f64]| -> Estimate {
        let members: Vec<&[f64]> = stats.iter().map(f).collect();
        let b = members.first().map_or(1, |m| batch_length(m));
        batch_means(&members, b)
    };
    let dissipation = est(&|t| &t.dissipation);
    let energy = est(&|t| &t.energy);
    let sob = est(&|t| &t.sobolev);
    let samples = stats.iter().map(|t| t.energy.len()).sum();
    let balance_residual = if eps > 0.0 {
        Estimate::new((dissipation.mean - eps) / eps, dissipation.stderr / eps)
    } else {
        Estimate::new(dissipation.mean, dissipation.stderr)
    };
    let wad = energy.scale(nu);
    let ell_d = if eps > 0.0 { (wad.mean / eps).max(0.0).sqrt() } else { 0.0 };
    EnergyReport {
        epsilon: eps,
        nu,
        s,
        dissipation,
        energy,
        wad,
        balance_residual,
        regularity_norm: sob.scale(nu),
        ell_d,
        samples,
    }
}
