//! One pass over a snapshot computing every configured statistic.

use super::accumulator::{sequence, StatAccumulator};
use super::batch::{batch_length, batch_means, jackknife, Estimate};
use super::correlation::{gamma_bar, gamma_bar_prime, shell_spectrum, CorrelationSet};
use super::flatness::{shell_sample, FlatnessRow, FlatnessTable};
use super::isotropy::{deviation, IsotropyTable};
use super::quadrature::SphereQuadrature;
use super::structure::{check_ell, node_integrals, StructureFunctionTable};
use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField, Transform};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct StatsPlan {
    pub ells: Vec<f64>,
    pub quadrature: SphereQuadrature,
    /// S0, S_par and H along the quadrature directions.
    pub increments: bool,
    /// Keep per-direction longitudinal moments for the isotropy deviation.
    pub isotropy: bool,
    pub correlations: bool,
    pub flatness_p: Vec<u32>,
    pub shells: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StatsTables {
    pub structure: Option<StructureFunctionTable>,
    pub correlation: Option<CorrelationSet>,
    pub isotropy: Option<IsotropyTable>,
    pub flatness: Option<FlatnessTable>,
}

#[derive(Debug, Clone)]
pub struct StatsEngine {
    plan: StatsPlan,
    grid: Grid,
    transform: Transform,
    flat_transforms: Vec<Transform>,
    half: Vec<(usize, f64)>,
    acc: StatAccumulator,
    spectrum_len: usize,
}

impl StatsEngine {
    pub fn new(plan: StatsPlan, grid: Grid) -> Result<StatsEngine> {
        for &l in &plan.ells {
            check_ell(l)?;
        }
        if plan.isotropy && !plan.increments {
            return Err(Error::Validation("isotropy requires increment statistics".into()));
        }
        for &p in &plan.flatness_p {
            if p < 2 {
                return Err(Error::Validation(format!("flatness order p = {p} must be >= 2")));
            }
        }
        for &s in &plan.shells {
            if s == 0 || !s.is_power_of_two() {
                return Err(Error::InvalidShell(s));
            }
        }
        let half = plan.quadrature.half();
        let kk = grid.kmax();
        Ok(StatsEngine {
            plan,
            grid,
            transform: Transform::new(grid.n()),
            flat_transforms: Vec::new(),
            half,
            acc: StatAccumulator::new(),
            spectrum_len: (3 * kk * kk + 1) as usize,
        })
    }

    pub fn plan(&self) -> &StatsPlan {
        &self.plan
    }

    pub fn accumulator(&self) -> &StatAccumulator {
        &self.acc
    }

    /// Record one snapshot of ensemble member `member`.
    pub fn observe(&mut self, member: usize, index: u64, field: &SpectralField) -> Result<()> {
        if *field.grid() != self.grid {
            return Err(Error::GridMismatch(format!(
                "snapshot n = {} but statistics were set up for n = {}",
                field.grid().n(),
                self.grid.n()
            )));
        }
        let seq = sequence(member, index);
        let nl = self.plan.ells.len();
        let four_pi = 4.0 * PI;
        if self.plan.increments {
            let mut s0 = vec![0.0; nl];
            let mut spar = vec![0.0; nl];
            let mut h = vec![0.0; nl];
            let mut abs3 = vec![0.0; nl];
            let nodes = self.plan.quadrature.nodes();
            for (hi, &(node, w)) in self.half.iter().enumerate() {
                let r = node_integrals(field, nodes[node], &self.plan.ells, &self.transform);
                for (li, v) in r.iter().enumerate() {
                    s0[li] += w * v.flux / four_pi;
                    spar[li] += w * v.longitudinal / four_pi;
                    h[li] += w * v.h / four_pi;
                    abs3[li] += w * v.abs3 / four_pi;
                    if self.plan.isotropy {
                        self.acc.push(("node", li * self.half.len() + hi), seq, v.longitudinal);
                    }
                }
            }
            for li in 0..nl {
                self.acc.push(("s0", li), seq, s0[li]);
                self.acc.push(("spar", li), seq, spar[li]);
                self.acc.push(("h", li), seq, h[li]);
                self.acc.push(("abs3", li), seq, abs3[li]);
            }
        }
        if self.plan.correlations {
            let e = shell_spectrum(field);
            for (li, &l) in self.plan.ells.iter().enumerate() {
                self.acc.push(("gamma", li), seq, gamma_bar(&e, l));
                self.acc.push(("gamma_p", li), seq, gamma_bar_prime(&e, l));
            }
            for (m, v) in e.iter().enumerate() {
                self.acc.push(("spectrum", m), seq, *v);
            }
        }
        let np = self.plan.flatness_p.len();
        for (si, &shell) in self.plan.shells.clone().iter().enumerate() {
            if np == 0 {
                break;
            }
            match shell_sample(field, shell, &self.plan.flatness_p, &mut self.flat_transforms)? {
                Some((num, den)) => {
                    for (pi, v) in num.iter().enumerate() {
                        self.acc.push(("flat_num", si * np + pi), seq, *v);
                    }
                    self.acc.push(("flat_den", si), seq, den);
                }
                None => continue,
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &StatsEngine) {
        assert_eq!(self.plan, other.plan, "merging engines with different plans");
        self.acc.merge(&other.acc);
    }

    pub fn samples(&self) -> usize {
        let key = if self.plan.increments {
            ("s0", 0)
        } else if self.plan.correlations {
            ("spectrum", 0)
        } else {
            ("flat_den", 0)
        };
        self.acc.count(key) as usize
    }

    fn estimate(&self, key: (&'static str, usize)) -> Estimate {
        let members = self.acc.series_by_member(key);
        let refs: Vec<&[f64]> = members.iter().map(|m| m.as_slice()).collect();
        let b = refs.first().map_or(1, |m| batch_length(m));
        batch_means(&refs, b)
    }

    /// Assemble tables; `epsilon` normalizes the isotropy metric.
    pub fn finish(&self, epsilon: f64) -> StatsTables {
        let nl = self.plan.ells.len();
        let ell = self.plan.ells.clone();
        let mut out = StatsTables::default();
        if self.plan.increments {
            out.structure = Some(StructureFunctionTable {
                ell: ell.clone(),
                s0: (0..nl).map(|i| self.estimate(("s0", i))).collect(),
                spar: (0..nl).map(|i| self.estimate(("spar", i))).collect(),
                envelope: (0..nl).map(|i| self.estimate(("abs3", i)).mean).collect(),
                samples: self.samples(),
            });
        }
        if self.plan.increments && self.plan.isotropy {
            out.isotropy = Some(self.isotropy(epsilon));
        }
        if self.plan.correlations || self.plan.increments {
            let spectrum: Vec<f64> = if self.plan.correlations {
                (0..self.spectrum_len).map(|m| self.estimate(("spectrum", m)).mean).collect()
            } else {
                Vec::new()
            };
            let est = |name, i| if self.plan.correlations { self.estimate((name, i)) } else { Estimate::default() };
            let hs = |i| if self.plan.increments { self.estimate(("h", i)) } else { Estimate::default() };
            out.correlation = Some(CorrelationSet {
                ell: ell.clone(),
                gamma_bar: (0..nl).map(|i| est("gamma", i)).collect(),
                gamma_bar_prime: (0..nl).map(|i| est("gamma_p", i)).collect(),
                h: (0..nl).map(hs).collect(),
                spectrum,
            });
        }
        if !self.plan.flatness_p.is_empty() && !self.plan.shells.is_empty() {
            out.flatness = Some(self.flatness());
        }
        out
    }

    fn isotropy(&self, epsilon: f64) -> IsotropyTable {
        let nh = self.half.len();
        let weights: Vec<f64> = self.half.iter().map(|&(_, w)| w).collect();
        let mut t = IsotropyTable { ell: self.plan.ells.clone(), deviation: vec![], normalized: vec![], noise_floor: vec![] };
        for (li, &l) in self.plan.ells.iter().enumerate() {
            let series: Vec<Vec<Vec<f64>>> =
                (0..nh).map(|hi| self.acc.series_by_member(("node", li * nh + hi))).collect();
            let refs: Vec<Vec<&[f64]>> =
                series.iter().map(|ms| ms.iter().map(|m| m.as_slice()).collect()).collect();
            let spar = self.acc.series_by_member(("spar", li));
            let b = spar.first().map_or(1, |m| batch_length(m));
            let dev = jackknife(&refs, b, |means| deviation(&weights, means));
            let floor = refs
                .iter()
                .zip(&weights)
                .map(|(ms, w)| w * batch_means(ms, b).stderr)
                .sum::<f64>()
                / (4.0 * PI);
            let scale = if epsilon > 0.0 { 1.0 / (epsilon * l.abs()) } else { 0.0 };
            t.deviation.push(dev);
            t.normalized.push(dev.scale(scale));
            t.noise_floor.push(floor);
        }
        t
    }

    fn flatness(&self) -> FlatnessTable {
        let np = self.plan.flatness_p.len();
        let mut rows = Vec::new();
        for (si, &shell) in self.plan.shells.iter().enumerate() {
            let den = self.acc.series_by_member(("flat_den", si));
            for (pi, &p) in self.plan.flatness_p.iter().enumerate() {
                let num = self.acc.series_by_member(("flat_num", si * np + pi));
                let dmean: f64 = den.iter().flatten().sum::<f64>();
                let value = if den.is_empty() || dmean <= 0.0 {
                    None
                } else {
                    let dref: Vec<&[f64]> = den.iter().map(|m| m.as_slice()).collect();
                    let nref: Vec<&[f64]> = num.iter().map(|m| m.as_slice()).collect();
                    let b = batch_length(dref[0]);
                    Some(jackknife(&[nref, dref], b, |m| m[0] / m[1].powi(p as i32)))
                };
                rows.push(FlatnessRow { shell, p, value });
            }
        }
        FlatnessTable { rows }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random::random_solenoidal;
    use crate::spectral::ops::shift_field;

    fn plan(order: usize) -> StatsPlan {
        StatsPlan {
            ells: vec![0.3, 0.9, 1.7],
            quadrature: SphereQuadrature::build(order).unwrap(),
            increments: true,
            isotropy: true,
            correlations: true,
            flatness_p: vec![2],
            shells: vec![1, 2],
        }
    }

    #[test]
    fn zero_field_tables_are_zero() {
        let g = Grid::new(8).unwrap();
        let mut e = StatsEngine::new(plan(6), g).unwrap();
        for i in 0..4 {
            e.observe(0, i, &SpectralField::zeros(g)).unwrap();
        }
        let t = e.finish(1.0);
        let s = t.structure.unwrap();
        assert!(s.s0.iter().chain(&s.spar).all(|v| v.mean == 0.0));
        assert!(t.isotropy.unwrap().deviation.iter().all(|d| d.mean == 0.0));
        assert!(t.flatness.unwrap().rows.iter().all(|r| r.value.is_none()));
    }

    #[test]
    fn antipodal_oddness() {
        let g = Grid::new(8).unwrap();
        let u = random_solenoidal(g, 8, 1.0);
        let mut p = plan(8);
        p.ells = vec![0.4, -0.4, 1.1, -1.1];
        let mut e = StatsEngine::new(p, g).unwrap();
        e.observe(0, 0, &u).unwrap();
        let s = e.finish(1.0).structure.unwrap();
        for i in [0, 2] {
            assert!((s.s0[i].mean + s.s0[i + 1].mean).abs() < 1e-13 * s.s0[i].mean.abs().max(1e-12));
            assert!((s.spar[i].mean + s.spar[i + 1].mean).abs() < 1e-13 * s.spar[i].mean.abs().max(1e-12));
        }
    }

    #[test]
    fn quadrature_exactness_plateau() {
        // trigonometric integrands: once the rule resolves them, doubling changes nothing
        let g = Grid::new(8).unwrap();
        let u = random_solenoidal(g, 9, 1.0);
        let run = |order| {
            let mut e = StatsEngine::new(plan(order), g).unwrap();
            e.observe(0, 0, &u).unwrap();
            e.finish(1.0).structure.unwrap()
        };
        let a = run(40);
        let b = run(80);
        for i in 0..3 {
            assert!((a.s0[i].mean - b.s0[i].mean).abs() < 1e-12 * b.envelope[i]);
            assert!((a.spar[i].mean - b.spar[i].mean).abs() < 1e-12 * b.envelope[i]);
        }
    }

    #[test]
    fn rejects_bad_plans() {
        let g = Grid::new(8).unwrap();
        let mut p = plan(4);
        p.ells.push(3.2);
        assert!(matches!(StatsEngine::new(p, g), Err(Error::EllOutOfRange(_))));
        let mut p = plan(4);
        p.shells = vec![3];
        assert!(StatsEngine::new(p, g).is_err());
    }

    #[test]
    fn merge_in_any_order_matches_single_pass() {
        let g = Grid::new(8).unwrap();
        let fields: Vec<SpectralField> = (0..6).map(|s| random_solenoidal(g, s, 1.0)).collect();
        let mut whole = StatsEngine::new(plan(6), g).unwrap();
        for (i, f) in fields.iter().enumerate() {
            whole.observe(0, i as u64, f).unwrap();
        }
        let mut a = StatsEngine::new(plan(6), g).unwrap();
        let mut b = a.clone();
        for (i, f) in fields.iter().enumerate() {
            if i % 2 == 0 { a.observe(0, i as u64, f).unwrap() } else { b.observe(0, i as u64, f).unwrap() }
        }
        b.merge(&a);
        assert_eq!(b.finish(1.0), whole.finish(1.0));
    }

    #[test]
    fn symmetrized_statistic_has_no_deviation() {
        // pairing u with -u makes every directional third moment vanish exactly
        let g = Grid::new(8).unwrap();
        let mut e = StatsEngine::new(plan(8), g).unwrap();
        for s in 0..8u64 {
            let u = random_solenoidal(g, 100 + s, 1.0);
            e.observe(0, 2 * s, &u).unwrap();
            e.observe(0, 2 * s + 1, &u.scale(-1.0)).unwrap();
        }
        let iso = e.finish(1.0).isotropy.unwrap();
        for d in &iso.deviation {
            assert!(d.mean < 1e-12);
        }
    }

    #[test]
    fn single_mode_field_is_anisotropic() {
        let g = Grid::new(8).unwrap();
        let mut u = SpectralField::zeros(g);
        use num_complex::Complex64;
        u.set_mode([1, 0, 0], [Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.2), Complex64::new(0.0, 0.0)]);
        u.set_mode([0, 1, 0], [Complex64::new(0.3, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.4)]);
        u.set_mode([1, 1, 0], [Complex64::new(0.2, 0.1), Complex64::new(-0.2, -0.1), Complex64::new(0.3, 0.0)]);
        let mut p = plan(10);
        p.ells = vec![0.8];
        let mut e = StatsEngine::new(p.clone(), g).unwrap();
        e.observe(0, 0, &u).unwrap();
        let iso = e.finish(1.0).isotropy.unwrap();
        // brute force: every node of the full rule, direction by direction
        let t = Transform::new(8);
        let q = &p.quadrature;
        let m: Vec<f64> = q.nodes().iter().map(|&n| node_integrals(&u, n, &[0.8], &t)[0].longitudinal).collect();
        let want = deviation(q.weights(), &m);
        assert!(want > 1e-3);
        assert!((iso.deviation[0].mean - want).abs() < 1e-10 * want);
        let _ = shift_field(&u, [0.0; 3]);
    }
}
