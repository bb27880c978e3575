//! Flux identity for the third-order tensors: div_h of the four mixed
//! correlations equals div_h of int (delta u (x) delta u) delta u^k dx.
//! Both sides are paired with radial test functions on an h-lattice.

use super::profiles::Profile;
use crate::error::{Error, Result};
use crate::spectral::ops::{axis_phases, pair_slot, products, shift_field, to_physical};
use crate::spectral::{SpectralField, Transform};
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

/// Divergence-free tolerance for accepted input.
pub const SOLENOIDAL_TOL: f64 = 1e-10;

type Mat = [[f64; 3]; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct MoninLattice {
    pub spacing: f64,
    pub offset: [f64; 3],
    /// Finite-difference step of the fourth-order divergence.
    pub step: f64,
    pub profiles: Vec<Profile>,
}

impl MoninLattice {
    /// Default lattice with an offset drawn from `seed`.
    pub fn new(seed: u64) -> MoninLattice {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        MoninLattice {
            spacing: 0.35,
            offset: [u(), u(), u()],
            step: 1e-3,
            profiles: vec![Profile::bump(0.3, 0.9), Profile::bump(0.5, 1.3)],
        }
    }

    /// Lattice points inside the support of at least one profile.
    pub fn points(&self) -> Vec<[f64; 3]> {
        let r = self.profiles.iter().filter_map(|p| p.support()).map(|s| s.1).fold(0.0, f64::max);
        let m = (r / self.spacing).ceil() as i64 + 1;
        let mut out = Vec::new();
        for i in -m..=m {
            for j in -m..=m {
                for k in -m..=m {
                    let h = [
                        (i as f64 + self.offset[0]) * self.spacing,
                        (j as f64 + self.offset[1]) * self.spacing,
                        (k as f64 + self.offset[2]) * self.spacing,
                    ];
                    let l = norm(h);
                    if self.profiles.iter().any(|p| p.value(l) != 0.0) {
                        out.push(h);
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoninReport {
    /// Largest relative Frobenius mismatch over the profiles.
    pub residual: f64,
    pub per_profile: Vec<f64>,
    pub points: usize,
}

fn norm(h: [f64; 3]) -> f64 {
    (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt()
}

/// Mixed correlations M_{ab,c}(h) = int (u_a u_b)(x) u_c(x + h) dx as
/// spectral sums, returned for +h and -h.
struct Mixed {
    c: Vec<[Complex64; 18]>,
}

impl Mixed {
    fn new(field: &SpectralField, t: &Transform) -> Mixed {
        let p = products(field, t);
        let v = field.grid().volume();
        let c = field
            .coeffs()
            .iter()
            .enumerate()
            .map(|(idx, u)| {
                let mut row = [Complex64::new(0.0, 0.0); 18];
                for (s, w) in p.w.iter().enumerate() {
                    for d in 0..3 {
                        row[s * 3 + d] = w[idx].conj() * u[d] * v;
                    }
                }
                row
            })
            .collect();
        Mixed { c }
    }

    fn at(&self, field: &SpectralField, h: [f64; 3]) -> ([f64; 18], [f64; 18]) {
        let g = field.grid();
        let kk = g.kmax();
        let ph = axis_phases(g, h);
        let mut plus = [0.0; 18];
        let mut minus = [0.0; 18];
        for (idx, row) in self.c.iter().enumerate() {
            let k = g.wavevector(idx);
            let e = ph[0][(k[0] + kk) as usize] * ph[1][(k[1] + kk) as usize] * ph[2][(k[2] + kk) as usize];
            for s in 0..18 {
                let z = row[s];
                plus[s] += z.re * e.re - z.im * e.im;
                minus[s] += z.re * e.re + z.im * e.im;
            }
        }
        (plus, minus)
    }

    /// L^k_ij(h) for all i, j, k.
    fn tensor(&self, field: &SpectralField, h: [f64; 3]) -> [Mat; 3] {
        let (p, m) = self.at(field, h);
        let idx = |a: usize, b: usize, c: usize| pair_slot(a, b) * 3 + c;
        let mut out = [[[0.0; 3]; 3]; 3];
        for (k, o) in out.iter_mut().enumerate() {
            for i in 0..3 {
                for j in 0..3 {
                    o[i][j] = p[idx(i, k, j)] + p[idx(j, k, i)] - m[idx(i, k, j)] - m[idx(j, k, i)];
                }
            }
        }
        out
    }
}

/// R^k_ij(h) = int delta_i delta_j delta_k dx on the collocation grid, exact
/// because the cubic product stays below the grid Nyquist limit.
fn increment_moments(field: &SpectralField, h: [f64; 3], t: &Transform) -> [Mat; 3] {
    let d = shift_field(field, h).sub(field);
    let x = to_physical(&d, t);
    let g = field.grid();
    let dv = g.volume() / g.points() as f64;
    let mut s = [0.0f64; 10];
    for p in 0..g.points() {
        let (a, b, c) = (x[0][p], x[1][p], x[2][p]);
        s[0] += a * a * a;
        s[1] += a * a * b;
        s[2] += a * a * c;
        s[3] += a * b * b;
        s[4] += a * b * c;
        s[5] += a * c * c;
        s[6] += b * b * b;
        s[7] += b * b * c;
        s[8] += b * c * c;
        s[9] += c * c * c;
    }
    let slot = |i: usize, j: usize, k: usize| -> usize {
        let mut v = [i, j, k];
        v.sort_unstable();
        match v {
            [0, 0, 0] => 0,
            [0, 0, 1] => 1,
            [0, 0, 2] => 2,
            [0, 1, 1] => 3,
            [0, 1, 2] => 4,
            [0, 2, 2] => 5,
            [1, 1, 1] => 6,
            [1, 1, 2] => 7,
            [1, 2, 2] => 8,
            _ => 9,
        }
    };
    let mut out = [[[0.0; 3]; 3]; 3];
    for (k, o) in out.iter_mut().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                o[i][j] = s[slot(i, j, k)] * dv;
            }
        }
    }
    out
}

/// sum_k d/dh_k T^k_ij by fourth-order central differences.
fn divergence(h: [f64; 3], step: f64, eval: &dyn Fn([f64; 3]) -> [Mat; 3]) -> Mat {
    let mut div = [[0.0; 3]; 3];
    for k in 0..3 {
        let at = |m: f64| {
            let mut x = h;
            x[k] += m * step;
            eval(x)[k]
        };
        let (p2, p1, m1, m2) = (at(2.0), at(1.0), at(-1.0), at(-2.0));
        for i in 0..3 {
            for j in 0..3 {
                div[i][j] += (-p2[i][j] + 8.0 * p1[i][j] - 8.0 * m1[i][j] + m2[i][j]) / (12.0 * step);
            }
        }
    }
    div
}

fn frobenius(m: &Mat) -> f64 {
    m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

/// Pair both divergences with each lattice profile and compare.
pub fn verify_monin_identity(field: &SpectralField, lattice: &MoninLattice) -> Result<MoninReport> {
    let defect = field.divergence_defect();
    if defect > SOLENOIDAL_TOL {
        return Err(Error::NotSolenoidal(defect));
    }
    let t = Transform::new(field.grid().n());
    let mixed = Mixed::new(field, &t);
    let points = lattice.points();
    let divs: Vec<(Mat, Mat)> = points
        .par_iter()
        .map(|&h| {
            let l = divergence(h, lattice.step, &|x| mixed.tensor(field, x));
            let r = divergence(h, lattice.step, &|x| increment_moments(field, x, &t));
            (l, r)
        })
        .collect();
    let mut per_profile = Vec::with_capacity(lattice.profiles.len());
    for prof in &lattice.profiles {
        let mut sl = [[0.0; 3]; 3];
        let mut sr = [[0.0; 3]; 3];
        for (h, (l, r)) in points.iter().zip(&divs) {
            let w = prof.value(norm(*h));
            for i in 0..3 {
                for j in 0..3 {
                    sl[i][j] += w * l[i][j];
                    sr[i][j] += w * r[i][j];
                }
            }
        }
        let mut diff = sl;
        for i in 0..3 {
            for j in 0..3 {
                diff[i][j] -= sr[i][j];
            }
        }
        let scale = frobenius(&sl).max(frobenius(&sr));
        per_profile.push(if scale == 0.0 { 0.0 } else { frobenius(&diff) / scale });
    }
    let residual = per_profile.iter().cloned().fold(0.0, f64::max);
    Ok(MoninReport { residual, per_profile, points: points.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random::{random_field, random_solenoidal};
    use crate::spectral::Grid;

    #[test]
    fn lattice_points_lie_in_supports() {
        let lat = MoninLattice::new(3);
        let pts = lat.points();
        assert!(pts.len() > 50);
        for h in pts {
            let l = norm(h);
            assert!(l > 0.3 && l < 1.3);
        }
    }

    #[test]
    fn mixed_correlation_matches_grid_sum() {
        let g = Grid::new(8).unwrap();
        let u = random_solenoidal(g, 4, 1.0);
        let t = Transform::new(8);
        let mixed = Mixed::new(&u, &t);
        let h = [0.3, -0.7, 1.1];
        let (plus, minus) = mixed.at(&u, h);
        let x = to_physical(&u, &t);
        let y = to_physical(&shift_field(&u, h), &t);
        let dv = g.volume() / g.points() as f64;
        for s in 0..6 {
            let (a, b) = crate::spectral::ops::PAIRS[s];
            for c in 0..3 {
                let want: f64 = (0..g.points()).map(|p| x[a][p] * x[b][p] * y[c][p]).sum::<f64>() * dv;
                let want_m: f64 = (0..g.points()).map(|p| y[a][p] * y[b][p] * x[c][p]).sum::<f64>() * dv;
                assert!((plus[s * 3 + c] - want).abs() < 1e-10 * (1.0 + want.abs()));
                assert!((minus[s * 3 + c] - want_m).abs() < 1e-10 * (1.0 + want_m.abs()));
            }
        }
    }

    #[test]
    fn constant_field_gives_zero_on_both_sides() {
        let g = Grid::new(8).unwrap();
        let mut u = SpectralField::zeros(g);
        u.set_mode([0, 0, 0], [Complex64::new(0.4, 0.0), Complex64::new(-1.0, 0.0), Complex64::new(0.2, 0.0)]);
        let r = verify_monin_identity(&u, &MoninLattice::new(1)).unwrap();
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn random_fields_satisfy_identity() {
        let g = Grid::new(16).unwrap();
        for seed in 0..2 {
            let u = random_solenoidal(g, seed, 1.0);
            let r = verify_monin_identity(&u, &MoninLattice::new(seed)).unwrap();
            assert!(r.residual <= 1e-8, "seed {seed}: {:?}", r);
        }
    }

    #[test]
    fn identity_needs_solenoidal_input() {
        let g = Grid::new(8).unwrap();
        let u = random_field(g, 2, 1.0);
        assert!(matches!(verify_monin_identity(&u, &MoninLattice::new(0)), Err(Error::NotSolenoidal(_))));
    }

    #[test]
    fn sides_differ_pointwise() {
        // the divergences agree, the tensors themselves do not
        let g = Grid::new(8).unwrap();
        let u = random_solenoidal(g, 5, 1.0);
        let t = Transform::new(8);
        let mixed = Mixed::new(&u, &t);
        let h = [0.2, 0.5, -0.4];
        let l = mixed.tensor(&u, h);
        let r = increment_moments(&u, h, &t);
        let d: f64 = (0..3).map(|k| frobenius(&sub(&l[k], &r[k]))).sum();
        assert!(d > 1e-3);
    }

    fn sub(a: &Mat, b: &Mat) -> Mat {
        let mut o = *a;
        for i in 0..3 {
            for j in 0..3 {
                o[i][j] -= b[i][j];
            }
        }
        o
    }
}
