//! Pairing of the pressure flux with an isotropic test tensor. For
//! solenoidal fields the pairing vanishes.

use super::profiles::{composite_rule, TestTensorPair};
use crate::error::Result;
use crate::spectral::ops::{pressure_from_products, products};
use crate::spectral::{SpectralField, Transform};
use crate::stats::SphereQuadrature;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::{E, PI};

const RADIAL_PANELS: usize = 8;
const RADIAL_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureCheck {
    /// int eta : P dh
    pub value: f64,
    /// 2 ||p|| ||u|| 4pi int ell^2 |Phi| d ell
    pub bound: f64,
    /// |value| / (||p|| ||u||), 0 when either norm vanishes
    pub residual: f64,
}

/// Sphere-rule degree resolving n sin(q.n ell) for every retained q.
pub fn pressure_sphere_degree(field: &SpectralField, ell_max: f64) -> usize {
    let kk = field.grid().kmax() as f64;
    let x = 3f64.sqrt() * kk * ell_max;
    (E * x / 2.0).ceil() as usize + 24
}

/// Radial (ell, weight, ell^2 Phi(ell)) nodes used by the check.
pub fn radial_nodes(eta: &TestTensorPair) -> Vec<(f64, f64, f64)> {
    let (lo, hi) = eta.support();
    composite_rule(lo, hi, RADIAL_PANELS, RADIAL_POINTS)
        .into_iter()
        .map(|(l, w)| (l, w, l * l * eta.big_phi(l)))
        .collect()
}

/// Spectral pressure p^ = -k_i k_j (u_i u_j)^ / |k|^2.
pub fn pressure(field: &SpectralField, t: &Transform) -> Vec<Complex64> {
    pressure_from_products(*field.grid(), &products(field, t))
}

/// -int Phi(ell) ell^2 [ int_S2 int p(x) (u(x + ell n) - u(x - ell n)).n dx dS ] d ell
/// by Gauss-Legendre in ell and the sphere rule in n.
pub fn verify_pressure_cancellation(field: &SpectralField, eta: &TestTensorPair) -> Result<PressureCheck> {
    let g = field.grid();
    let t = Transform::new(g.n());
    let p = pressure(field, &t);
    let v = g.volume();
    let radial = radial_nodes(eta);
    let (_, hi) = eta.support();
    let quad = SphereQuadrature::build(pressure_sphere_degree(field, hi))?;
    // modes carrying both pressure and velocity
    let active: Vec<([f64; 3], Complex64, [Complex64; 3])> = field
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(i, _)| p[*i].norm_sqr() > 0.0)
        .map(|(i, u)| {
            let k = g.wavevector(i);
            ([k[0] as f64, k[1] as f64, k[2] as f64], p[i].conj(), *u)
        })
        .collect();
    // the integrand is even in n, so half the rule with doubled weights suffices
    let half = quad.half();
    let per_node: Vec<f64> = half
        .par_iter()
        .map(|&(node, w)| {
            let n = quad.nodes()[node];
            let mut acc = 0.0;
            for (q, cp, u) in &active {
                let un = u[0] * n[0] + u[1] * n[1] + u[2] * n[2];
                // Re(conj p (u.n) 2i) = -2 Im(conj p (u.n))
                let c = -2.0 * (cp * un).im;
                if c == 0.0 {
                    continue;
                }
                let s = q[0] * n[0] + q[1] * n[1] + q[2] * n[2];
                let mut inner = 0.0;
                for &(l, wl, phi) in &radial {
                    inner += wl * phi * (s * l).sin();
                }
                acc += c * inner;
            }
            w * acc
        })
        .collect();
    let value = -v * per_node.iter().sum::<f64>();
    let pn = (v * p.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
    let un = field.energy().sqrt();
    let phi_abs: f64 = radial.iter().map(|&(_, w, phi)| w * phi.abs()).sum::<f64>() * 4.0 * PI;
    let bound = 2.0 * pn * un * phi_abs;
    let residual = if pn * un > 0.0 { value.abs() / (pn * un) } else { 0.0 };
    Ok(PressureCheck { value, bound, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::j1;
    use crate::spectral::random::{random_field, random_solenoidal};
    use crate::spectral::Grid;

    /// Closed sphere integral: int_S2 n sin(q.n ell) dS = 4pi j1(|q| ell) q^.
    fn oracle(field: &SpectralField, eta: &TestTensorPair) -> f64 {
        let g = field.grid();
        let t = Transform::new(g.n());
        let p = pressure(field, &t);
        let radial = radial_nodes(eta);
        let mut s = 0.0;
        for (i, u) in field.coeffs().iter().enumerate() {
            let k = g.wavevector(i);
            let kn = ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt();
            if kn == 0.0 {
                continue;
            }
            let qu = (u[0] * k[0] as f64 + u[1] * k[1] as f64 + u[2] * k[2] as f64) / kn;
            let radial_int: f64 = radial.iter().map(|&(l, w, phi)| w * phi * j1(kn * l)).sum::<f64>() * 4.0 * PI;
            s += (p[i].conj() * qu * Complex64::new(0.0, 2.0)).re * radial_int;
        }
        -g.volume() * s
    }

    #[test]
    fn zero_field_is_exactly_zero() {
        let u = SpectralField::zeros(Grid::new(8).unwrap());
        let r = verify_pressure_cancellation(&u, &TestTensorPair::library()[0]).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn solenoidal_fields_cancel() {
        let g = Grid::new(16).unwrap();
        let u = random_solenoidal(g, 7, 1.0);
        for eta in TestTensorPair::library() {
            let r = verify_pressure_cancellation(&u, &eta).unwrap();
            assert!(r.residual < 1e-8, "{}: {:?}", eta.label, r);
        }
    }

    #[test]
    fn divergent_field_matches_closed_sphere_integral() {
        let g = Grid::new(8).unwrap();
        let u = random_field(g, 3, 1.0);
        for eta in TestTensorPair::library() {
            let r = verify_pressure_cancellation(&u, &eta).unwrap();
            let want = oracle(&u, &eta);
            assert!((r.value - want).abs() < 1e-10 * r.bound, "{}: {} vs {}", eta.label, r.value, want);
            assert!(r.residual > 1e-3, "{}: {:?}", eta.label, r);
        }
    }
}
