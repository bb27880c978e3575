//! Third-order increment statistics along quadrature directions.

use super::batch::Estimate;
use crate::error::{Error, Result};
use crate::spectral::fft::with_buffers;
use crate::spectral::ops::axis_phases;
use crate::spectral::{SpectralField, Transform};
use num_complex::Complex64;
use std::f64::consts::PI;

/// x-integrals for one direction n and one increment length ell.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NodeIntegrals {
    /// int |delta|^2 (delta . n) dx
    pub flux: f64,
    /// int (delta . n)^3 dx
    pub longitudinal: f64,
    /// int (n . u)(x) (n n : grad u)(x + ell n) dx
    pub h: f64,
    /// int |delta|^3 dx
    pub abs3: f64,
}

pub fn check_ell(ell: f64) -> Result<()> {
    if !ell.is_finite() || ell.abs() >= PI {
        return Err(Error::EllOutOfRange(ell));
    }
    Ok(())
}

/// Increment integrals of `field` along unit vector `n` for every ell,
/// with delta = u(x + ell n) - u(x) formed exactly in spectral space.
pub fn node_integrals(field: &SpectralField, n: [f64; 3], ells: &[f64], t: &Transform) -> Vec<NodeIntegrals> {
    let g = field.grid();
    let kk = g.kmax();
    let dv = g.volume() / g.points() as f64;
    let coeffs = field.coeffs();
    let kn: Vec<f64> = g
        .wavevectors()
        .map(|k| k[0] as f64 * n[0] + k[1] as f64 * n[1] + k[2] as f64 * n[2])
        .collect();
    let un: Vec<Complex64> = coeffs.iter().map(|c| c[0] * n[0] + c[1] * n[1] + c[2] * n[2]).collect();
    let m = g.mode_count();
    let side = g.side();
    let i = Complex64::new(0.0, 1.0);
    with_buffers(3, |b| {
        let (ubuf, rest) = b.split_first_mut().unwrap();
        let (dxy, rest) = rest.split_first_mut().unwrap();
        let dzg = &mut rest[0];
        t.inverse_into(kk, &un, None, ubuf);
        let mut cx = vec![Complex64::new(0.0, 0.0); m];
        let mut cy = cx.clone();
        let mut cz = cx.clone();
        let mut cg = cx.clone();
        ells.iter()
            .map(|&ell| {
                let ph = axis_phases(g, [ell * n[0], ell * n[1], ell * n[2]]);
                for idx in 0..m {
                    let (a, r) = (idx / (side * side), idx % (side * side));
                    let p = ph[0][a] * ph[1][r / side] * ph[2][r % side];
                    let d = p - 1.0;
                    let c = coeffs[idx];
                    cx[idx] = c[0] * d;
                    cy[idx] = c[1] * d;
                    cz[idx] = c[2] * d;
                    cg[idx] = i * kn[idx] * un[idx] * p;
                }
                t.inverse_into(kk, &cx, Some(&cy), dxy);
                t.inverse_into(kk, &cz, Some(&cg), dzg);
                let mut out = NodeIntegrals::default();
                for ((a, b), u) in dxy.iter().zip(dzg.iter()).zip(ubuf.iter()) {
                    let (dx, dy, dz, gg) = (a.re, a.im, b.re, b.im);
                    let dn = dx * n[0] + dy * n[1] + dz * n[2];
                    let d2 = dx * dx + dy * dy + dz * dz;
                    out.flux += d2 * dn;
                    out.longitudinal += dn * dn * dn;
                    out.h += u.re * gg;
                    out.abs3 += d2 * d2.sqrt();
                }
                out.flux *= dv;
                out.longitudinal *= dv;
                out.h *= dv;
                out.abs3 *= dv;
                out
            })
            .collect()
    })
}

/// u at an arbitrary point by explicit Fourier summation.
pub fn eval_direct(field: &SpectralField, x: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (idx, c) in field.coeffs().iter().enumerate() {
        let k = field.grid().wavevector(idx);
        let ph = Complex64::from_polar(1.0, k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2]);
        for d in 0..3 {
            out[d] += (c[d] * ph).re;
        }
    }
    out
}

/// (n . grad)(n . u) at an arbitrary point by explicit Fourier summation.
fn eval_dn_un(field: &SpectralField, x: [f64; 3], n: [f64; 3]) -> f64 {
    let mut s = 0.0;
    for (idx, c) in field.coeffs().iter().enumerate() {
        let k = field.grid().wavevector(idx);
        let kn = k[0] as f64 * n[0] + k[1] as f64 * n[1] + k[2] as f64 * n[2];
        let un = c[0] * n[0] + c[1] * n[1] + c[2] * n[2];
        let ph = Complex64::from_polar(1.0, k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2]);
        s += (Complex64::new(0.0, kn) * un * ph).re;
    }
    s
}

/// Oracle for [`node_integrals`]: every field value summed mode by mode on
/// the collocation grid. Cost grows like points x modes; meant for 8^3.
pub fn node_integrals_direct(field: &SpectralField, n: [f64; 3], ell: f64) -> NodeIntegrals {
    let g = field.grid();
    let dv = g.volume() / g.points() as f64;
    let mut out = NodeIntegrals::default();
    for p in 0..g.points() {
        let x = g.point(p);
        let y = [x[0] + ell * n[0], x[1] + ell * n[1], x[2] + ell * n[2]];
        let ux = eval_direct(field, x);
        let uy = eval_direct(field, y);
        let d = [uy[0] - ux[0], uy[1] - ux[1], uy[2] - ux[2]];
        let dn = d[0] * n[0] + d[1] * n[1] + d[2] * n[2];
        let d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        out.flux += d2 * dn * dv;
        out.longitudinal += dn.powi(3) * dv;
        out.abs3 += d2.powf(1.5) * dv;
        out.h += (ux[0] * n[0] + ux[1] * n[1] + ux[2] * n[2]) * eval_dn_un(field, y, n) * dv;
    }
    out
}

/// Averaged structure functions with batch-means standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureFunctionTable {
    pub ell: Vec<f64>,
    pub s0: Vec<Estimate>,
    pub spar: Vec<Estimate>,
    /// Sphere-and-snapshot mean of int |delta|^3, an upper envelope for |S0|.
    pub envelope: Vec<f64>,
    pub samples: usize,
}

impl StructureFunctionTable {
    pub fn s0_over_ell(&self) -> Vec<Estimate> {
        self.s0.iter().zip(&self.ell).map(|(e, l)| e.scale(1.0 / l)).collect()
    }

    pub fn spar_over_ell(&self) -> Vec<Estimate> {
        self.spar.iter().zip(&self.ell).map(|(e, l)| e.scale(1.0 / l)).collect()
    }
}
