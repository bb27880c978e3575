use super::spectrum::ForcingSpectrum;
use crate::spectral::Grid;
use crate::special::{j0, j1_over_x};
use crate::stats::quadrature::SphereQuadrature;

pub type Tensor = [[f64; 3]; 3];

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// a(h) = 1/2 sum_k cos(k.h) (alpha alpha^T + gamma gamma^T).
pub fn tensor_at(spec: &ForcingSpectrum, h: [f64; 3]) -> Tensor {
    let mut a = [[0.0; 3]; 3];
    for m in spec.modes() {
        let c = 0.5 * dot(m.kf(), h).cos();
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] += c * (m.alpha[i] * m.alpha[j] + m.gamma[i] * m.gamma[j]);
            }
        }
    }
    a
}

/// a(h) as half the grid integral over x of the noise covariance C(x, x + h).
/// Exact whenever 2|k_i| < n for every forced k.
pub fn tensor_from_grid(spec: &ForcingSpectrum, grid: &Grid, h: [f64; 3]) -> Tensor {
    let v = grid.volume();
    // c_k, s_k carry sqrt(2/V); a carries a further 1/2
    let norm = 1.0 / v;
    let dv = v / grid.points() as f64;
    let mut a = [[0.0; 3]; 3];
    for m in spec.modes() {
        let k = m.kf();
        let (mut cc, mut ss) = (0.0, 0.0);
        for p in 0..grid.points() {
            let x = grid.point(p);
            let kx = dot(k, x);
            let kxh = kx + dot(k, h);
            cc += kx.cos() * kxh.cos();
            ss += kx.sin() * kxh.sin();
        }
        cc *= norm * dv;
        ss *= norm * dv;
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] += cc * m.alpha[i] * m.alpha[j] + ss * m.gamma[i] * m.gamma[j];
            }
        }
    }
    a
}

/// Sphere averages of the noise covariance on an increment-length grid.
#[derive(Debug, Clone)]
pub struct ForcingCovariance {
    spectrum: ForcingSpectrum,
    quadrature: SphereQuadrature,
    pub ell: Vec<f64>,
    pub a_bar: Vec<f64>,
    pub a_tilde: Vec<f64>,
    pub a_zero_trace: f64,
}

pub fn covariance_profiles(
    spec: &ForcingSpectrum,
    quad: &SphereQuadrature,
    ell_grid: &[f64],
) -> ForcingCovariance {
    let mut cov = ForcingCovariance {
        spectrum: spec.clone(),
        quadrature: quad.clone(),
        ell: ell_grid.to_vec(),
        a_bar: Vec::new(),
        a_tilde: Vec::new(),
        a_zero_trace: 0.0,
    };
    cov.a_bar = ell_grid.iter().map(|&l| cov.a_bar_at(l)).collect();
    cov.a_tilde = ell_grid.iter().map(|&l| cov.a_tilde_at(l)).collect();
    let a0 = tensor_at(spec, [0.0; 3]);
    cov.a_zero_trace = a0[0][0] + a0[1][1] + a0[2][2];
    cov
}

impl ForcingCovariance {
    pub fn spectrum(&self) -> &ForcingSpectrum {
        &self.spectrum
    }

    pub fn epsilon(&self) -> f64 {
        self.spectrum.epsilon()
    }

    /// (1/4pi) int tr a(ell n) dS = 1/2 sum sigma^2 j0(|k| ell).
    pub fn a_bar_at(&self, ell: f64) -> f64 {
        0.5 * self.spectrum.modes().iter().map(|m| m.sigma2() * j0(m.wavenumber() * ell)).sum::<f64>()
    }

    /// (1/4pi) int n.a(ell n).n dS by sphere quadrature.
    pub fn a_tilde_at(&self, ell: f64) -> f64 {
        let modes = self.spectrum.modes();
        self.quadrature.mean(|n| {
            modes
                .iter()
                .map(|m| {
                    let c = (ell * dot(m.kf(), n)).cos();
                    0.5 * c * (dot(n, m.alpha).powi(2) + dot(n, m.gamma).powi(2))
                })
                .sum()
        })
    }

    /// Closed form of a_tilde for solenoidal amplitudes: 1/2 sum sigma^2 j1(x)/x, x = |k| ell.
    pub fn a_tilde_closed(&self, ell: f64) -> f64 {
        0.5 * self.spectrum.modes().iter().map(|m| m.sigma2() * j1_over_x(m.wavenumber() * ell)).sum::<f64>()
    }
}

/// Sphere-rule degree that resolves cos(k.ell n) for every forced k up to
/// `ell_max` well below round-off, never less than `base`.
pub fn covariance_degree(spec: &ForcingSpectrum, ell_max: f64, base: usize) -> usize {
    let x = spec.max_wavenumber() * ell_max.abs();
    base.max((std::f64::consts::E * x).ceil() as usize + 24)
}
