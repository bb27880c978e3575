use crate::error::{Error, Result};
use crate::spectral::field::Vec3c;
use crate::spectral::grid::{in_upper_half, norm2};
use num_complex::Complex64;
use std::f64::consts::PI;

/// One noise line: alpha cos(k.x) dbeta^1 + gamma sin(k.x) dbeta^2, with the
/// cos/sin functions normalized to unit L^2 norm on the box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcingMode {
    pub k: [i32; 3],
    pub alpha: [f64; 3],
    pub gamma: [f64; 3],
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl ForcingMode {
    pub fn sigma2(&self) -> f64 {
        dot(self.alpha, self.alpha) + dot(self.gamma, self.gamma)
    }

    pub fn kf(&self) -> [f64; 3] {
        [self.k[0] as f64, self.k[1] as f64, self.k[2] as f64]
    }

    pub fn wavenumber(&self) -> f64 {
        (norm2(self.k) as f64).sqrt()
    }

    /// Fourier coefficient at +k of the increment alpha c_k d1 + gamma s_k d2;
    /// the coefficient at -k is its conjugate.
    pub fn fourier_increment(&self, d1: f64, d2: f64) -> Vec3c {
        let norm = (2.0 / (2.0 * PI).powi(3)).sqrt() * 0.5;
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (d, o) in out.iter_mut().enumerate() {
            *o = Complex64::new(self.alpha[d] * d1, -self.gamma[d] * d2) * norm;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ForcingSpectrum {
    modes: Vec<ForcingMode>,
    epsilon: f64,
}

/// Validate a mode list and compute its energy input rate.
pub fn build_forcing(modes: Vec<ForcingMode>) -> Result<ForcingSpectrum> {
    for m in &modes {
        let finite = m.alpha.iter().chain(&m.gamma).all(|v| v.is_finite());
        if !finite {
            return Err(Error::Validation(format!("non-finite forcing amplitude at k = {:?}", m.k)));
        }
        if m.k == [0, 0, 0] {
            return Err(Error::Validation("forcing at k = 0 would carry mean momentum".into()));
        }
        let kn = m.wavenumber();
        for v in [m.alpha, m.gamma] {
            let tol = 1e-12 * kn * dot(v, v).sqrt();
            if dot(v, m.kf()).abs() > tol {
                return Err(Error::NonSolenoidalForcing(m.k));
            }
        }
    }
    let epsilon = 0.5 * modes.iter().map(ForcingMode::sigma2).sum::<f64>();
    Ok(ForcingSpectrum { modes, epsilon })
}

impl ForcingSpectrum {
    pub fn modes(&self) -> &[ForcingMode] {
        &self.modes
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// |alpha_k|^2 = |gamma_k|^2 for every line.
    pub fn is_homogeneous(&self) -> bool {
        self.modes.iter().all(|m| {
            let a = dot(m.alpha, m.alpha);
            let g = dot(m.gamma, m.gamma);
            (a - g).abs() <= 1e-12 * (a + g)
        })
    }

    pub fn max_wavenumber(&self) -> f64 {
        self.modes.iter().map(ForcingMode::wavenumber).fold(0.0, f64::max)
    }

    pub fn concat(&self, other: &ForcingSpectrum) -> Result<ForcingSpectrum> {
        build_forcing(self.modes.iter().chain(&other.modes).copied().collect())
    }

    /// Rescale all amplitudes so that the input rate becomes `epsilon`.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<ForcingSpectrum> {
        if self.epsilon == 0.0 {
            return Err(Error::Validation("cannot rescale a zero forcing".into()));
        }
        let s = (epsilon / self.epsilon).sqrt();
        let modes = self
            .modes
            .iter()
            .map(|m| ForcingMode {
                k: m.k,
                alpha: m.alpha.map(|v| v * s),
                gamma: m.gamma.map(|v| v * s),
            })
            .collect();
        build_forcing(modes)
    }

    /// Default spectrum: every wavevector of the upper half-space with
    /// |k|^2 <= 2, two orthogonal polarizations each, alpha = gamma, all lines
    /// of equal amplitude, scaled to input rate `epsilon`.
    pub fn low_shell(epsilon: f64) -> Result<ForcingSpectrum> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Validation(format!("preset epsilon must be positive, got {epsilon}")));
        }
        let mut ks = Vec::new();
        for kx in -1..=1 {
            for ky in -1..=1 {
                for kz in -1..=1 {
                    let k = [kx, ky, kz];
                    if in_upper_half(k) && norm2(k) <= 2 {
                        ks.push(k);
                    }
                }
            }
        }
        let lines = 2 * ks.len();
        // each line contributes sigma^2 = 2 s^2, so epsilon = lines * s^2
        let s = (epsilon / lines as f64).sqrt();
        let mut modes = Vec::with_capacity(lines);
        for k in ks {
            let (e1, e2) = polarizations(k);
            for e in [e1, e2] {
                let v = e.map(|c| c * s);
                modes.push(ForcingMode { k, alpha: v, gamma: v });
            }
        }
        build_forcing(modes)
    }
}

/// Orthonormal pair spanning the plane perpendicular to k.
pub fn polarizations(k: [i32; 3]) -> ([f64; 3], [f64; 3]) {
    let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
    let kn = dot(kf, kf).sqrt();
    let kh = kf.map(|c| c / kn);
    // axis least aligned with k
    let mut a = [0.0; 3];
    let amin = (0..3).min_by(|&i, &j| kh[i].abs().total_cmp(&kh[j].abs())).unwrap();
    a[amin] = 1.0;
    let c = cross(kh, a);
    let cn = dot(c, c).sqrt();
    let e1 = c.map(|v| v / cn);
    let e2 = cross(kh, e1);
    (e1, e2)
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}
