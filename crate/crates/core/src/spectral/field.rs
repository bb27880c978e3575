use super::grid::{norm2, Grid};
use num_complex::Complex64;

pub type Vec3c = [Complex64; 3];

pub const ZERO3: Vec3c = [Complex64 { re: 0.0, im: 0.0 }; 3];

/// Real periodic vector field stored as Fourier coefficients on the retained
/// cube of its grid: u(x) = sum_k c(k) e^{i k.x}.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Vec3c>,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> SpectralField {
        SpectralField { grid, coeffs: vec![ZERO3; grid.mode_count()] }
    }

    pub fn from_coeffs(grid: Grid, coeffs: Vec<Vec3c>) -> SpectralField {
        assert_eq!(coeffs.len(), grid.mode_count(), "coefficient count does not match grid");
        SpectralField { grid, coeffs }
    }

    /// Set c(k) and c(-k) = conj c(k) together.
    pub fn set_mode(&mut self, k: [i32; 3], c: Vec3c) {
        let i = self.grid.index(k);
        let j = self.grid.mirror(i);
        if i == j {
            self.coeffs[i] = [c[0].re.into(), c[1].re.into(), c[2].re.into()];
        } else {
            self.coeffs[i] = c;
            self.coeffs[j] = [c[0].conj(), c[1].conj(), c[2].conj()];
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Vec3c] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Vec3c] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Vec3c> {
        self.coeffs
    }

    pub fn get(&self, k: [i32; 3]) -> Vec3c {
        if self.grid.contains(k) {
            self.coeffs[self.grid.index(k)]
        } else {
            ZERO3
        }
    }

    pub fn component(&self, c: usize) -> Vec<Complex64> {
        self.coeffs.iter().map(|v| v[c]).collect()
    }

    /// ||u||^2 = integral of |u|^2 over the box.
    pub fn energy(&self) -> f64 {
        self.weighted_norm2(|_| 1.0)
    }

    /// ||grad u||^2.
    pub fn enstrophy(&self) -> f64 {
        self.weighted_norm2(|k2| k2)
    }

    /// || |grad|^s u ||^2.
    pub fn sobolev_norm2(&self, s: f64) -> f64 {
        self.weighted_norm2(|k2| if k2 == 0.0 { 0.0 } else { k2.powf(s) })
    }

    fn weighted_norm2(&self, w: impl Fn(f64) -> f64) -> f64 {
        let v = self.grid.volume();
        let mut acc = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let k2 = norm2(self.grid.wavevector(i)) as f64;
            let m = c[0].norm_sqr() + c[1].norm_sqr() + c[2].norm_sqr();
            if m != 0.0 {
                acc += w(k2) * m;
            }
        }
        v * acc
    }

    /// Real L^2 inner product over the box.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        assert_eq!(self.grid, other.grid);
        let acc: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a[0].conj() * b[0] + a[1].conj() * b[1] + a[2].conj() * b[2]).re)
            .sum();
        self.grid.volume() * acc
    }

    /// max_k |k.c(k)| / (|k| |c(k)|) over nonzero modes, zero for the zero field.
    pub fn divergence_defect(&self) -> f64 {
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = self.grid.wavevector(i);
            let kc = k[0] as f64 * c[0] + k[1] as f64 * c[1] + k[2] as f64 * c[2];
            let kn = (norm2(k) as f64).sqrt();
            let cn = (c[0].norm_sqr() + c[1].norm_sqr() + c[2].norm_sqr()).sqrt();
            num = num.max(kc.norm());
            den = den.max(kn * cn);
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }

    pub fn is_solenoidal(&self, tol: f64) -> bool {
        self.divergence_defect() <= tol
    }

    /// max |c(-k) - conj c(k)| relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for (i, c) in self.coeffs.iter().enumerate() {
            let m = self.coeffs[self.grid.mirror(i)];
            for d in 0..3 {
                num = num.max((m[d] - c[d].conj()).norm());
                den = den.max(c[d].norm());
            }
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }

    pub fn mean_defect(&self) -> f64 {
        let c = self.coeffs[self.grid.mode_count() / 2];
        (c[0].norm_sqr() + c[1].norm_sqr() + c[2].norm_sqr()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }

    pub fn scale(&self, a: f64) -> SpectralField {
        self.map(|_, c| [c[0] * a, c[1] * a, c[2] * a])
    }

    pub fn add(&self, other: &SpectralField) -> SpectralField {
        assert_eq!(self.grid, other.grid);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| [a[0] + b[0], a[1] + b[1], a[2] + b[2]])
            .collect();
        SpectralField { grid: self.grid, coeffs }
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        self.add(&other.scale(-1.0))
    }

    /// Coefficient-wise map with access to the wavevector.
    pub fn map(&self, f: impl Fn([i32; 3], Vec3c) -> Vec3c) -> SpectralField {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| f(self.grid.wavevector(i), c))
            .collect();
        SpectralField { grid: self.grid, coeffs }
    }

    /// Largest coefficient magnitude; used for relative comparisons.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().flat_map(|c| c.iter()).map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// max |a - b| / max(|a|, |b|) over all coefficients.
    pub fn relative_distance(&self, other: &SpectralField) -> f64 {
        let scale = self.max_abs().max(other.max_abs());
        if scale == 0.0 {
            return 0.0;
        }
        self.sub(other).max_abs() / scale
    }
}
