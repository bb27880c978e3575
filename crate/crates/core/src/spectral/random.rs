use super::field::SpectralField;
use super::grid::{in_upper_half, norm2, Grid};
use super::ops::leray_project;
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use crate::forcing::noise::normal_pair;
use rand_core::SeedableRng;

/// Random real solenoidal zero-mean field with Gaussian coefficients of
/// standard deviation (1 + |k|^2)^(-slope/2). Deterministic in `seed`.
pub fn random_solenoidal(grid: Grid, seed: u64, slope: f64) -> SpectralField {
    leray_project(&random_field(grid, seed, slope))
}

/// Same law without the projection; generally has a gradient part.
pub fn random_field(grid: Grid, seed: u64, slope: f64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralField::zeros(grid);
    for idx in 0..grid.mode_count() {
        let k = grid.wavevector(idx);
        if !in_upper_half(k) {
            continue;
        }
        let amp = (1.0 + norm2(k) as f64).powf(-slope / 2.0);
        let mut c = [Complex64::new(0.0, 0.0); 3];
        for z in c.iter_mut() {
            let (a, b) = normal_pair(&mut rng);
            *z = Complex64::new(a, b) * amp;
        }
        f.set_mode(k, c);
    }
    f
}
