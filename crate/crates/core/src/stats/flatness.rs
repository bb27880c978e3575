//! Shell flatness F_p(N) = <||u_N||_{2p}^{2p}> / <||u_N||_2^2>^p.

use super::batch::Estimate;
use crate::error::Result;
use crate::spectral::fft::with_buffers;
use crate::spectral::{shell_filter, SpectralField, Transform};

#[derive(Debug, Clone, PartialEq)]
pub struct FlatnessRow {
    pub shell: u32,
    pub p: u32,
    /// None when the shell holds no energy (0/0).
    pub value: Option<Estimate>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlatnessTable {
    pub rows: Vec<FlatnessRow>,
}

/// Grid size on which |u_N|^{2p} integrates exactly: the product holds
/// wavenumbers up to 2p max|k_i|.
pub fn exact_grid_size(shell_kmax: i32, p: u32, n: usize) -> usize {
    let need = 2 * p as usize * shell_kmax as usize + 1;
    n.max(need.next_multiple_of(2))
}

/// Largest |k_i| among retained modes of the shell filter of `shell`.
pub fn shell_kmax(field_kmax: i32, shell: u32) -> i32 {
    field_kmax.min(2 * shell as i32)
}

/// int |u|^{2p} dx for each p, evaluated on a grid fine enough to be exact.
pub fn lp_integrals(field: &SpectralField, ps: &[u32], transforms: &mut Vec<Transform>) -> Vec<f64> {
    let g = field.grid();
    let nonzero = field
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.iter().any(|z| z.norm_sqr() > 0.0))
        .map(|(i, _)| g.wavevector(i).iter().map(|c| c.abs()).max().unwrap())
        .max()
        .unwrap_or(0);
    ps.iter()
        .map(|&p| {
            let size = exact_grid_size(nonzero, p, g.n());
            let t = match transforms.iter().position(|t| t.n() == size) {
                Some(i) => &transforms[i],
                None => {
                    transforms.push(Transform::new(size));
                    transforms.last().unwrap()
                }
            };
            let dv = g.volume() / (size * size * size) as f64;
            let kk = g.kmax();
            let (c0, c1, c2) = (field.component(0), field.component(1), field.component(2));
            with_buffers(2, |b| {
                let (xy, rest) = b.split_first_mut().unwrap();
                let z = &mut rest[0];
                t.inverse_into(kk, &c0, Some(&c1), xy);
                t.inverse_into(kk, &c2, None, z);
                xy.iter()
                    .zip(z.iter())
                    .map(|(a, b)| (a.re * a.re + a.im * a.im + b.re * b.re).powi(p as i32))
                    .sum::<f64>()
                    * dv
            })
        })
        .collect()
}

/// Per-snapshot sample: (numerators per p, denominator), or None for an empty shell.
pub fn shell_sample(
    field: &SpectralField,
    shell: u32,
    ps: &[u32],
    transforms: &mut Vec<Transform>,
) -> Result<Option<(Vec<f64>, f64)>> {
    let f = match shell_filter(field, shell) {
        Ok(f) => f,
        Err(crate::Error::EmptyShell(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    Ok(Some((lp_integrals(&f, ps, transforms), f.energy())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    /// For u = cos(x) e2: int cos^4 = 3/8 V, int cos^2 = V/2, so
    /// F_2 = (3V/8) / (V/2)^2 = 3 / (2V).
    const COS_F2: f64 = 0.006_047_162_706_224_905;

    fn cosine(g: Grid) -> SpectralField {
        let mut u = SpectralField::zeros(g);
        let h = Complex64::new(0.5, 0.0);
        u.set_mode([1, 0, 0], [Complex64::new(0.0, 0.0), h, Complex64::new(0.0, 0.0)]);
        u
    }

    #[test]
    fn pinned_value_matches_closed_form() {
        assert!((COS_F2 - 1.5 / (2.0 * PI).powi(3)).abs() < 1e-17);
    }

    #[test]
    fn deterministic_cosine_flatness() {
        let u = cosine(Grid::new(16).unwrap());
        let mut ts = Vec::new();
        let (num, den) = shell_sample(&u, 1, &[2, 3], &mut ts).unwrap().unwrap();
        assert!((num[0] / den.powi(2) - COS_F2).abs() < 1e-15);
        // int cos^6 = 5/16 V
        let v = (2.0 * PI).powi(3);
        assert!((num[1] - 5.0 / 16.0 * v).abs() < 1e-13 * v);
    }

    #[test]
    fn exactness_needs_padding() {
        // a high mode raised to the 4th power aliases on the native grid
        let g = Grid::new(16).unwrap();
        let mut u = SpectralField::zeros(g);
        u.set_mode([5, 0, 0], [Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0)]);
        let mut ts = Vec::new();
        let v = (2.0 * PI).powi(3);
        let got = lp_integrals(&u, &[2], &mut ts)[0];
        assert!((got - 3.0 / 8.0 * v).abs() < 1e-13 * v);
        assert_eq!(ts[0].n(), 22);
    }

    #[test]
    fn empty_shell_is_flagged() {
        let u = SpectralField::zeros(Grid::new(8).unwrap());
        let mut ts = Vec::new();
        assert!(shell_sample(&u, 64, &[2], &mut ts).unwrap().is_none());
    }
}
