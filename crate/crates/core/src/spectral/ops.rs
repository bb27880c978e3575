use super::fft::{with_buffers, Transform};
use super::field::{SpectralField, Vec3c, ZERO3};
use super::grid::{norm2, Grid};
use crate::error::{Error, Result};
use num_complex::Complex64;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn project_mode(k: [i32; 3], c: Vec3c) -> Vec3c {
    let k2 = norm2(k);
    if k2 == 0 {
        return ZERO3;
    }
    let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
    let kc = (kf[0] * c[0] + kf[1] * c[1] + kf[2] * c[2]) / k2 as f64;
    [c[0] - kf[0] * kc, c[1] - kf[1] * kc, c[2] - kf[2] * kc]
}

/// Orthogonal projection onto divergence-free, zero-mean fields.
pub fn leray_project(field: &SpectralField) -> SpectralField {
    field.map(project_mode)
}

/// T_h u(x) = u(x + h).
pub fn shift_field(field: &SpectralField, h: [f64; 3]) -> SpectralField {
    let phases = axis_phases(field.grid(), h);
    let kk = field.grid().kmax();
    field.map(|k, c| {
        let p = phases[0][(k[0] + kk) as usize] * phases[1][(k[1] + kk) as usize] * phases[2][(k[2] + kk) as usize];
        [c[0] * p, c[1] * p, c[2] * p]
    })
}

/// e^{i k_a h_a} for k_a in [-kmax, kmax], per axis. Each axis angle is
/// reduced mod 2pi before use so that periodic shifts are exact.
pub fn axis_phases(grid: &Grid, h: [f64; 3]) -> [Vec<Complex64>; 3] {
    let kk = grid.kmax();
    let one = |ha: f64| -> Vec<Complex64> {
        (-kk..=kk)
            .map(|k| {
                let ang = (k as f64 * ha).rem_euclid(2.0 * std::f64::consts::PI);
                Complex64::from_polar(1.0, ang)
            })
            .collect()
    };
    [one(h[0]), one(h[1]), one(h[2])]
}

/// Partial derivative along `axis` (0, 1 or 2).
pub fn differentiate(field: &SpectralField, axis: usize) -> SpectralField {
    field.map(|k, c| {
        let f = I * k[axis] as f64;
        [c[0] * f, c[1] * f, c[2] * f]
    })
}

/// Scalar coefficients of div u.
pub fn divergence(field: &SpectralField) -> Vec<Complex64> {
    let g = field.grid();
    field
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k = g.wavevector(i);
            I * (k[0] as f64 * c[0] + k[1] as f64 * c[1] + k[2] as f64 * c[2])
        })
        .collect()
}

/// Coefficients of G_ij = d_j u_i, indexed [i][j].
pub fn gradient(field: &SpectralField) -> [[Vec<Complex64>; 3]; 3] {
    let g = field.grid();
    let comp = |i: usize, j: usize| -> Vec<Complex64> {
        field
            .coeffs()
            .iter()
            .enumerate()
            .map(|(idx, c)| I * g.wavevector(idx)[j] as f64 * c[i])
            .collect()
    };
    [
        [comp(0, 0), comp(0, 1), comp(0, 2)],
        [comp(1, 0), comp(1, 1), comp(1, 2)],
        [comp(2, 0), comp(2, 1), comp(2, 2)],
    ]
}

/// Physical samples of the three components.
pub fn to_physical(field: &SpectralField, t: &Transform) -> [Vec<f64>; 3] {
    let kk = field.grid().kmax();
    let c0 = field.component(0);
    let c1 = field.component(1);
    let c2 = field.component(2);
    let (x, y) = t.to_physical_pair(kk, &c0, Some(&c1));
    let (z, _) = t.to_physical_pair(kk, &c2, None);
    [x, y, z]
}

/// Inverse of `to_physical` for band-limited samples (modes outside the cube dropped).
pub fn from_physical(grid: Grid, u: &[Vec<f64>; 3], t: &Transform) -> SpectralField {
    let kk = grid.kmax();
    let (a, b) = t.from_physical_pair(kk, &u[0], Some(&u[1]));
    let (c, _) = t.from_physical_pair(kk, &u[2], None);
    let coeffs = a.into_iter().zip(b).zip(c).map(|((x, y), z)| [x, y, z]).collect();
    SpectralField::from_coeffs(grid, coeffs)
}

/// Retained-cube coefficients of the symmetric products u_i u_j, in the order
/// xx, xy, xz, yy, yz, zz, plus the largest pointwise speed.
#[derive(Debug, Clone)]
pub struct Products {
    pub w: [Vec<Complex64>; 6],
    pub max_speed: f64,
}

pub const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

pub fn pair_slot(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    match (a, b) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        _ => 5,
    }
}

pub fn products(field: &SpectralField, t: &Transform) -> Products {
    let kk = field.grid().kmax();
    let c0 = field.component(0);
    let c1 = field.component(1);
    let c2 = field.component(2);
    with_buffers(4, |b| {
        let (xy, rest) = b.split_first_mut().unwrap();
        let (z, rest) = rest.split_first_mut().unwrap();
        let (p1, rest) = rest.split_first_mut().unwrap();
        let p2 = &mut rest[0];
        t.inverse_into(kk, &c0, Some(&c1), xy);
        t.inverse_into(kk, &c2, None, z);
        let mut max2 = 0.0f64;
        p1.clear();
        p2.clear();
        for (a, c) in xy.iter().zip(z.iter()) {
            let (ux, uy, uz) = (a.re, a.im, c.re);
            max2 = max2.max(ux * ux + uy * uy + uz * uz);
            p1.push(Complex64::new(ux * ux, ux * uy));
            p2.push(Complex64::new(ux * uz, uy * uy));
        }
        // reuse the xy buffer for the last pair once it has been consumed
        for (a, c) in xy.iter_mut().zip(z.iter()) {
            let (uy, uz) = (a.im, c.re);
            *a = Complex64::new(uy * uz, uz * uz);
        }
        let (w0, w1) = t.forward_split(kk, p1);
        let (w2, w3) = t.forward_split(kk, p2);
        let (w4, w5) = t.forward_split(kk, xy);
        Products { w: [w0, w1, w2, w3, w4, w5], max_speed: max2.sqrt() }
    })
}

/// Unprojected advection div(u (x) u), equal to u.grad u for solenoidal u.
pub fn advection_from_products(grid: Grid, p: &Products) -> SpectralField {
    let coeffs = (0..grid.mode_count())
        .map(|idx| {
            let k = grid.wavevector(idx);
            let mut out = ZERO3;
            for (i, o) in out.iter_mut().enumerate() {
                let mut s = Complex64::new(0.0, 0.0);
                for (j, &kj) in k.iter().enumerate() {
                    s += kj as f64 * p.w[pair_slot(i, j)][idx];
                }
                *o = I * s;
            }
            out
        })
        .collect();
    SpectralField::from_coeffs(grid, coeffs)
}

/// Pressure solving -lap p = d_i d_j (u_i u_j), zero mean.
pub fn pressure_from_products(grid: Grid, p: &Products) -> Vec<Complex64> {
    (0..grid.mode_count())
        .map(|idx| {
            let k = grid.wavevector(idx);
            let k2 = norm2(k);
            if k2 == 0 {
                return Complex64::new(0.0, 0.0);
            }
            let mut s = Complex64::new(0.0, 0.0);
            for i in 0..3 {
                for j in 0..3 {
                    s += (k[i] * k[j]) as f64 * p.w[pair_slot(i, j)][idx];
                }
            }
            -s / k2 as f64
        })
        .collect()
}

/// Leray-projected advection P(u.grad u), dealiased.
pub fn nonlinear_term(field: &SpectralField, t: &Transform) -> SpectralField {
    let p = products(field, t);
    leray_project(&advection_from_products(*field.grid(), &p))
}

/// Sharp dyadic annulus N/2 < |k| <= 2N.
pub fn shell_filter(field: &SpectralField, shell: u32) -> Result<SpectralField> {
    if shell == 0 || !shell.is_power_of_two() {
        return Err(Error::InvalidShell(shell));
    }
    let lo = (shell as f64 / 2.0).powi(2);
    let hi = (2.0 * shell as f64).powi(2);
    let keep = |k: [i32; 3]| {
        let k2 = norm2(k) as f64;
        k2 > lo && k2 <= hi
    };
    if !field.grid().wavevectors().any(keep) {
        return Err(Error::EmptyShell(shell));
    }
    Ok(field.map(|k, c| if keep(k) { c } else { ZERO3 }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random::random_solenoidal;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    #[test]
    fn projection_of_single_mode() {
        let mut f = SpectralField::zeros(grid(8));
        f.set_mode([1, 0, 0], [c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let p = leray_project(&f);
        assert_eq!(p.get([1, 0, 0]), [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(p.get([-1, 0, 0]), [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn projection_annihilates_gradients() {
        let g = grid(12);
        let mut f = SpectralField::zeros(g);
        for (n, k) in g.wavevectors().enumerate() {
            if crate::spectral::grid::in_upper_half(k) {
                let gk = c((n as f64 * 0.37).sin(), (n as f64 * 0.11).cos());
                let ig = I * gk;
                f.set_mode(k, [ig * k[0] as f64, ig * k[1] as f64, ig * k[2] as f64]);
            }
        }
        assert!(leray_project(&f).max_abs() < 1e-15 * f.max_abs().max(1.0));
    }

    #[test]
    fn projection_is_idempotent_and_divergence_free() {
        let u = random_solenoidal(grid(16), 3, 1.0);
        let again = leray_project(&u);
        assert!(u.relative_distance(&again) < 1e-15);
        let div = divergence(&u);
        let scale = u.max_abs() * 5.0;
        assert!(div.iter().all(|d| d.norm() < 1e-13 * scale));
    }

    #[test]
    fn shift_of_cosine_is_minus_sine() {
        // cos(x) e2 -> cos(x + pi/2) e2 = -sin(x) e2
        let g = grid(8);
        let mut f = SpectralField::zeros(g);
        f.set_mode([1, 0, 0], [c(0.0, 0.0), c(0.5, 0.0), c(0.0, 0.0)]);
        let s = shift_field(&f, [PI / 2.0, 0.0, 0.0]);
        // -sin(x) = (i/2) e^{ix} - (i/2) e^{-ix}
        let got = s.get([1, 0, 0])[1];
        assert!((got - c(0.0, 0.5)).norm() < 1e-16);
        let t = Transform::new(8);
        let phys = to_physical(&s, &t);
        for ix in 0..8 {
            let x = 2.0 * PI * ix as f64 / 8.0;
            assert!((phys[1][g.point_index(ix, 3, 5)] + x.sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn periodic_shift_is_identity() {
        let u = random_solenoidal(grid(12), 1, 1.0);
        let s = shift_field(&u, [2.0 * PI, -4.0 * PI, 0.0]);
        assert!(u.relative_distance(&s) < 1e-14);
    }

    #[test]
    fn derivative_of_cosine() {
        let g = grid(8);
        let mut f = SpectralField::zeros(g);
        f.set_mode([1, 0, 0], [c(0.0, 0.0), c(0.5, 0.0), c(0.0, 0.0)]);
        let d = differentiate(&f, 0);
        assert_eq!(d.get([1, 0, 0])[1], c(0.0, 0.5));
        assert_eq!(differentiate(&f, 1).max_abs(), 0.0);
    }

    #[test]
    fn parseval_on_grid() {
        let g = grid(16);
        let u = random_solenoidal(g, 5, 1.0);
        let t = Transform::new(16);
        let p = to_physical(&u, &t);
        let dv = g.volume() / g.points() as f64;
        let quad: f64 = (0..g.points()).map(|i| p[0][i].powi(2) + p[1][i].powi(2) + p[2][i].powi(2)).sum::<f64>() * dv;
        assert!((quad - u.energy()).abs() < 1e-12 * u.energy());
        let back = from_physical(g, &p, &t);
        assert!(back.relative_distance(&u) < 1e-13);
    }

    /// Brute-force convolution: (u.grad u)^(k) = sum_{p+q=k} (u(p).(i q)) u(q).
    fn convolution_oracle(u: &SpectralField) -> SpectralField {
        let g = *u.grid();
        let modes: Vec<([i32; 3], Vec3c)> = g
            .wavevectors()
            .map(|k| (k, u.get(k)))
            .filter(|(_, c)| c.iter().any(|z| z.norm() > 0.0))
            .collect();
        let mut out = SpectralField::zeros(g);
        for (p, up) in &modes {
            for (q, uq) in &modes {
                let k = [p[0] + q[0], p[1] + q[1], p[2] + q[2]];
                if !g.contains(k) {
                    continue;
                }
                let dot = I * (up[0] * q[0] as f64 + up[1] * q[1] as f64 + up[2] * q[2] as f64);
                let idx = g.index(k);
                let o = &mut out.coeffs_mut()[idx];
                for d in 0..3 {
                    o[d] += dot * uq[d];
                }
            }
        }
        leray_project(&out)
    }

    #[test]
    fn nonlinearity_matches_convolution_for_two_mode_field() {
        let g = grid(8);
        let mut u = SpectralField::zeros(g);
        // Taylor-Green-like pair of solenoidal modes
        u.set_mode([1, 1, 0], [c(0.5, 0.0), c(-0.5, 0.0), c(0.0, 0.0)]);
        u.set_mode([0, 1, 1], [c(0.0, 0.0), c(0.0, 0.25), c(0.0, -0.25)]);
        u.set_mode([1, 0, -1], [c(0.3, 0.1), c(0.2, -0.4), c(0.3, 0.1)]);
        let u = leray_project(&u);
        let t = Transform::new(8);
        let got = nonlinear_term(&u, &t);
        let want = convolution_oracle(&u);
        assert!(want.max_abs() > 1e-3);
        assert!(got.relative_distance(&want) < 1e-12);
    }

    #[test]
    fn nonlinearity_matches_convolution_for_random_field() {
        let g = grid(8);
        let u = random_solenoidal(g, 11, 0.5);
        let t = Transform::new(8);
        assert!(nonlinear_term(&u, &t).relative_distance(&convolution_oracle(&u)) < 1e-12);
    }

    #[test]
    fn single_mode_has_no_projected_nonlinearity() {
        let g = grid(16);
        let mut u = SpectralField::zeros(g);
        u.set_mode([1, 2, 0], [c(2.0, 0.3), c(-1.0, -0.15), c(0.7, 1.1)]);
        let u = leray_project(&u);
        let t = Transform::new(16);
        let n = nonlinear_term(&u, &t);
        assert!(n.max_abs() < 1e-14 * u.max_abs().powi(2) * 5.0);
    }

    #[test]
    fn shell_filter_cases() {
        let g = grid(16);
        let mut u = SpectralField::zeros(g);
        u.set_mode([1, 0, 0], [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        u.set_mode([0, 0, 1], [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(shell_filter(&u, 1).unwrap(), u);
        assert_eq!(shell_filter(&u, 8).unwrap().max_abs(), 0.0);
        assert!(matches!(shell_filter(&u, 3), Err(Error::InvalidShell(3))));
        assert!(matches!(shell_filter(&u, 32), Err(Error::EmptyShell(32))));
    }

    #[test]
    fn shells_cover_every_mode_with_known_multiplicity() {
        let g = grid(16);
        let u = random_solenoidal(g, 2, 0.0);
        let shells = [1u32, 2, 4, 8];
        let mut sum = SpectralField::zeros(g);
        for &s in &shells {
            sum = sum.add(&shell_filter(&u, s).unwrap());
        }
        // N/2 < |k| <= 2N: a mode belongs to every dyadic N in [|k|/2, 2|k|)
        let expect = u.map(|k, c| {
            let r = (norm2(k) as f64).sqrt();
            let m = shells.iter().filter(|&&s| r > s as f64 / 2.0 && r <= 2.0 * s as f64).count() as f64;
            [c[0] * m, c[1] * m, c[2] * m]
        });
        assert!(sum.relative_distance(&expect) < 1e-15);
    }
}
