//! Pruned 3D FFTs between retained-cube coefficients and physical samples.
//!
//! Real fields are moved two at a time through one complex transform. Only
//! lines that can hold nonzero data (inverse) or feed retained outputs
//! (forward) are transformed.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

#[derive(Clone)]
pub struct Transform {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform").field("n", &self.n).finish()
    }
}

impl Transform {
    pub fn new(n: usize) -> Transform {
        let mut planner = FftPlanner::new();
        Transform { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn bins(&self, kmax: i32) -> Vec<usize> {
        let n = self.n as i32;
        (-kmax..=kmax).map(|k| k.rem_euclid(n) as usize).collect()
    }

    /// Samples of two real fields given by Hermitian cube coefficients of
    /// half-width `kmax`. `b = None` is treated as the zero field.
    pub fn to_physical_pair(
        &self,
        kmax: i32,
        a: &[Complex64],
        b: Option<&[Complex64]>,
    ) -> (Vec<f64>, Vec<f64>) {
        with_buffers(1, |bufs| {
            let buf = &mut bufs[0];
            self.inverse_into(kmax, a, b, buf);
            (buf.iter().map(|z| z.re).collect(), buf.iter().map(|z| z.im).collect())
        })
    }

    /// Fill `buf` with a(x) + i b(x) on the grid. Both fields must be real,
    /// i.e. have Hermitian coefficients.
    pub fn inverse_into(&self, kmax: i32, a: &[Complex64], b: Option<&[Complex64]>, buf: &mut Vec<Complex64>) {
        let n = self.n;
        let side = (2 * kmax + 1) as usize;
        assert!(side <= n, "cube of half-width {kmax} does not fit {n}^3");
        assert_eq!(a.len(), side * side * side);
        let bins = self.bins(kmax);
        let i = Complex64::new(0.0, 1.0);
        buf.clear();
        buf.resize(n * n * n, Complex64::new(0.0, 0.0));
        for (ax, &bx) in bins.iter().enumerate() {
            for (ay, &by) in bins.iter().enumerate() {
                let src = (ax * side + ay) * side;
                let dst = (bx * n + by) * n;
                for (az, &bz) in bins.iter().enumerate() {
                    let mut z = a[src + az];
                    if let Some(b) = b {
                        z += i * b[src + az];
                    }
                    buf[dst + bz] = z;
                }
            }
        }
        self.inverse_pruned(buf, &bins);
    }

    /// Retained-cube Fourier coefficients of two real fields sampled on the grid.
    /// Modes outside the cube are discarded.
    pub fn from_physical_pair(
        &self,
        kmax: i32,
        a: &[f64],
        b: Option<&[f64]>,
    ) -> (Vec<Complex64>, Vec<Complex64>) {
        with_buffers(1, |bufs| {
            let buf = &mut bufs[0];
            buf.clear();
            match b {
                Some(b) => buf.extend(a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y))),
                None => buf.extend(a.iter().map(|&x| Complex64::new(x, 0.0))),
            }
            let (ca, mut cb) = self.forward_split(kmax, buf);
            if b.is_none() {
                cb.clear();
            }
            (ca, cb)
        })
    }

    /// Forward transform of a(x) + i b(x) held in `buf` (overwritten), split
    /// into the retained-cube coefficients of a and of b.
    pub fn forward_split(&self, kmax: i32, buf: &mut [Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = self.n;
        let side = (2 * kmax + 1) as usize;
        assert!(side <= n);
        assert_eq!(buf.len(), n * n * n);
        let bins = self.bins(kmax);
        self.forward_pruned(buf, &bins);
        let scale = 1.0 / (n * n * n) as f64;
        let m = side * side * side;
        let mut ca = vec![Complex64::new(0.0, 0.0); m];
        let mut cb = vec![Complex64::new(0.0, 0.0); m];
        let half = Complex64::new(0.5, 0.0);
        let minus_half_i = Complex64::new(0.0, -0.5);
        for (ax, &bx) in bins.iter().enumerate() {
            for (ay, &by) in bins.iter().enumerate() {
                let (mx, my) = (side - 1 - ax, side - 1 - ay);
                let row = (bx * n + by) * n;
                let mrow = (bins[mx] * n + bins[my]) * n;
                for (az, &bz) in bins.iter().enumerate() {
                    let dst = (ax * side + ay) * side + az;
                    let z = buf[row + bz] * scale;
                    let zm = buf[mrow + bins[side - 1 - az]].conj() * scale;
                    ca[dst] = half * (z + zm);
                    cb[dst] = minus_half_i * (z - zm);
                }
            }
        }
        (ca, cb)
    }

    fn inverse_pruned(&self, buf: &mut [Complex64], bins: &[usize]) {
        let n = self.n;
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.inv.get_inplace_scratch_len()];
        // z lines: only (kx, ky) both retained can be nonzero
        for &bx in bins {
            for &by in bins {
                let s = (bx * n + by) * n;
                self.inv.process_with_scratch(&mut buf[s..s + n], &mut scratch);
            }
        }
        let mut tmp = vec![Complex64::new(0.0, 0.0); n * n];
        // y lines: only retained kx slabs
        for &bx in bins {
            let slab = &mut buf[bx * n * n..(bx + 1) * n * n];
            transpose(slab, &mut tmp, n);
            self.inv.process_with_scratch(&mut tmp, &mut scratch);
            transpose(&tmp, slab, n);
        }
        // x lines: everything
        self.x_pass(buf, &mut tmp, &mut scratch, &*self.inv);
    }

    fn forward_pruned(&self, buf: &mut [Complex64], bins: &[usize]) {
        let n = self.n;
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fwd.get_inplace_scratch_len()];
        let mut tmp = vec![Complex64::new(0.0, 0.0); n * n];
        self.x_pass(buf, &mut tmp, &mut scratch, &*self.fwd);
        for &bx in bins {
            let slab = &mut buf[bx * n * n..(bx + 1) * n * n];
            transpose(slab, &mut tmp, n);
            self.fwd.process_with_scratch(&mut tmp, &mut scratch);
            transpose(&tmp, slab, n);
        }
        for &bx in bins {
            for &by in bins {
                let s = (bx * n + by) * n;
                self.fwd.process_with_scratch(&mut buf[s..s + n], &mut scratch);
            }
        }
    }

    fn x_pass(
        &self,
        buf: &mut [Complex64],
        tmp: &mut [Complex64],
        scratch: &mut [Complex64],
        fft: &dyn Fft<f64>,
    ) {
        let n = self.n;
        for iy in 0..n {
            for ix in 0..n {
                let s = (ix * n + iy) * n;
                for iz in 0..n {
                    tmp[iz * n + ix] = buf[s + iz];
                }
            }
            fft.process_with_scratch(tmp, scratch);
            for ix in 0..n {
                let s = (ix * n + iy) * n;
                for iz in 0..n {
                    buf[s + iz] = tmp[iz * n + ix];
                }
            }
        }
    }
}

thread_local! {
    static POOL: std::cell::RefCell<Vec<Vec<Complex64>>> = const { std::cell::RefCell::new(Vec::new()) };
}

/// Run `f` with `count` reusable per-thread grid buffers. Reusing them avoids
/// re-faulting multi-megabyte allocations on every transform.
pub fn with_buffers<R>(count: usize, f: impl FnOnce(&mut [Vec<Complex64>]) -> R) -> R {
    let mut taken: Vec<Vec<Complex64>> = POOL.with(|p| {
        let mut p = p.borrow_mut();
        let k = p.len().saturating_sub(count);
        p.split_off(k)
    });
    while taken.len() < count {
        taken.push(Vec::new());
    }
    let r = f(&mut taken);
    POOL.with(|p| p.borrow_mut().extend(taken));
    r
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    const B: usize = 16;
    for i0 in (0..n).step_by(B) {
        for j0 in (0..n).step_by(B) {
            for i in i0..(i0 + B).min(n) {
                for j in j0..(j0 + B).min(n) {
                    dst[j * n + i] = src[i * n + j];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn direct_synthesis(n: usize, kmax: i32, c: &[Complex64]) -> Vec<f64> {
        let side = (2 * kmax + 1) as usize;
        let mut out = vec![0.0; n * n * n];
        let dx = 2.0 * PI / n as f64;
        for ix in 0..n {
            for iy in 0..n {
                for iz in 0..n {
                    let mut s = Complex64::new(0.0, 0.0);
                    for (idx, z) in c.iter().enumerate() {
                        let k = [
                            (idx / (side * side)) as i32 - kmax,
                            ((idx / side) % side) as i32 - kmax,
                            (idx % side) as i32 - kmax,
                        ];
                        let ph = dx * (k[0] as f64 * ix as f64 + k[1] as f64 * iy as f64 + k[2] as f64 * iz as f64);
                        s += z * Complex64::from_polar(1.0, ph);
                    }
                    out[(ix * n + iy) * n + iz] = s.re;
                }
            }
        }
        out
    }

    fn hermitian(kmax: i32, seed: u64) -> Vec<Complex64> {
        let side = (2 * kmax + 1) as usize;
        let m = side * side * side;
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut c = vec![Complex64::new(0.0, 0.0); m];
        for i in 0..m {
            let j = m - 1 - i;
            if i < j {
                c[i] = Complex64::new(next(), next());
                c[j] = c[i].conj();
            } else if i == j {
                c[i] = Complex64::new(next(), 0.0);
            }
        }
        c
    }

    #[test]
    fn inverse_matches_direct_sum() {
        let t = Transform::new(8);
        let c = hermitian(2, 7);
        let (re, im) = t.to_physical_pair(2, &c, None);
        let want = direct_synthesis(8, 2, &c);
        for (a, b) in re.iter().zip(&want) {
            assert!((a - b).abs() < 1e-13);
        }
        assert!(im.iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn round_trip_pair() {
        for &(n, kmax) in &[(8usize, 2i32), (12, 3), (16, 5), (10, 4)] {
            let t = Transform::new(n);
            let a = hermitian(kmax, 1);
            let b = hermitian(kmax, 2);
            let (pa, pb) = t.to_physical_pair(kmax, &a, Some(&b));
            let (ra, rb) = t.from_physical_pair(kmax, &pa, Some(&pb));
            for (x, y) in a.iter().zip(&ra).chain(b.iter().zip(&rb)) {
                assert!((x - y).norm() < 1e-14, "n={n}");
            }
        }
    }
}
