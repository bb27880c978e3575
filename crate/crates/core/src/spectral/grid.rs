use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Periodic cube [0, 2pi)^3 sampled at `n` points per axis.
///
/// Retained wavenumbers form the cube |k_i| <= kmax with 3 kmax < n, so that
/// any product of three retained fields is integrated exactly on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    n: usize,
    kmax: i32,
}

impl Grid {
    pub fn new(n: usize) -> Result<Grid> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("n = {n} must be even and >= 8")));
        }
        if n > 1024 {
            return Err(Error::InvalidGrid(format!("n = {n} exceeds 1024")));
        }
        Ok(Grid { n, kmax: ((n - 1) / 3) as i32 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kmax(&self) -> i32 {
        self.kmax
    }

    pub fn box_length(&self) -> f64 {
        2.0 * PI
    }

    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(3)
    }

    /// Side of the retained wavenumber cube.
    pub fn side(&self) -> usize {
        (2 * self.kmax + 1) as usize
    }

    pub fn mode_count(&self) -> usize {
        self.side().pow(3)
    }

    pub fn points(&self) -> usize {
        self.n.pow(3)
    }

    pub fn contains(&self, k: [i32; 3]) -> bool {
        k.iter().all(|c| c.abs() <= self.kmax)
    }

    /// Lexicographic index (kx slowest) of a retained wavevector.
    pub fn index(&self, k: [i32; 3]) -> usize {
        debug_assert!(self.contains(k));
        let m = self.side() as i32;
        let kk = self.kmax;
        (((k[0] + kk) * m + (k[1] + kk)) * m + (k[2] + kk)) as usize
    }

    pub fn wavevector(&self, idx: usize) -> [i32; 3] {
        let m = self.side();
        let kk = self.kmax;
        [
            (idx / (m * m)) as i32 - kk,
            ((idx / m) % m) as i32 - kk,
            (idx % m) as i32 - kk,
        ]
    }

    /// Index of -k for the mode at `idx`.
    pub fn mirror(&self, idx: usize) -> usize {
        self.mode_count() - 1 - idx
    }

    pub fn wavevectors(&self) -> impl Iterator<Item = [i32; 3]> + '_ {
        (0..self.mode_count()).map(move |i| self.wavevector(i))
    }

    /// Physical-space index of grid point (ix, iy, iz).
    pub fn point_index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.n + iy) * self.n + iz
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let n = self.n;
        let dx = 2.0 * PI / n as f64;
        [(idx / (n * n)) as f64 * dx, ((idx / n) % n) as f64 * dx, (idx % n) as f64 * dx]
    }
}

/// Strict positive half of Z^3: k > 0 lexicographically.
pub fn in_upper_half(k: [i32; 3]) -> bool {
    k[0] > 0 || (k[0] == 0 && (k[1] > 0 || (k[1] == 0 && k[2] > 0)))
}

pub fn norm2(k: [i32; 3]) -> i32 {
    k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(6).is_err());
        assert!(Grid::new(9).is_err());
        assert!(Grid::new(8).is_ok());
    }

    #[test]
    fn truncation_is_exact_for_cubic_products() {
        for n in (8..=96).step_by(2) {
            let g = Grid::new(n).unwrap();
            assert!(3 * g.kmax() < n as i32);
            assert!(3 * (g.kmax() + 1) >= n as i32);
        }
        assert_eq!(Grid::new(16).unwrap().kmax(), 5);
        assert_eq!(Grid::new(64).unwrap().kmax(), 21);
    }

    #[test]
    fn index_round_trip_and_mirror() {
        let g = Grid::new(12).unwrap();
        for i in 0..g.mode_count() {
            let k = g.wavevector(i);
            assert_eq!(g.index(k), i);
            assert_eq!(g.wavevector(g.mirror(i)), [-k[0], -k[1], -k[2]]);
        }
        assert_eq!(g.index([0, 0, 0]), g.mode_count() / 2);
    }
}
