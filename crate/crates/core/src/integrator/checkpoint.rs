//! Binary checkpoint: little-endian header followed by the retained-cube
//! coefficients in lexicographic k order, (re, im) per component.

use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField};
use num_complex::Complex64;
use std::io::{Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"KHM1";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8 + 8 + 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub nu: f64,
    pub time: f64,
    pub step: u64,
    pub seed: u64,
    pub field: SpectralField,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let g = self.field.grid();
        let mut out = Vec::with_capacity(HEADER_LEN + g.mode_count() * 48);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(g.n() as u32).to_le_bytes());
        out.extend_from_slice(&self.nu.to_le_bytes());
        out.extend_from_slice(&self.time.to_le_bytes());
        out.extend_from_slice(&self.step.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        for c in self.field.coeffs() {
            for z in c {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
        let bad = |msg: String| Error::Format { what: "checkpoint", msg };
        if bytes.len() < HEADER_LEN {
            return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
        }
        if &bytes[0..4] != MAGIC {
            return Err(bad("bad magic".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u32_at(4);
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let grid = Grid::new(u32_at(8) as usize)?;
        let nu = f64_at(12);
        let time = f64_at(20);
        let step = u64_at(28);
        let seed = u64_at(36);
        let expected = HEADER_LEN + grid.mode_count() * 48;
        if bytes.len() != expected {
            return Err(bad(format!("expected {expected} bytes for n = {}, found {}", grid.n(), bytes.len())));
        }
        let mut coeffs = Vec::with_capacity(grid.mode_count());
        let mut o = HEADER_LEN;
        for _ in 0..grid.mode_count() {
            let mut c = [Complex64::new(0.0, 0.0); 3];
            for z in c.iter_mut() {
                *z = Complex64::new(f64_at(o), f64_at(o + 8));
                o += 16;
            }
            coeffs.push(c);
        }
        Ok(Checkpoint { nu, time, step, seed, field: SpectralField::from_coeffs(grid, coeffs) })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        // write-then-rename so an interrupted run never leaves a torn file
        let tmp = path.with_extension("tmp");
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(&self.to_bytes())?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Checkpoint> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Checkpoint::from_bytes(&bytes)
    }
}
