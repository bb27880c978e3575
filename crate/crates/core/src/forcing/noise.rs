//! Counter-based Brownian increments.
//!
//! Each (seed, member) pair keys a ChaCha8 stream; the step index selects the
//! 64-bit stream id and (substep, mode) the word position, so any single
//! increment can be regenerated without replaying the run.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Standard normal pair by Box-Muller from two 64-bit words.
pub fn normal_pair(rng: &mut impl RngCore) -> (f64, f64) {
    let u1 = 1.0 - (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    let u2 = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (2.0 * std::f64::consts::PI * u2).sin_cos();
    (r * c, r * s)
}

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Words consumed per mode: two u64 draws.
const WORDS_PER_MODE: u128 = 4;
/// Word offset separating substeps within one step.
const SUBSTEP_STRIDE: u128 = 1 << 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseStream {
    key: [u8; 32],
}

/// Brownian increments (d beta^1, d beta^2) for every forcing mode line over
/// one (sub)step of length `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDraw {
    pub increments: Vec<[f64; 2]>,
    pub dt: f64,
    pub step: u64,
    pub substep: u32,
}

impl NoiseStream {
    pub fn new(seed: u64, member: u64) -> NoiseStream {
        let mut s = seed ^ member.wrapping_mul(0xd1b5_4a32_d192_ed03);
        let mut key = [0u8; 32];
        for chunk in key.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix(&mut s).to_le_bytes());
        }
        NoiseStream { key }
    }

    fn rng(&self, step: u64, substep: u32, mode: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(step);
        rng.set_word_pos(substep as u128 * SUBSTEP_STRIDE + mode as u128 * WORDS_PER_MODE);
        rng
    }

    /// Standard normal pair for one mode; equals the corresponding entry of `draw` / sqrt(dt).
    pub fn normals(&self, step: u64, substep: u32, mode: usize) -> (f64, f64) {
        normal_pair(&mut self.rng(step, substep, mode))
    }

    pub fn draw(&self, step: u64, substep: u32, modes: usize, dt: f64) -> NoiseDraw {
        assert!(dt > 0.0, "dt must be positive");
        let sd = dt.sqrt();
        let mut rng = self.rng(step, substep, 0);
        let increments = (0..modes)
            .map(|_| {
                let (a, b) = normal_pair(&mut rng);
                [a * sd, b * sd]
            })
            .collect();
        NoiseDraw { increments, dt, step, substep }
    }
}
