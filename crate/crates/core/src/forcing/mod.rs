//! White-in-time, coloured-in-space forcing and its covariance.

pub mod covariance;
pub mod noise;
pub mod spectrum;

pub use covariance::{covariance_profiles, ForcingCovariance};
pub use noise::{NoiseDraw, NoiseStream};
pub use spectrum::{build_forcing, ForcingMode, ForcingSpectrum};
