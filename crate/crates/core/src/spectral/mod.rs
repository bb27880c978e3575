//! Fourier representation of periodic vector fields on the 2pi-torus.

pub mod fft;
pub mod field;
pub mod grid;
pub mod ops;
pub mod random;

pub use fft::Transform;
pub use field::{SpectralField, Vec3c};
pub use grid::Grid;
pub use ops::{
    differentiate, divergence, gradient, leray_project, nonlinear_term, shell_filter, shift_field,
};
