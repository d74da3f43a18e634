//! Periodic grids, transforms and Fourier-multiplier operators.

pub mod field;
pub mod grid;
pub mod ops;
pub mod sample;
pub mod transform;

pub use field::{PhysicalField, SpectralField};
pub use grid::Grid;
pub use ops::{
    dealias, dealias_in_place, divergence, friedrichs_truncate, is_dealiased, laplacian,
    leray_project, max_relative_divergence, partial, sobolev_norm, spectral_gradient,
};
pub use transform::{forward_transform, inverse_transform};
