//! Continuum limit of the particle system: the integral equation on a cube
//! grid, the homogenized refraction coefficient, and comparisons between the
//! two descriptions.

pub mod compare;
mod fft;
pub mod grid;
pub mod homogenized;
pub mod limit;

pub use compare::{compare_cube_averages, CubeAverages, FieldComparison};
pub use grid::{CubeGrid, GridCell};
pub use homogenized::{dispersion_check, refraction_shift, refraction_shift_for_grid, DispersionReport, HomogenizedMedium};
pub use limit::{cell_weights, solve_limit_equation, IeMethod, IeSolution};
