//! Electromagnetic scattering by small impedance particles.
//!
//! The crate covers a single particle in closed form, many particles through
//! a dense block linear system for the effective field, and the continuum
//! limit of that system as an integral equation over the particle-filled
//! domain.

pub mod effective_medium;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod green;
pub mod linalg;
pub mod many_body;
pub mod one_body;
pub mod solver;

pub use error::{Result, ScatterError};
pub use fields::{curl_incident, incident_field, IncidentField, Medium, PlaneWave};
pub use green::{grad_green, green, hess_green, interaction_kernel};
pub use linalg::{CMat3, CVec3, Vec3, C64};
pub use one_body::{compute_q, Exclusion, Impedance, OneBodySolution};
pub use solver::{GmresOptions, SolveMethod, SolveStats};
