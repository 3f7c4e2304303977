//! Particle shapes, surface quadrature and shape matrices.

pub mod matrices;
pub mod quadrature;
pub mod rules;
pub mod shape;

pub use matrices::{
    beta_at, compute_b, compute_beta, compute_shape_matrices, default_t_samples, sample_directions, BetaEstimate,
    ShapeMatrices, DEFAULT_T_SAMPLES,
};
pub use quadrature::{build_quadrature, SurfaceQuadrature, DEFAULT_MESH_ORDER, DEFAULT_SMOOTH_ORDER};
pub use shape::{ParticleShape, Rotation, TriMesh, IDENTITY_ROTATION};
