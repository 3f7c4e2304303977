//! Many-particle scattering: cloud generation, the linear algebraic system
//! for the effective field, and field evaluation.

pub mod cloud;
pub mod las;

pub use cloud::{
    check_overlap, generate_cloud, read_cloud_text, AxisBox, CloudOptions, CloudRecords, Domain, ParticleCloud,
    CLOUD_FORMAT_VERSION, MIN_SPACING_RATIO, OVERLAP_RATIO,
};
pub use las::{assemble_las, coupling, effective_field, solve_las, EffectiveField, FieldSample, LasSolution, LasSystem};
