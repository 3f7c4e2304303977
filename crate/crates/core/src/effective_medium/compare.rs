//! Comparison of particle-system fields with the grid solution of the
//! limiting equation.

use serde::{Deserialize, Serialize};

use super::grid::CubeGrid;
use super::limit::IeSolution;
use crate::error::{Result, ScatterError};
use crate::linalg::{CVec3, Vec3};
use crate::many_body::Domain;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeAverages {
    /// Lower corner of each comparison cube that contains particles.
    pub corners: Vec<Vec3>,
    pub counts: Vec<usize>,
    pub particle_mean: Vec<CVec3>,
    pub grid_mean: Vec<CVec3>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldComparison {
    /// `‖mean_particles − mean_grid‖ / ‖mean_grid‖` over comparison cubes.
    pub relative_difference: f64,
    pub averages: CubeAverages,
}

/// Averages the particle fields and the grid field (interpolated to the same
/// particle positions) over cubes of side `side` tiling `domain`.
pub fn compare_cube_averages(
    domain: &Domain,
    side: f64,
    positions: &[Vec3],
    particle_e: &[CVec3],
    grid: &CubeGrid,
    sol: &IeSolution,
) -> Result<FieldComparison> {
    if positions.len() != particle_e.len() {
        return Err(ScatterError::Validation("positions and field values differ in length".into()));
    }
    let cmp = CubeGrid::new(domain, side, &|_| 1.0, &|_| crate::linalg::C64::new(0.0, 0.0))?;
    let n = cmp.len();
    let mut counts = vec![0usize; n];
    let mut sum_p = vec![CVec3::ZERO; n];
    let mut sum_g = vec![CVec3::ZERO; n];
    for (x, e) in positions.iter().zip(particle_e) {
        let c = cmp.nearest(x);
        counts[c] += 1;
        sum_p[c] += *e;
        sum_g[c] += grid.interpolate(&sol.e, x);
    }
    let mut averages = CubeAverages { corners: Vec::new(), counts: Vec::new(), particle_mean: Vec::new(), grid_mean: Vec::new() };
    let (mut num, mut den) = (0.0, 0.0);
    for c in 0..n {
        if counts[c] == 0 {
            continue;
        }
        let inv = 1.0 / counts[c] as f64;
        let (p, g) = (sum_p[c] * inv, sum_g[c] * inv);
        num += (p - g).norm_sqr();
        den += g.norm_sqr();
        averages.corners.push(cmp.cells[c].center + Vec3::new(-0.5, -0.5, -0.5) * side);
        averages.counts.push(counts[c]);
        averages.particle_mean.push(p);
        averages.grid_mean.push(g);
    }
    if den == 0.0 {
        return Err(ScatterError::Validation("no particles fall inside the comparison cubes".into()));
    }
    Ok(FieldComparison { relative_difference: (num / den).sqrt(), averages })
}
