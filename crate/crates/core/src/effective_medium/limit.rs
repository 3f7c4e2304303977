//! Collocation of the limiting integral equation on a cube grid.
//!
//! With `A = ∇×E`, `w_p = c_S·h(x_p)·N(x_p)·|Δ_p|/(iωμ₀)`:
//!
//! ```text
//! A_q + Σ_{p≠q} w_p·K(x_q, x_p)·Ξ·A_p = ∇×E₀(x_q)
//! E_q = E₀(x_q) − Σ_{p≠q} w_p·∇g(x_q, x_p) × Ξ·A_p
//! ```
//!
//! This is the particle system with cube centers in place of particles.
//! The lattice sums omit the self cube; on a cubic lattice they converge to
//! the principal-value integral, so `A` is the principal-value field and
//! differs from the finite-difference curl of `E` by the local term
//! `(2/3)·c₁·Ξ·A` (see [`super::dispersion_check`]).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fft::LatticeKernels;
use super::grid::CubeGrid;
use crate::error::{Result, ScatterError};
use crate::fields::{IncidentField, Medium};
use crate::geometry::ShapeMatrices;
use crate::green::apply_grad_cross;
use crate::linalg::{CMat3, CVec3, C64};
use crate::many_body::LasSystem;
use crate::solver::{dense_solve, gmres, relative_residual, GmresOptions, LinearOperator, SolveStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IeMethod {
    /// GMRES with FFT lattice convolutions.
    #[default]
    Fft,
    /// GMRES with direct `O(P²)` pair sums.
    Pairwise,
    /// Dense LU.
    Dense,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IeSolution {
    /// `E` at the cube centers, in the order of `grid.cells`.
    pub e: Vec<CVec3>,
    /// `A` at the cube centers.
    pub curl: Vec<CVec3>,
    pub stats: SolveStats,
    pub method: IeMethod,
}

/// Cube weights `w_p`.
pub fn cell_weights(grid: &CubeGrid, sm: &ShapeMatrices, med: &Medium) -> Vec<C64> {
    let vol = grid.cell_volume();
    let pref = C64::new(sm.c_s * vol, 0.0) / med.i_omega_mu();
    grid.cells.iter().map(|c| pref * c.h * c.density).collect()
}

struct FftOperator<'a> {
    kernels: &'a LatticeKernels,
    cells: Vec<[usize; 3]>,
    weights: &'a [C64],
    xi: CMat3,
}

impl FftOperator<'_> {
    fn sources(&self, v: &[CVec3]) -> Vec<CVec3> {
        self.weights.iter().zip(v).map(|(w, vm)| self.xi.mul_vec(vm) * *w).collect()
    }
}

fn as_vec3s(x: &[C64]) -> Vec<CVec3> {
    x.chunks_exact(3).map(|c| CVec3([c[0], c[1], c[2]])).collect()
}

impl LinearOperator for FftOperator<'_> {
    fn dim(&self) -> usize {
        3 * self.cells.len()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let v = as_vec3s(x);
        let conv = self.kernels.apply_kernel(&self.cells, &self.sources(&v));
        for ((chunk, vi), ci) in y.chunks_exact_mut(3).zip(&v).zip(conv) {
            chunk.copy_from_slice(&(*vi + ci).0);
        }
    }
}

/// Solves the grid system and reconstructs `E` at the cube centers.
pub fn solve_limit_equation(
    grid: &CubeGrid,
    med: &Medium,
    incident: &dyn IncidentField,
    sm: &ShapeMatrices,
    method: IeMethod,
    opts: &GmresOptions,
) -> Result<IeSolution> {
    med.validate()?;
    if grid.len() < 2 {
        return Err(ScatterError::Validation(format!("grid needs at least two cubes, has {}", grid.len())));
    }
    let k = med.k();
    let weights = cell_weights(grid, sm, med);
    let rhs: Vec<CVec3> = grid.cells.par_iter().map(|c| incident.curl_e(med, &c.center)).collect();
    let e0: Vec<CVec3> = grid.cells.par_iter().map(|c| incident.e(med, &c.center)).collect();
    if weights.iter().all(|w| *w == C64::new(0.0, 0.0)) {
        let stats = SolveStats { iterations: 0, relative_residual: 0.0 };
        return Ok(IeSolution { e: e0, curl: rhs, stats, method });
    }
    let b: Vec<C64> = rhs.iter().flat_map(|v| v.0).collect();
    let xi = sm.xi;
    let sources = |a: &[CVec3]| -> Vec<CVec3> { weights.iter().zip(a).map(|(w, am)| xi.mul_vec(am) * *w).collect() };
    let (curl, stats, scattered) = match method {
        IeMethod::Fft => {
            let kernels = LatticeKernels::new(grid.dims, grid.side, k);
            let op = FftOperator { kernels: &kernels, cells: grid.indices(), weights: &weights, xi };
            let (x, stats) = gmres(&op, &b, opts)?;
            let curl = as_vec3s(&x);
            let scattered = kernels.apply_grad_cross(&op.cells, &sources(&curl));
            (curl, stats, scattered)
        }
        IeMethod::Pairwise | IeMethod::Dense => {
            let centers: Vec<_> = grid.cells.iter().map(|c| c.center).collect();
            let sys = LasSystem::from_raw(centers.clone(), weights.clone(), xi, k, rhs.clone());
            let (x, stats) = if method == IeMethod::Dense {
                let x = dense_solve(sys.to_dense(), &b)?;
                let r = relative_residual(&sys, &x, &b);
                (x, SolveStats { iterations: 0, relative_residual: r })
            } else {
                gmres(&sys, &b, opts)?
            };
            let curl = as_vec3s(&x);
            let u = sources(&curl);
            let scattered = (0..centers.len())
                .into_par_iter()
                .map(|q| {
                    let mut acc = CVec3::ZERO;
                    for (p, up) in u.iter().enumerate() {
                        if p != q {
                            let d = centers[q] - centers[p];
                            acc += apply_grad_cross(&d, d.norm(), k, up);
                        }
                    }
                    acc
                })
                .collect();
            (curl, stats, scattered)
        }
    };
    let e = e0.iter().zip(&scattered).map(|(a, s)| *a - *s).collect();
    Ok(IeSolution { e, curl, stats, method })
}
