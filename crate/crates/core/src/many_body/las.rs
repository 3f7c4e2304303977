//! Linear algebraic system for the effective field at the particles.
//!
//! With `A_j = ∇×E_e(x_j)` and `w_m = c_S·a^{2−κ}·h(x_m)/(iωμ₀)`:
//!
//! ```text
//! A_j + Σ_{m≠j} w_m·K(x_j, x_m)·Ξ·A_m = ∇×E₀(x_j)
//! E_e(x) = E₀(x) − Σ_m w_m·∇ₓg(x, x_m) × Ξ·A_m
//! ```
//!
//! Blocks are formed on demand; the dense matrix is only built for the
//! direct solver.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cloud::{check_overlap, ParticleCloud, OVERLAP_RATIO};
use crate::error::{Result, ScatterError};
use crate::fields::{IncidentField, Medium};
use crate::green::{apply_grad_cross, apply_kernel, interaction_kernel};
use crate::linalg::{CMat3, CVec3, Vec3, C64};
use crate::one_body::Exclusion;
use crate::solver::{dense_solve, gmres, relative_residual, GmresOptions, LinearOperator, SolveMethod, SolveStats};

#[derive(Debug, Clone)]
pub struct LasSystem {
    positions: Vec<Vec3>,
    /// `w_m`, the complex particle strengths.
    weights: Vec<C64>,
    xi: CMat3,
    k: f64,
    /// `∇×E₀(x_j)`.
    pub rhs: Vec<CVec3>,
}

/// Common strength prefactor `c_S·a^{2−κ}/(iωμ₀)`.
pub fn coupling(cloud: &ParticleCloud, med: &Medium) -> C64 {
    C64::new(cloud.shape_matrices.c_s * cloud.strength_scale(), 0.0) / med.i_omega_mu()
}

pub fn assemble_las(cloud: &ParticleCloud, med: &Medium, incident: &dyn IncidentField) -> Result<LasSystem> {
    med.validate()?;
    check_overlap(&cloud.positions, OVERLAP_RATIO * cloud.a)?;
    let c = coupling(cloud, med);
    let rhs = cloud.positions.par_iter().map(|x| incident.curl_e(med, x)).collect();
    Ok(LasSystem {
        positions: cloud.positions.clone(),
        weights: cloud.h_values.iter().map(|h| c * h).collect(),
        xi: cloud.shape_matrices.xi,
        k: med.k(),
        rhs,
    })
}

impl LasSystem {
    /// Builds a system directly from points, strengths and `Ξ`; used by the
    /// grid discretization of the limiting equation, which has the same form.
    pub(crate) fn from_raw(positions: Vec<Vec3>, weights: Vec<C64>, xi: CMat3, k: f64, rhs: Vec<CVec3>) -> Self {
        LasSystem { positions, weights, xi, k, rhs }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Block `(j, m)` of `I + B`.
    pub fn block(&self, j: usize, m: usize) -> CMat3 {
        if j == m {
            return CMat3::identity();
        }
        let kern = interaction_kernel(&self.positions[j], &self.positions[m], self.k).expect("distinct particles");
        (kern * self.xi).scale(self.weights[m])
    }

    pub fn rhs_flat(&self) -> Vec<C64> {
        self.rhs.iter().flat_map(|v| v.0).collect()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.len();
        let mut m = DMatrix::from_element(3 * n, 3 * n, C64::new(0.0, 0.0));
        for j in 0..n {
            for c in 0..n {
                let b = self.block(j, c);
                for r in 0..3 {
                    for s in 0..3 {
                        m[(3 * j + r, 3 * c + s)] = b.0[r][s];
                    }
                }
            }
        }
        m
    }

    /// Same system with all interactions removed.
    pub fn decoupled(&self) -> Self {
        let mut s = self.clone();
        s.weights.iter_mut().for_each(|w| *w = C64::new(0.0, 0.0));
        s
    }
}

/// `u_m = w_m·Ξ·v_m`.
fn sources(weights: &[C64], xi: &CMat3, v: &[CVec3]) -> Vec<CVec3> {
    weights.iter().zip(v).map(|(w, vm)| xi.mul_vec(vm) * *w).collect()
}

fn as_vec3s(x: &[C64]) -> Vec<CVec3> {
    x.chunks_exact(3).map(|c| CVec3([c[0], c[1], c[2]])).collect()
}

impl LinearOperator for LasSystem {
    fn dim(&self) -> usize {
        3 * self.len()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let v = as_vec3s(x);
        let u = sources(&self.weights, &self.xi, &v);
        let out: Vec<CVec3> = (0..self.len())
            .into_par_iter()
            .map(|j| {
                let xj = self.positions[j];
                let mut acc = v[j];
                for (m, (xm, um)) in self.positions.iter().zip(&u).enumerate() {
                    if m == j {
                        continue;
                    }
                    let d = xj - *xm;
                    acc += apply_kernel(&d, d.norm(), self.k, um);
                }
                acc
            })
            .collect();
        for (chunk, o) in y.chunks_exact_mut(3).zip(out) {
            chunk.copy_from_slice(&o.0);
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LasSolution {
    /// `A_m = ∇×E_e(x_m)`.
    pub curl: Vec<CVec3>,
    pub method: SolveMethod,
    pub stats: SolveStats,
}

pub fn solve_las(sys: &LasSystem, method: SolveMethod, opts: &GmresOptions) -> Result<LasSolution> {
    let b = sys.rhs_flat();
    if sys.weights.iter().all(|w| *w == C64::new(0.0, 0.0)) {
        let stats = SolveStats { iterations: 0, relative_residual: 0.0 };
        return Ok(LasSolution { curl: sys.rhs.clone(), method, stats });
    }
    let (x, stats) = match method {
        SolveMethod::Direct => {
            let x = dense_solve(sys.to_dense(), &b)?;
            let relative_residual = relative_residual(sys, &x, &b);
            if relative_residual > opts.tol.max(1e-12) {
                return Err(ScatterError::NotConverged { iterations: 0, residual: relative_residual });
            }
            (x, SolveStats { iterations: 0, relative_residual })
        }
        SolveMethod::Iterative => gmres(sys, &b, opts)?,
    };
    Ok(LasSolution { curl: as_vec3s(&x), method, stats })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub position: Vec3,
    pub e: CVec3,
    pub h: Option<CVec3>,
}

/// Field evaluator over a solved cloud.
pub struct EffectiveField<'a> {
    cloud: &'a ParticleCloud,
    med: Medium,
    incident: &'a dyn IncidentField,
    sources: Vec<CVec3>,
    pub exclusion: Exclusion,
}

impl<'a> EffectiveField<'a> {
    pub fn new(cloud: &'a ParticleCloud, sol: &LasSolution, med: &Medium, incident: &'a dyn IncidentField) -> Result<Self> {
        if sol.curl.len() != cloud.len() {
            return Err(ScatterError::Validation(format!(
                "solution has {} entries for {} particles",
                sol.curl.len(),
                cloud.len()
            )));
        }
        let c = coupling(cloud, med);
        let weights: Vec<C64> = cloud.h_values.iter().map(|h| c * h).collect();
        Ok(EffectiveField {
            cloud,
            med: *med,
            incident,
            sources: sources(&weights, &cloud.shape_matrices.xi, &sol.curl),
            exclusion: Exclusion::default(),
        })
    }

    /// `Σ_{m ∉ skip} ∇g × u_m` and, on request, `Σ K·u_m`.
    fn sums(&self, x: &Vec3, skip: Option<usize>, with_curl: bool) -> (CVec3, CVec3) {
        let k = self.med.k();
        let mut e = CVec3::ZERO;
        let mut curl = CVec3::ZERO;
        for (m, (xm, um)) in self.cloud.positions.iter().zip(&self.sources).enumerate() {
            if Some(m) == skip {
                continue;
            }
            let d = *x - *xm;
            let r = d.norm();
            e += apply_grad_cross(&d, r, k, um);
            if with_curl {
                curl += apply_kernel(&d, r, k, um);
            }
        }
        (e, curl)
    }

    fn sample(&self, x: &Vec3, skip: Option<usize>, with_h: bool) -> FieldSample {
        let (s, c) = self.sums(x, skip, with_h);
        let e = self.incident.e(&self.med, x) - s;
        let h = with_h.then(|| (self.incident.curl_e(&self.med, x) - c) * (C64::new(1.0, 0.0) / self.med.i_omega_mu()));
        FieldSample { position: *x, e, h }
    }

    /// `E_e(x)` (and `H`) at a point at least the exclusion distance from
    /// every particle.
    pub fn at(&self, x: &Vec3, with_h: bool) -> Result<FieldSample> {
        for p in &self.cloud.positions {
            self.exclusion.check(x, p, self.cloud.a)?;
        }
        Ok(self.sample(x, None, with_h))
    }

    /// `E_e(x) − E₀(x)`, the field scattered by all particles.
    pub fn scattered(&self, x: &Vec3) -> Result<CVec3> {
        for p in &self.cloud.positions {
            self.exclusion.check(x, p, self.cloud.a)?;
        }
        Ok(-self.sums(x, None, false).0)
    }

    /// Field acting on particle `j`, excluding its own contribution.
    pub fn at_particle(&self, j: usize, with_h: bool) -> FieldSample {
        self.sample(&self.cloud.positions[j], Some(j), with_h)
    }

    pub fn at_points(&self, xs: &[Vec3], with_h: bool) -> Result<Vec<FieldSample>> {
        xs.par_iter().map(|x| self.at(x, with_h)).collect()
    }

    pub fn at_all_particles(&self, with_h: bool) -> Vec<FieldSample> {
        (0..self.cloud.len()).into_par_iter().map(|j| self.at_particle(j, with_h)).collect()
    }
}

/// One-shot evaluation of `E_e` (and `H`) at `x`.
pub fn effective_field(
    cloud: &ParticleCloud,
    sol: &LasSolution,
    med: &Medium,
    incident: &dyn IncidentField,
    x: &Vec3,
) -> Result<FieldSample> {
    EffectiveField::new(cloud, sol, med, incident)?.at(x, true)
}
