//! Shape matrices of a particle surface.
//!
//! * `b_{mj} = |S|⁻¹ ∫_S N_m N_j ds` and `τ = I − b`
//! * `β_{mj}(t) = ∫_S ∂g₀(s,t)/∂s_m · N_j(s) ds` with the static kernel
//!   `g₀ = 1/(4π|s−t|)`, averaged over sample points `t ∈ S`
//! * `I + α = (I + β)⁻¹` and `Ξ = (I + α)·τ`
//!
//! The β integrand is `O(|s−t|⁻²)` at `s = t`. Its tangential part is odd
//! around `t` and only exists as a principal value, so the local rules are
//! built symmetric about `t`: on smooth shapes a polar rule whose axis passes
//! through `t` (antipodal azimuth nodes cancel the odd part exactly); on
//! meshes the flat self-triangle is integrated in polar coordinates
//! analytically in the radius, and nearby triangles are subdivided.
//!
//! `trace β(t) = ∫_S ∂g₀/∂N ds = −1/2` for every `t` on a smooth part of `S`
//! (Gauss' solid-angle identity), which makes a convenient accuracy check.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::quadrature::{build_quadrature, orthonormal_frame, SmoothMap, SurfaceQuadrature};
use super::rules::{gauss_legendre_on, triangle_rule};
use super::shape::{ParticleShape, TriMesh};
use crate::error::{Result, ScatterError};
use crate::green::grad_static;
use crate::linalg::{CMat3, Vec3, C64};

/// Default number of β evaluation points.
pub const DEFAULT_T_SAMPLES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeMatrices {
    pub b: CMat3,
    pub tau: CMat3,
    pub beta: CMat3,
    pub alpha: CMat3,
    pub xi: CMat3,
    pub surface_area: f64,
    /// `|S| / a²`.
    pub c_s: f64,
    /// Characteristic size `a` the matrices were computed at.
    pub size: f64,
    /// Largest entrywise deviation of a single-point β(t) from the mean.
    pub beta_max_deviation: f64,
}

impl ShapeMatrices {
    /// `Ξ = ξ·I` when `Ξ` is a multiple of the identity to relative `tol`.
    pub fn scalar_xi(&self, tol: f64) -> Option<C64> {
        let xi = self.xi.trace() / 3.0;
        let dev = (self.xi - CMat3::scalar(xi)).norm();
        (dev <= tol * self.xi.norm()).then_some(xi)
    }
}

/// β averaged over sample points, with per-point values for diagnostics.
#[derive(Debug, Clone)]
pub struct BetaEstimate {
    pub mean: CMat3,
    pub per_point: Vec<CMat3>,
    pub max_deviation: f64,
}

fn real_to_c(m: [[f64; 3]; 3]) -> CMat3 {
    CMat3::from_real(m)
}

pub fn compute_b(q: &SurfaceQuadrature) -> CMat3 {
    let mut b = [[0.0; 3]; 3];
    for (n, w) in q.normals.iter().zip(&q.weights) {
        for m in 0..3 {
            for j in 0..3 {
                b[m][j] += w * n[m] * n[j];
            }
        }
    }
    let area = q.area();
    real_to_c(b.map(|r| r.map(|x| x / area)))
}

/// β at each point of `t_samples` and their mean.
pub fn compute_beta(q: &SurfaceQuadrature, t_samples: &[Vec3]) -> Result<BetaEstimate> {
    if t_samples.is_empty() {
        return Err(ScatterError::Validation("at least one β sample point is required".into()));
    }
    let per_point = t_samples
        .iter()
        .map(|t| beta_at(&q.shape, q.order, t))
        .collect::<Result<Vec<_>>>()?;
    let mut mean = CMat3::zeros();
    for m in &per_point {
        mean = mean + *m;
    }
    mean = mean.scale(C64::new(1.0 / per_point.len() as f64, 0.0));
    let max_deviation = per_point.iter().map(|m| (*m - mean).max_abs()).fold(0.0, f64::max);
    Ok(BetaEstimate { mean, per_point, max_deviation })
}

/// β(t) for a single surface point.
pub fn beta_at(shape: &ParticleShape, order: usize, t: &Vec3) -> Result<CMat3> {
    let raw = match shape {
        ParticleShape::TriMesh(mesh) => beta_mesh(mesh, t)?,
        _ => beta_smooth(&SmoothMap::of(shape).expect("smooth shape"), shape.characteristic_size(), order, t)?,
    };
    Ok(real_to_c(raw))
}

fn beta_smooth(map: &SmoothMap, a: f64, order: usize, t: &Vec3) -> Result<[[f64; 3]; 3]> {
    let u = map.preimage(t);
    if (u.norm() - 1.0).abs() > 1e-8 {
        return Err(ScatterError::Validation(format!("β sample point {:?} is not on the surface", t.0)));
    }
    let pole = u.normalized();
    let mut beta = [[0.0; 3]; 3];
    for (s, n, w) in map.polar_rule(&pole, order) {
        if (s - *t).norm() <= 1e-12 * a {
            return Err(ScatterError::Desingularization(format!("quadrature node coincides with {:?}", t.0)));
        }
        let g = grad_static(&s, t);
        for m in 0..3 {
            for j in 0..3 {
                beta[m][j] += w * g[m] * n[j];
            }
        }
    }
    Ok(beta)
}

/// Subdivide a triangle while its diameter exceeds this fraction of the
/// distance from `t` to its centroid.
const NEAR_RATIO: f64 = 0.25;
const MAX_DEPTH: usize = 12;
const SELF_ANGULAR_NODES: usize = 48;

fn beta_mesh(mesh: &TriMesh, t: &Vec3) -> Result<[[f64; 3]; 3]> {
    let owner = locate_on_mesh(mesh, t)?;
    let mut beta = [[0.0; 3]; 3];
    for tri in 0..mesh.triangles.len() {
        let av = mesh.area_vector(tri);
        let n = av * (1.0 / av.norm());
        let grad_integral = if tri == owner {
            self_triangle_grad(&mesh.triangle(tri), &n, t)
        } else {
            let mut acc = Vec3::ZERO;
            integrate_near(&mesh.triangle(tri), t, 0, &mut acc);
            acc
        };
        for m in 0..3 {
            for j in 0..3 {
                beta[m][j] += grad_integral[m] * n[j];
            }
        }
    }
    Ok(beta)
}

/// Index of the triangle containing `t` in its interior.
fn locate_on_mesh(mesh: &TriMesh, t: &Vec3) -> Result<usize> {
    let scale = mesh.diameter();
    for tri in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.triangle(tri);
        let av = mesh.area_vector(tri);
        let area = av.norm();
        let n = av * (1.0 / area);
        if (*t - a).dot(&n).abs() > 1e-9 * scale {
            continue;
        }
        let l0 = (b - *t).cross(&(c - *t)).dot(&n) * 0.5 / area;
        let l1 = (c - *t).cross(&(a - *t)).dot(&n) * 0.5 / area;
        let l2 = 1.0 - l0 - l1;
        let lmin = l0.min(l1).min(l2);
        if lmin < -1e-9 {
            continue;
        }
        if lmin <= 1e-9 {
            return Err(ScatterError::Desingularization(format!(
                "β sample point {:?} lies on a mesh edge or vertex",
                t.0
            )));
        }
        return Ok(tri);
    }
    Err(ScatterError::Validation(format!("β sample point {:?} is not on the mesh", t.0)))
}

/// Principal value of `∫_T ∇ₛg₀(s,t) ds` over the flat triangle containing
/// `t`: in polar coordinates about `t` the radial integral is `ln R(φ)`,
/// the `ln ε` part cancels over the full angle.
fn self_triangle_grad(tri: &[Vec3; 3], n: &Vec3, t: &Vec3) -> Vec3 {
    let (e1, e2) = orthonormal_frame(n);
    let angle = |p: &Vec3| {
        let d = *p - *t;
        d.dot(&e2).atan2(d.dot(&e1))
    };
    let mut acc = Vec3::ZERO;
    for i in 0..3 {
        let (p, q) = (tri[i], tri[(i + 1) % 3]);
        let phi_a = angle(&p);
        let mut span = angle(&q) - phi_a;
        if span <= 0.0 {
            span += 2.0 * PI;
        }
        let edge = (q - p).normalized();
        let foot = p + edge * (*t - p).dot(&edge);
        let perp = foot - *t;
        let h = perp.norm();
        let phi_perp = angle(&foot);
        let (phis, ws) = gauss_legendre_on(SELF_ANGULAR_NODES, phi_a, phi_a + span);
        for (phi, w) in phis.iter().zip(&ws) {
            let (s, c) = phi.sin_cos();
            let dir = e1 * c + e2 * s;
            let r = h / (phi - phi_perp).cos();
            acc += dir * (w * r.ln());
        }
    }
    acc * (-1.0 / (4.0 * PI))
}

fn integrate_near(tri: &[Vec3; 3], t: &Vec3, depth: usize, acc: &mut Vec3) {
    let [a, b, c] = *tri;
    let centroid = (a + b + c) * (1.0 / 3.0);
    let diam = (a - b).norm().max((b - c).norm()).max((c - a).norm());
    if depth < MAX_DEPTH && diam > NEAR_RATIO * (centroid - *t).norm() {
        let (ab, bc, ca) = ((a + b) * 0.5, (b + c) * 0.5, (c + a) * 0.5);
        for sub in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]] {
            integrate_near(&sub, t, depth + 1, acc);
        }
        return;
    }
    let area = (b - a).cross(&(c - a)).norm() * 0.5;
    for (l, w) in triangle_rule(7) {
        let s = a * l[0] + b * l[1] + c * l[2];
        *acc += grad_static(&s, t) * (w * area);
    }
}

/// Quasi-uniform unit directions. Multiples of 6 use rotated octahedra so
/// that the set averages `ddᵀ` to exactly `I/3`; other counts use a
/// Fibonacci lattice.
pub fn sample_directions(n: usize) -> Vec<Vec3> {
    if n > 0 && n % 6 == 0 {
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let axis = Vec3::new(1.0, 2.0, 3.0).normalized();
        let mut out = Vec::with_capacity(n);
        for copy in 0..n / 6 {
            let theta = 2.0 * PI * golden * copy as f64;
            for e in 0..3 {
                let v = rodrigues(&Vec3::unit(e), &axis, theta);
                out.push(v);
                out.push(-v);
            }
        }
        out
    } else {
        let golden_angle = PI * (3.0 - 5f64.sqrt());
        (0..n)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                let r = (1.0 - z * z).sqrt();
                let (s, c) = (golden_angle * i as f64).sin_cos();
                Vec3::new(r * c, r * s, z)
            })
            .collect()
    }
}

fn rodrigues(v: &Vec3, axis: &Vec3, theta: f64) -> Vec3 {
    let (s, c) = theta.sin_cos();
    *v * c + axis.cross(v) * s + *axis * (axis.dot(v) * (1.0 - c))
}

/// Default β evaluation points on the surface of `shape`.
pub fn default_t_samples(shape: &ParticleShape, n: usize) -> Vec<Vec3> {
    let dirs = sample_directions(n);
    match shape {
        ParticleShape::TriMesh(mesh) => {
            let centroids: Vec<Vec3> = (0..mesh.triangles.len())
                .map(|t| {
                    let [a, b, c] = mesh.triangle(t);
                    (a + b + c) * (1.0 / 3.0)
                })
                .collect();
            let mut picked: Vec<usize> = Vec::new();
            for d in &dirs {
                let best = (0..centroids.len())
                    .max_by(|&i, &j| {
                        let ci = centroids[i].normalized().dot(d);
                        let cj = centroids[j].normalized().dot(d);
                        ci.total_cmp(&cj)
                    })
                    .expect("non-empty mesh");
                if !picked.contains(&best) {
                    picked.push(best);
                }
            }
            picked.into_iter().map(|i| centroids[i]).collect()
        }
        _ => {
            let map = SmoothMap::of(shape).expect("smooth shape");
            dirs.iter().map(|u| map.point(u)).collect()
        }
    }
}

/// Assembles all shape matrices for `shape` at its own size.
pub fn compute_shape_matrices(shape: &ParticleShape, order: usize, n_t_samples: usize) -> Result<ShapeMatrices> {
    let q = build_quadrature(shape, order)?;
    let b = compute_b(&q);
    let samples = default_t_samples(shape, n_t_samples.max(1));
    let beta = compute_beta(&q, &samples)?;
    shape_matrices_from(&q, b, &beta)
}

pub(crate) fn shape_matrices_from(q: &SurfaceQuadrature, b: CMat3, beta: &BetaEstimate) -> Result<ShapeMatrices> {
    let id = CMat3::identity();
    let i_plus_beta = id + beta.mean;
    let inv = i_plus_beta
        .inverse()
        .ok_or_else(|| ScatterError::Conditioning("I + β is singular; shape is outside the theory's validity".into()))?;
    let cond = i_plus_beta.norm() * inv.norm();
    if !(cond.is_finite() && cond < 1e8) {
        return Err(ScatterError::Conditioning(format!(
            "I + β is ill-conditioned (Frobenius condition {cond:.3e})"
        )));
    }
    let tau = id - b;
    let alpha = inv - id;
    let xi = inv * tau;
    let surface_area = q.area();
    let size = q.shape.characteristic_size();
    Ok(ShapeMatrices {
        b,
        tau,
        beta: beta.mean,
        alpha,
        xi,
        surface_area,
        c_s: surface_area / (size * size),
        size,
        beta_max_deviation: beta.max_deviation,
    })
}
