//! Surface quadrature on particle boundaries.
//!
//! Smooth shapes (sphere, ellipsoid) are parametrised over the unit sphere
//! `u ↦ A·u` with `A = R·diag(a₁,a₂,a₃)`; a Gauss–Legendre rule in the polar
//! angle and the trapezoid rule in azimuth are used. The polar axis can be
//! placed through an arbitrary surface point, which is how the weakly
//! singular integrals in [`super::matrices`] are handled.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::rules::{gauss_legendre_on, triangle_rule};
use super::shape::{rot_apply, rot_apply_t, ParticleShape, Rotation, TriMesh};
use crate::error::{Result, ScatterError};
use crate::linalg::Vec3;

/// Default polar order for smooth shapes (64 × 128 nodes).
pub const DEFAULT_SMOOTH_ORDER: usize = 64;
/// Default per-triangle rule for meshes (7-point, degree 5).
pub const DEFAULT_MESH_ORDER: usize = 7;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceQuadrature {
    pub nodes: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub normals: Vec<Vec3>,
    /// Shape the rule was built for; singular integrals rebuild local
    /// rules from it.
    pub shape: ParticleShape,
    pub order: usize,
}

impl SurfaceQuadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ wᵢ·N(sᵢ)`, zero for a closed surface.
    pub fn normal_sum(&self) -> Vec3 {
        let mut s = Vec3::ZERO;
        for (w, n) in self.weights.iter().zip(&self.normals) {
            s += *n * *w;
        }
        s
    }

    pub fn integrate(&self, f: impl Fn(&Vec3, &Vec3) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.normals)
            .zip(&self.weights)
            .map(|((s, n), w)| w * f(s, n))
            .sum()
    }
}

/// Linear map from the unit sphere onto a smooth shape.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SmoothMap {
    axes: [f64; 3],
    rot: Rotation,
}

impl SmoothMap {
    pub fn of(shape: &ParticleShape) -> Option<Self> {
        match shape {
            ParticleShape::Sphere { radius } => Some(SmoothMap {
                axes: [*radius; 3],
                rot: super::shape::IDENTITY_ROTATION,
            }),
            ParticleShape::Ellipsoid { semi_axes, orientation } => Some(SmoothMap { axes: *semi_axes, rot: *orientation }),
            ParticleShape::TriMesh(_) => None,
        }
    }

    /// `A·u`.
    pub fn point(&self, u: &Vec3) -> Vec3 {
        rot_apply(&self.rot, &Vec3([u[0] * self.axes[0], u[1] * self.axes[1], u[2] * self.axes[2]]))
    }

    /// `A⁻¹·x`.
    pub fn preimage(&self, x: &Vec3) -> Vec3 {
        let b = rot_apply_t(&self.rot, x);
        Vec3([b[0] / self.axes[0], b[1] / self.axes[1], b[2] / self.axes[2]])
    }

    /// Unit outward normal at `A·u` and the area stretch `|det A|·|A⁻ᵀu|`.
    pub fn normal_and_jacobian(&self, u: &Vec3) -> (Vec3, f64) {
        let [a, b, c] = self.axes;
        let m = rot_apply(&self.rot, &Vec3([u[0] / a, u[1] / b, u[2] / c]));
        let len = m.norm();
        (m * (1.0 / len), a * b * c * len)
    }

    /// Product rule with the polar axis through `pole` (a unit vector in
    /// parameter space): `order` Gauss–Legendre nodes in θ and `2·order`
    /// trapezoid nodes in φ. Returns (point, normal, weight) triples.
    pub fn polar_rule(&self, pole: &Vec3, order: usize) -> Vec<(Vec3, Vec3, f64)> {
        let (e1, e2) = orthonormal_frame(pole);
        let (th, wt) = gauss_legendre_on(order, 0.0, PI);
        let nphi = 2 * order;
        let dphi = 2.0 * PI / nphi as f64;
        let mut out = Vec::with_capacity(order * nphi);
        for (t, w) in th.iter().zip(&wt) {
            let (st, ct) = t.sin_cos();
            for j in 0..nphi {
                let (sp, cp) = (j as f64 * dphi).sin_cos();
                let u = *pole * ct + (e1 * cp + e2 * sp) * st;
                let (n, jac) = self.normal_and_jacobian(&u);
                out.push((self.point(&u), n, w * st * dphi * jac));
            }
        }
        out
    }
}

/// Two unit vectors completing `n` to a right-handed orthonormal frame.
pub(crate) fn orthonormal_frame(n: &Vec3) -> (Vec3, Vec3) {
    let helper = if n[0].abs() < 0.9 { Vec3::unit(0) } else { Vec3::unit(1) };
    let e1 = helper.cross(n).normalized();
    let e2 = n.cross(&e1);
    (e1, e2)
}

/// Builds a surface rule. For smooth shapes `order` is the number of polar
/// Gauss nodes; for meshes it selects the per-triangle rule (1, 3 or 7
/// points).
pub fn build_quadrature(shape: &ParticleShape, order: usize) -> Result<SurfaceQuadrature> {
    if order == 0 {
        return Err(ScatterError::Validation("quadrature order must be at least 1".into()));
    }
    shape.validate()?;
    let (nodes, normals, weights) = match shape {
        ParticleShape::TriMesh(mesh) => mesh_rule(mesh, order),
        _ => {
            let map = SmoothMap::of(shape).expect("smooth shape");
            let rule = map.polar_rule(&Vec3::unit(2), order);
            let mut nodes = Vec::with_capacity(rule.len());
            let mut normals = Vec::with_capacity(rule.len());
            let mut weights = Vec::with_capacity(rule.len());
            for (p, n, w) in rule {
                nodes.push(p);
                normals.push(n);
                weights.push(w);
            }
            (nodes, normals, weights)
        }
    };
    Ok(SurfaceQuadrature { nodes, weights, normals, shape: shape.clone(), order })
}

fn mesh_rule(mesh: &TriMesh, order: usize) -> (Vec<Vec3>, Vec<Vec3>, Vec<f64>) {
    let rule = triangle_rule(order);
    let mut nodes = Vec::new();
    let mut normals = Vec::new();
    let mut weights = Vec::new();
    for t in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.triangle(t);
        let av = mesh.area_vector(t);
        let area = av.norm();
        let n = av * (1.0 / area);
        for (l, w) in rule {
            nodes.push(a * l[0] + b * l[1] + c * l[2]);
            normals.push(n);
            weights.push(w * area);
        }
    }
    (nodes, normals, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_area_converges() {
        let q = build_quadrature(&ParticleShape::sphere(1.0), 24).unwrap();
        assert!((q.area() - 4.0 * PI).abs() < 1e-8);
        let q = build_quadrature(&ParticleShape::sphere(0.3), DEFAULT_SMOOTH_ORDER).unwrap();
        assert!((q.area() - 4.0 * PI * 0.09).abs() < 1e-12);
        assert_eq!(q.len(), 64 * 128);
    }

    #[test]
    fn unit_cube_mesh_area_is_exact() {
        let q = build_quadrature(&ParticleShape::TriMesh(TriMesh::cube(1.0)), DEFAULT_MESH_ORDER).unwrap();
        assert!((q.area() - 6.0).abs() < 1e-10);
    }

    #[test]
    fn normals_are_unit_and_sum_to_zero() {
        for shape in [
            ParticleShape::sphere(2.0),
            ParticleShape::ellipsoid([0.3, 0.5, 1.0]),
            ParticleShape::TriMesh(TriMesh::icosphere(1.0, 2)),
        ] {
            let a = shape.characteristic_size();
            let q = build_quadrature(&shape, 32).unwrap();
            assert!(q.normals.iter().all(|n| (n.norm() - 1.0).abs() < 1e-12));
            assert!(q.normal_sum().norm() < 1e-6 * q.area() / a);
            assert!(q.weights.iter().all(|w| *w > 0.0));
        }
    }

    #[test]
    fn ellipsoid_area_matches_reference() {
        // Prolate spheroid a = b = 1, c = 2: 2πa²(1 + c/(a e)·asin(e)), e² = 1 − a²/c².
        let (a, c): (f64, f64) = (1.0, 2.0);
        let e = (1.0 - a * a / (c * c)).sqrt();
        let exact = 2.0 * PI * a * a * (1.0 + c / (a * e) * e.asin());
        let q = build_quadrature(&ParticleShape::ellipsoid([a, a, c]), 48).unwrap();
        assert!((q.area() - exact).abs() / exact < 1e-10);
    }

    #[test]
    fn order_zero_is_rejected() {
        assert!(build_quadrature(&ParticleShape::sphere(1.0), 0).is_err());
    }

    #[test]
    fn polar_rule_with_tilted_pole_keeps_area() {
        let shape = ParticleShape::ellipsoid([0.4, 0.7, 1.0]);
        let map = SmoothMap::of(&shape).unwrap();
        let pole = Vec3::new(0.3, -0.5, 0.8).normalized();
        let area: f64 = map.polar_rule(&pole, 48).iter().map(|r| r.2).sum();
        let q = build_quadrature(&shape, 48).unwrap();
        assert!((area - q.area()).abs() / q.area() < 1e-10);
    }
}
