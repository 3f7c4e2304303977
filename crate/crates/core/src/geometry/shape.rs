//! Particle shapes: sphere, oriented ellipsoid and closed triangle meshes.
//!
//! Every shape is described in its body frame with the particle origin `O`
//! at the coordinate origin.
//!
//! Triangle meshes are read from and written to ASCII OFF files:
//!
//! ```text
//! OFF
//! # comments start with '#'
//! <n_vertices> <n_faces> <n_edges, ignored>
//! x y z              (n_vertices lines)
//! 3 i j k            (n_faces lines, 0-based indices, counter-clockwise
//!                     seen from outside)
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScatterError};
use crate::linalg::Vec3;

/// Real 3×3 rotation, row-major, mapping body to lab coordinates.
pub type Rotation = [[f64; 3]; 3];

pub const IDENTITY_ROTATION: Rotation = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

pub(crate) fn rot_apply(r: &Rotation, v: &Vec3) -> Vec3 {
    Vec3([
        r[0][0] * v[0] + r[0][1] * v[1] + r[0][2] * v[2],
        r[1][0] * v[0] + r[1][1] * v[1] + r[1][2] * v[2],
        r[2][0] * v[0] + r[2][1] * v[1] + r[2][2] * v[2],
    ])
}

pub(crate) fn rot_apply_t(r: &Rotation, v: &Vec3) -> Vec3 {
    Vec3([
        r[0][0] * v[0] + r[1][0] * v[1] + r[2][0] * v[2],
        r[0][1] * v[0] + r[1][1] * v[1] + r[2][1] * v[2],
        r[0][2] * v[0] + r[1][2] * v[1] + r[2][2] * v[2],
    ])
}

fn validate_rotation(r: &Rotation) -> Result<()> {
    for i in 0..3 {
        for j in 0..3 {
            let dot: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            if (dot - want).abs() > 1e-10 {
                return Err(ScatterError::Validation("ellipsoid orientation is not orthonormal".into()));
            }
        }
    }
    let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
        + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
    if det < 0.0 {
        return Err(ScatterError::Validation("ellipsoid orientation must be a proper rotation".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParticleShape {
    Sphere {
        radius: f64,
    },
    Ellipsoid {
        semi_axes: [f64; 3],
        #[serde(default = "default_rotation")]
        orientation: Rotation,
    },
    #[serde(skip)]
    TriMesh(TriMesh),
}

fn default_rotation() -> Rotation {
    IDENTITY_ROTATION
}

impl ParticleShape {
    pub fn sphere(radius: f64) -> Self {
        ParticleShape::Sphere { radius }
    }

    pub fn ellipsoid(semi_axes: [f64; 3]) -> Self {
        ParticleShape::Ellipsoid { semi_axes, orientation: IDENTITY_ROTATION }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ParticleShape::Sphere { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(ScatterError::Validation(format!("sphere radius must be positive, got {radius}")));
                }
            }
            ParticleShape::Ellipsoid { semi_axes, orientation } => {
                if semi_axes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
                    return Err(ScatterError::Validation(format!(
                        "ellipsoid semi-axes must be positive, got {semi_axes:?}"
                    )));
                }
                validate_rotation(orientation)?;
            }
            ParticleShape::TriMesh(mesh) => mesh.validate()?,
        }
        Ok(())
    }

    /// Characteristic size `a = diam(D)/2`.
    pub fn characteristic_size(&self) -> f64 {
        match self {
            ParticleShape::Sphere { radius } => *radius,
            ParticleShape::Ellipsoid { semi_axes, .. } => semi_axes.iter().cloned().fold(0.0, f64::max),
            ParticleShape::TriMesh(mesh) => 0.5 * mesh.diameter(),
        }
    }

    /// Same shape uniformly scaled so that its characteristic size is `a`.
    pub fn with_size(&self, a: f64) -> Self {
        let s = a / self.characteristic_size();
        self.scaled(s)
    }

    pub fn scaled(&self, s: f64) -> Self {
        match self {
            ParticleShape::Sphere { radius } => ParticleShape::Sphere { radius: radius * s },
            ParticleShape::Ellipsoid { semi_axes, orientation } => ParticleShape::Ellipsoid {
                semi_axes: semi_axes.map(|a| a * s),
                orientation: *orientation,
            },
            ParticleShape::TriMesh(mesh) => ParticleShape::TriMesh(TriMesh {
                vertices: mesh.vertices.iter().map(|v| *v * s).collect(),
                triangles: mesh.triangles.clone(),
            }),
        }
    }

    /// Rotates the shape about its origin.
    pub fn rotated(&self, r: &Rotation) -> Result<Self> {
        validate_rotation(r)?;
        Ok(match self {
            ParticleShape::Sphere { .. } => self.clone(),
            ParticleShape::Ellipsoid { semi_axes, orientation } => {
                let mut o = [[0.0; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        o[i][j] = (0..3).map(|k| r[i][k] * orientation[k][j]).sum();
                    }
                }
                ParticleShape::Ellipsoid { semi_axes: *semi_axes, orientation: o }
            }
            ParticleShape::TriMesh(mesh) => ParticleShape::TriMesh(TriMesh {
                vertices: mesh.vertices.iter().map(|v| rot_apply(r, v)).collect(),
                triangles: mesh.triangles.clone(),
            }),
        })
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self, ParticleShape::Sphere { .. })
    }
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let m = TriMesh { vertices, triangles };
        m.validate()?;
        Ok(m)
    }

    pub fn triangle(&self, t: usize) -> [Vec3; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }

    /// Area-weighted outward normal `(v1−v0)×(v2−v0)/2`.
    pub fn area_vector(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.triangle(t);
        (b - a).cross(&(c - a)) * 0.5
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area_vector(t).norm()).sum()
    }

    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|tri| {
                let [a, b, c] = tri.map(|i| self.vertices[i]);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    pub fn diameter(&self) -> f64 {
        let mut d2: f64 = 0.0;
        for (i, p) in self.vertices.iter().enumerate() {
            for q in &self.vertices[i + 1..] {
                d2 = d2.max((*p - *q).dot(&(*p - *q)));
            }
        }
        d2.sqrt()
    }

    /// Closed, consistently oriented, no degenerate faces, positive volume.
    pub fn validate(&self) -> Result<()> {
        if self.vertices.len() < 4 || self.triangles.len() < 4 {
            return Err(ScatterError::Validation("mesh needs at least 4 vertices and 4 triangles".into()));
        }
        let scale = self.diameter();
        let mut edges: HashMap<(usize, usize), i32> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= self.vertices.len()) {
                return Err(ScatterError::Validation(format!("triangle {t} references a missing vertex")));
            }
            if self.area_vector(t).norm() <= 1e-14 * scale * scale {
                return Err(ScatterError::Validation(format!("triangle {t} has zero area")));
            }
            for e in 0..3 {
                let (i, j) = (tri[e], tri[(e + 1) % 3]);
                *edges.entry((i, j)).or_insert(0) += 1;
            }
        }
        for (&(i, j), &n) in &edges {
            if n != 1 || edges.get(&(j, i)).copied() != Some(1) {
                return Err(ScatterError::Validation(format!(
                    "mesh is not closed and consistently oriented at edge ({i}, {j})"
                )));
            }
        }
        if self.signed_volume() <= 0.0 {
            return Err(ScatterError::Validation("mesh encloses non-positive volume (inward orientation?)".into()));
        }
        Ok(())
    }

    /// Axis-aligned cube `[-s/2, s/2]³`, two triangles per face.
    pub fn cube(side: f64) -> Self {
        let h = 0.5 * side;
        let vertices = (0..8)
            .map(|i| {
                Vec3::new(
                    if i & 1 == 0 { -h } else { h },
                    if i & 2 == 0 { -h } else { h },
                    if i & 4 == 0 { -h } else { h },
                )
            })
            .collect();
        let quads = [
            [0, 2, 3, 1], // z = -h
            [4, 5, 7, 6], // z = +h
            [0, 1, 5, 4], // y = -h
            [2, 6, 7, 3], // y = +h
            [0, 4, 6, 2], // x = -h
            [1, 3, 7, 5], // x = +h
        ];
        let triangles = quads
            .iter()
            .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
            .collect();
        TriMesh { vertices, triangles }
    }

    /// Geodesic sphere from a subdivided icosahedron.
    pub fn icosphere(radius: f64, subdivisions: usize) -> Self {
        let p = (1.0 + 5f64.sqrt()) / 2.0;
        let mut vertices: Vec<Vec3> = [
            [-1.0, p, 0.0],
            [1.0, p, 0.0],
            [-1.0, -p, 0.0],
            [1.0, -p, 0.0],
            [0.0, -1.0, p],
            [0.0, 1.0, p],
            [0.0, -1.0, -p],
            [0.0, 1.0, -p],
            [p, 0.0, -1.0],
            [p, 0.0, 1.0],
            [-p, 0.0, -1.0],
            [-p, 0.0, 1.0],
        ]
        .iter()
        .map(|v| Vec3(*v).normalized())
        .collect();
        let mut triangles: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..subdivisions {
            let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
            let mut midpoint = |i: usize, j: usize, verts: &mut Vec<Vec3>| -> usize {
                let key = (i.min(j), i.max(j));
                *mid.entry(key).or_insert_with(|| {
                    verts.push(((verts[i] + verts[j]) * 0.5).normalized());
                    verts.len() - 1
                })
            };
            let mut next = Vec::with_capacity(triangles.len() * 4);
            for [a, b, c] in triangles {
                let ab = midpoint(a, b, &mut vertices);
                let bc = midpoint(b, c, &mut vertices);
                let ca = midpoint(c, a, &mut vertices);
                next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            triangles = next;
        }
        TriMesh {
            vertices: vertices.into_iter().map(|v| v * radius).collect(),
            triangles,
        }
    }

    pub fn to_off(&self) -> String {
        let mut s = String::from("OFF\n");
        let _ = writeln!(s, "{} {} 0", self.vertices.len(), self.triangles.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{} {} {}", v[0], v[1], v[2]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
        }
        s
    }

    pub fn from_off(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let parse_err = |line: usize, message: &str| ScatterError::Parse { line, message: message.to_string() };

        let (line, header) = lines.next().ok_or_else(|| parse_err(1, "empty mesh file"))?;
        let mut counts_line = None;
        if header != "OFF" {
            if let Some(rest) = header.strip_prefix("OFF") {
                counts_line = Some((line, rest.trim()));
            } else {
                return Err(parse_err(line, "expected 'OFF' header"));
            }
        }
        let (line, counts) = match counts_line {
            Some(c) => c,
            None => lines.next().ok_or_else(|| parse_err(line, "missing counts line"))?,
        };
        let nums: Vec<usize> = counts
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(line, "invalid count")))
            .collect::<Result<_>>()?;
        if nums.len() < 2 {
            return Err(parse_err(line, "counts line needs vertex and face counts"));
        }
        let (nv, nf) = (nums[0], nums[1]);
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (line, l) = lines.next().ok_or_else(|| parse_err(line, "unexpected end of vertex list"))?;
            let xyz: Vec<f64> = l
                .split_whitespace()
                .take(3)
                .map(|t| t.parse().map_err(|_| parse_err(line, "invalid vertex coordinate")))
                .collect::<Result<_>>()?;
            if xyz.len() != 3 {
                return Err(parse_err(line, "vertex needs three coordinates"));
            }
            vertices.push(Vec3([xyz[0], xyz[1], xyz[2]]));
        }
        let mut triangles = Vec::with_capacity(nf);
        for _ in 0..nf {
            let (line, l) = lines.next().ok_or_else(|| parse_err(line, "unexpected end of face list"))?;
            let idx: Vec<usize> = l
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| parse_err(line, "invalid face index")))
                .collect::<Result<_>>()?;
            if idx.first() != Some(&3) || idx.len() < 4 {
                return Err(parse_err(line, "only triangular faces ('3 i j k') are supported"));
            }
            triangles.push([idx[1], idx[2], idx[3]]);
        }
        TriMesh::new(vertices, triangles)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_off(&text)
    }
}
