//! Partition of the particle domain into equal cubes.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScatterError};
use crate::linalg::{Vec3, C64};
use crate::many_body::Domain;
use crate::one_body::validate_h;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    /// Lattice index within the bounding box.
    pub index: [usize; 3],
    pub center: Vec3,
    pub density: f64,
    pub h: C64,
}

/// Cubes of side `side` tiling `domain`. Every box of the domain must be a
/// union of lattice cells anchored at the domain's lower corner.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CubeGrid {
    pub domain: Domain,
    pub origin: Vec3,
    pub side: f64,
    /// Lattice cells per axis over the bounding box.
    pub dims: [usize; 3],
    pub cells: Vec<GridCell>,
    /// Position of each lattice cell in `cells`, `None` outside the domain.
    lookup: Vec<Option<usize>>,
}

fn near_integer(x: f64) -> Option<usize> {
    let r = x.round();
    ((x - r).abs() <= 1e-9 * x.abs().max(1.0) && r >= 0.0).then_some(r as usize)
}

impl CubeGrid {
    pub fn new(domain: &Domain, side: f64, density: &dyn Fn(&Vec3) -> f64, impedance: &dyn Fn(&Vec3) -> C64) -> Result<Self> {
        domain.validate()?;
        if !(side.is_finite() && side > 0.0) {
            return Err(ScatterError::Validation(format!("cube side must be positive, got {side}")));
        }
        let mut lo = domain.boxes[0].min;
        let mut hi = domain.boxes[0].max;
        for b in &domain.boxes {
            for i in 0..3 {
                lo[i] = lo[i].min(b.min[i]);
                hi[i] = hi[i].max(b.max[i]);
            }
        }
        let mut dims = [0usize; 3];
        for i in 0..3 {
            dims[i] = near_integer((hi[i] - lo[i]) / side).ok_or_else(|| {
                ScatterError::Validation(format!("domain extent along axis {i} is not a multiple of the cube side {side}"))
            })?;
        }
        let total = dims.iter().product();
        let mut lookup = vec![None; total];
        let mut cells = Vec::new();
        for b in &domain.boxes {
            let mut start = [0usize; 3];
            let mut end = [0usize; 3];
            for i in 0..3 {
                let s = near_integer((b.min[i] - lo[i]) / side);
                let e = near_integer((b.max[i] - lo[i]) / side);
                match (s, e) {
                    (Some(s), Some(e)) => {
                        start[i] = s;
                        end[i] = e;
                    }
                    _ => {
                        return Err(ScatterError::Validation(format!(
                            "domain box is not aligned with cubes of side {side}"
                        )))
                    }
                }
            }
            for i in start[0]..end[0] {
                for j in start[1]..end[1] {
                    for l in start[2]..end[2] {
                        let flat = (i * dims[1] + j) * dims[2] + l;
                        if lookup[flat].is_some() {
                            continue;
                        }
                        lookup[flat] = Some(usize::MAX);
                    }
                }
            }
        }
        // Fill cells in lexicographic lattice order.
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                for l in 0..dims[2] {
                    let flat = (i * dims[1] + j) * dims[2] + l;
                    if lookup[flat].is_none() {
                        continue;
                    }
                    let center = Vec3::new(
                        lo[0] + (i as f64 + 0.5) * side,
                        lo[1] + (j as f64 + 0.5) * side,
                        lo[2] + (l as f64 + 0.5) * side,
                    );
                    let n = density(&center);
                    if !(n.is_finite() && n >= 0.0) {
                        return Err(ScatterError::Validation(format!("density must be finite and non-negative, N = {n} at {:?}", center.0)));
                    }
                    let h = impedance(&center);
                    validate_h(h)?;
                    lookup[flat] = Some(cells.len());
                    cells.push(GridCell { index: [i, j, l], center, density: n, h });
                }
            }
        }
        Ok(CubeGrid { domain: domain.clone(), origin: lo, side, dims, cells, lookup })
    }

    /// Grid with `per_unit` cubes per unit length.
    pub fn with_resolution(domain: &Domain, per_unit: usize, density: &dyn Fn(&Vec3) -> f64, impedance: &dyn Fn(&Vec3) -> C64) -> Result<Self> {
        Self::new(domain, 1.0 / per_unit as f64, density, impedance)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell_volume(&self) -> f64 {
        self.side.powi(3)
    }

    pub fn total_volume(&self) -> f64 {
        self.len() as f64 * self.cell_volume()
    }

    /// Whether every lattice cell of the bounding box belongs to the domain.
    pub fn is_full_box(&self) -> bool {
        self.lookup.iter().all(Option::is_some)
    }

    pub fn cell_at(&self, index: [usize; 3]) -> Option<usize> {
        if (0..3).any(|i| index[i] >= self.dims[i]) {
            return None;
        }
        self.lookup[(index[0] * self.dims[1] + index[1]) * self.dims[2] + index[2]]
    }

    pub fn indices(&self) -> Vec<[usize; 3]> {
        self.cells.iter().map(|c| c.index).collect()
    }

    /// Whether `N·h` is the same in every cell (relative `tol`).
    pub fn uniform_coefficient(&self, tol: f64) -> Option<C64> {
        let first = self.cells.first()?;
        let v = first.h * first.density;
        let scale = v.norm().max(f64::MIN_POSITIVE);
        self.cells
            .iter()
            .all(|c| (c.h * c.density - v).norm() <= tol * scale)
            .then_some(v)
    }

    /// Trilinear interpolation of cell-center values at `x`; outside the
    /// hull of centers the nearest cells are extrapolated linearly. Falls
    /// back to the nearest cell when a stencil cell is missing.
    pub fn interpolate<T>(&self, values: &[T], x: &Vec3) -> T
    where
        T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for i in 0..3 {
            let s = (x[i] - self.origin[i]) / self.side - 0.5;
            if self.dims[i] == 1 {
                base[i] = 0;
                frac[i] = 0.0;
                continue;
            }
            let b = s.floor().clamp(0.0, (self.dims[i] - 2) as f64);
            base[i] = b as usize;
            frac[i] = s - b;
        }
        let mut acc: Option<T> = None;
        for corner in 0..8 {
            let off = [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1];
            let idx = [0, 1, 2].map(|i| base[i] + off[i].min(self.dims[i] - 1 - base[i]));
            let w: f64 = (0..3).map(|i| if off[i] == 1 { frac[i] } else { 1.0 - frac[i] }).product();
            match self.cell_at(idx) {
                Some(c) => {
                    let term = values[c] * w;
                    acc = Some(match acc {
                        Some(a) => a + term,
                        None => term,
                    });
                }
                None => return values[self.nearest(x)],
            }
        }
        acc.expect("eight corners")
    }

    pub fn nearest(&self, x: &Vec3) -> usize {
        let idx = [0, 1, 2].map(|i| {
            let s = ((x[i] - self.origin[i]) / self.side).floor();
            s.clamp(0.0, (self.dims[i] - 1) as f64) as usize
        });
        self.cell_at(idx).unwrap_or_else(|| {
            (0..self.len())
                .min_by(|&a, &b| (self.cells[a].center - *x).norm().total_cmp(&(self.cells[b].center - *x).norm()))
                .expect("non-empty grid")
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::many_body::AxisBox;

    fn one(_: &Vec3) -> f64 {
        1.0
    }
    fn h1(_: &Vec3) -> C64 {
        C64::new(1.0, 0.0)
    }

    #[test]
    fn cubes_tile_the_domain() {
        let dom = Domain::new(vec![
            AxisBox::unit_cube(),
            AxisBox::new(Vec3::new(1.0, 0.0, 0.0), Vec3::new(1.5, 0.5, 0.5)).unwrap(),
        ])
        .unwrap();
        let g = CubeGrid::new(&dom, 0.125, &one, &h1).unwrap();
        assert!((g.total_volume() - dom.volume()).abs() < 1e-12);
        assert!(!g.is_full_box());
        assert!(g.cells.iter().all(|c| dom.contains(&c.center)));
        assert!(CubeGrid::new(&dom, 0.3, &one, &h1).is_err());
    }

    #[test]
    fn interpolation_is_exact_for_linear_fields() {
        let g = CubeGrid::with_resolution(&Domain::single(AxisBox::unit_cube()), 5, &one, &h1).unwrap();
        let f = |p: &Vec3| 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[2];
        let vals: Vec<f64> = g.cells.iter().map(|c| f(&c.center)).collect();
        for x in [Vec3::new(0.33, 0.71, 0.12), Vec3::new(0.01, 0.99, 0.5), Vec3::new(0.5, 0.5, 0.5)] {
            assert!((g.interpolate(&vals, &x) - f(&x)).abs() < 1e-12);
        }
    }

    #[test]
    fn uniformity_detection() {
        let dom = Domain::single(AxisBox::unit_cube());
        let g = CubeGrid::with_resolution(&dom, 4, &one, &h1).unwrap();
        assert_eq!(g.uniform_coefficient(1e-12), Some(C64::new(1.0, 0.0)));
        let g = CubeGrid::with_resolution(&dom, 4, &|x| x[0], &h1).unwrap();
        assert!(g.uniform_coefficient(1e-12).is_none());
    }
}
