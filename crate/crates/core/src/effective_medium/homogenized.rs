//! Homogenized medium for uniform particle loading and a finite-difference
//! check of the grid solution against the modified wave equation.

use serde::{Deserialize, Serialize};

use super::grid::CubeGrid;
use super::limit::IeSolution;
use crate::error::{Result, ScatterError};
use crate::fields::Medium;
use crate::geometry::ShapeMatrices;
use crate::linalg::{CVec3, C64};
use crate::one_body::validate_h;

/// Relative off-diagonal size above which `Ξ` is not treated as scalar.
pub const SCALAR_XI_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogenizedMedium {
    /// `c_S·N·h/(iωμ₀)`.
    pub c1: C64,
    /// `c₁·ξ` with `Ξ = ξ·I`.
    pub c2: C64,
    pub xi: C64,
    pub k_squared: f64,
    /// `k²/(1 + c₂)`.
    pub k1_squared: C64,
    pub uniform_coefficient: bool,
    pub scalar_xi: bool,
}

impl HomogenizedMedium {
    /// `k₁²·(1 + c₂) − k²`, zero up to rounding.
    pub fn dispersion_identity_defect(&self) -> f64 {
        (self.k1_squared * (C64::new(1.0, 0.0) + self.c2) - self.k_squared).norm()
    }

    /// Effective wavenumber with `Im k₁ ≥ 0`.
    pub fn k1(&self) -> C64 {
        let r = self.k1_squared.sqrt();
        if r.im < 0.0 {
            -r
        } else {
            r
        }
    }
}

pub fn refraction_shift(sm: &ShapeMatrices, med: &Medium, density: f64, h: C64) -> Result<HomogenizedMedium> {
    med.validate()?;
    validate_h(h)?;
    if !(density.is_finite() && density >= 0.0) {
        return Err(ScatterError::Validation(format!("density must be non-negative, got {density}")));
    }
    let xi = sm.scalar_xi(SCALAR_XI_TOL).ok_or_else(|| {
        ScatterError::NotApplicable(format!(
            "Ξ is not a multiple of the identity (off-diagonal norm {:.3e}); the scalar refraction shift needs isotropic particles",
            sm.xi.off_diagonal_norm()
        ))
    })?;
    let c1 = C64::new(sm.c_s * density, 0.0) * h / med.i_omega_mu();
    let c2 = c1 * xi;
    let k_squared = med.k().powi(2);
    let k1_squared = C64::new(k_squared, 0.0) / (C64::new(1.0, 0.0) + c2);
    Ok(HomogenizedMedium { c1, c2, xi, k_squared, k1_squared, uniform_coefficient: true, scalar_xi: true })
}

/// Refraction shift for a grid whose `N·h` must be uniform.
pub fn refraction_shift_for_grid(sm: &ShapeMatrices, med: &Medium, grid: &CubeGrid) -> Result<HomogenizedMedium> {
    let first = grid.cells.first().ok_or_else(|| ScatterError::Validation("empty grid".into()))?;
    if grid.uniform_coefficient(1e-12).is_none() {
        return Err(ScatterError::NotApplicable("N·h varies over the grid".into()));
    }
    refraction_shift(sm, med, first.density, first.h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionReport {
    pub interior_points: usize,
    pub spacing: f64,
    /// `‖(1 + c₂)·∇×∇×E − k²E‖ / ‖k²E‖` with all curls by finite differences.
    pub homogenized_residual: f64,
    /// `‖∇×∇×E − k²E + c₂·∇×A‖ / ‖k²E‖`, using the solved `A`.
    pub residual: f64,
    /// `‖∇×E − A‖ / ‖A‖`.
    pub curl_mismatch: f64,
    /// `‖∇×E − (1 − (2/3)c₂)·A‖ / ‖A‖`.
    pub local_field_mismatch: f64,
}

/// Central-difference curl of lattice values at `idx`.
fn lattice_curl(grid: &CubeGrid, values: &[CVec3], idx: [usize; 3]) -> CVec3 {
    let h2 = 2.0 * grid.side;
    let mut jac = [[C64::new(0.0, 0.0); 3]; 3];
    for j in 0..3 {
        let mut p = idx;
        let mut m = idx;
        p[j] += 1;
        m[j] -= 1;
        let (fp, fm) = (values[grid.cell_at(p).unwrap()], values[grid.cell_at(m).unwrap()]);
        for i in 0..3 {
            jac[i][j] = (fp[i] - fm[i]) / h2;
        }
    }
    CVec3([jac[2][1] - jac[1][2], jac[0][2] - jac[2][0], jac[1][0] - jac[0][1]])
}

/// Finite-difference residuals of the grid solution at cells at least two
/// cubes away from the boundary.
pub fn dispersion_check(hom: &HomogenizedMedium, grid: &CubeGrid, sol: &IeSolution) -> Result<DispersionReport> {
    if !grid.is_full_box() || grid.dims.iter().any(|&n| n < 5) {
        return Err(ScatterError::NotApplicable(
            "dispersion check needs a single-box grid with at least 5 cubes per axis".into(),
        ));
    }
    let zero = CVec3::ZERO;
    let n = grid.dims;
    let inner = |idx: [usize; 3], margin: usize| (0..3).all(|i| idx[i] >= margin && idx[i] + margin < n[i]);
    let curl_e: Vec<CVec3> = grid
        .cells
        .iter()
        .map(|c| if inner(c.index, 1) { lattice_curl(grid, &sol.e, c.index) } else { zero })
        .collect();
    let k2 = hom.k_squared;
    let one = C64::new(1.0, 0.0);
    let local = one - hom.c2 * (2.0 / 3.0);
    let (mut hom_num, mut res_num, mut den) = (0.0, 0.0, 0.0);
    let (mut mis, mut loc, mut aden) = (0.0, 0.0, 0.0);
    let mut count = 0;
    for (q, c) in grid.cells.iter().enumerate() {
        if !inner(c.index, 2) {
            continue;
        }
        count += 1;
        let cc = lattice_curl(grid, &curl_e, c.index);
        let ca = lattice_curl(grid, &sol.curl, c.index);
        let e = sol.e[q];
        hom_num += (cc * (one + hom.c2) - e * k2).norm_sqr();
        res_num += (cc - e * k2 + ca * hom.c2).norm_sqr();
        den += (e * k2).norm_sqr();
        let a = sol.curl[q];
        mis += (curl_e[q] - a).norm_sqr();
        loc += (curl_e[q] - a * local).norm_sqr();
        aden += a.norm_sqr();
    }
    let ratio = |num: f64, d: f64| if d == 0.0 { num.sqrt() } else { (num / d).sqrt() };
    Ok(DispersionReport {
        interior_points: count,
        spacing: grid.side,
        homogenized_residual: ratio(hom_num, den),
        residual: ratio(res_num, den),
        curl_mismatch: ratio(mis, aden),
        local_field_mismatch: ratio(loc, aden),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{compute_shape_matrices, ParticleShape};
    use std::f64::consts::PI;

    fn sphere() -> ShapeMatrices {
        compute_shape_matrices(&ParticleShape::sphere(1.0), 32, 6).unwrap()
    }

    #[test]
    fn zero_impedance_leaves_wavenumber() {
        let med = Medium::normalized(3.0).unwrap();
        let hm = refraction_shift(&sphere(), &med, 2.0, C64::new(0.0, 0.0)).unwrap();
        assert_eq!(hm.k1_squared, C64::new(9.0, 0.0));
    }

    #[test]
    fn sphere_shift_uses_isotropic_xi() {
        let sm = sphere();
        let med = Medium::new(2.0, 0.5, 3.0).unwrap();
        let (n, h) = (1.5, C64::new(0.4, 0.2));
        let hm = refraction_shift(&sm, &med, n, h).unwrap();
        let xi = sm.scalar_xi(1e-8).unwrap();
        let c2 = C64::new(4.0 * PI * n, 0.0) * h * xi / (C64::new(0.0, 1.0) * med.omega * med.mu0);
        assert!((hm.c2 - c2).norm() < 1e-12 * c2.norm());
        assert!(hm.dispersion_identity_defect() < 1e-12 * hm.k_squared);
    }

    #[test]
    fn real_positive_impedance_is_absorptive() {
        let med = Medium::normalized(2.0).unwrap();
        let hm = refraction_shift(&sphere(), &med, 1.0, C64::new(0.7, 0.0)).unwrap();
        assert!(hm.k1_squared.im > 0.0);
        assert!(hm.k1().im > 0.0);
    }

    #[test]
    fn anisotropic_xi_is_not_applicable() {
        let sm = compute_shape_matrices(&ParticleShape::ellipsoid([0.5, 0.5, 1.0]), 32, 6).unwrap();
        let med = Medium::normalized(1.0).unwrap();
        assert!(matches!(refraction_shift(&sm, &med, 1.0, C64::new(1.0, 0.0)), Err(ScatterError::NotApplicable(_))));
    }

    #[test]
    fn rejects_negative_real_impedance() {
        let med = Medium::normalized(1.0).unwrap();
        assert!(refraction_shift(&sphere(), &med, 1.0, C64::new(-0.1, 0.0)).is_err());
    }
}
