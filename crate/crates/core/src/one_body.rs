//! Closed-form scattering by one small impedance particle.
//!
//! The particle is reduced to a single pseudovector
//! `Q = −(ζ|S|/(iωμ₀))·Ξ·∇×E₀(O)` with `ζ = h/a^κ`, and the scattered field
//! is `∇ₓg(x,O) × Q` for `|x − O| ≫ a`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScatterError};
use crate::fields::{IncidentField, Medium};
use crate::geometry::ShapeMatrices;
use crate::green::{grad_green, interaction_kernel};
use crate::linalg::{cross_rc, CVec3, Vec3, C64};

/// Minimum `kr` accepted by [`OneBodySolution::far_field`].
pub const FAR_FIELD_MIN_KR: f64 = 10.0;

/// Boundary impedance `ζ = h/a^κ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Impedance {
    pub h: C64,
    pub kappa: f64,
}

impl Impedance {
    pub fn new(h: C64, kappa: f64) -> Result<Self> {
        let imp = Impedance { h, kappa };
        imp.validate()?;
        Ok(imp)
    }

    pub fn validate(&self) -> Result<()> {
        validate_h(self.h)?;
        if !(0.0..1.0).contains(&self.kappa) {
            return Err(ScatterError::Validation(format!("kappa must lie in [0, 1), got {}", self.kappa)));
        }
        Ok(())
    }

    pub fn zeta(&self, a: f64) -> C64 {
        self.h / a.powf(self.kappa)
    }
}

pub(crate) fn validate_h(h: C64) -> Result<()> {
    if !(h.re.is_finite() && h.im.is_finite()) {
        return Err(ScatterError::Validation(format!("impedance h must be finite, got {h}")));
    }
    if h.re < 0.0 {
        return Err(ScatterError::Validation(format!("impedance needs Re h >= 0, got {h}")));
    }
    Ok(())
}

/// Distances (in units of `a`) below which field evaluation is refused or
/// logged as inaccurate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub reject_below: f64,
    pub warn_below: f64,
}

impl Default for Exclusion {
    fn default() -> Self {
        Exclusion { reject_below: 3.0, warn_below: 10.0 }
    }
}

impl Exclusion {
    pub(crate) fn check(&self, x: &Vec3, center: &Vec3, a: f64) -> Result<()> {
        let r = (*x - *center).norm();
        if r < self.reject_below * a {
            return Err(ScatterError::Domain(format!(
                "evaluation point {:?} is {:.3}a from a particle, inside the {}a exclusion radius",
                x.0,
                r / a,
                self.reject_below
            )));
        }
        if r < self.warn_below * a {
            log::warn!("evaluation point {:?} is only {:.2}a from a particle; asymptotics are inaccurate", x.0, r / a);
        }
        Ok(())
    }
}

/// `Q = −(ζ·c_S·a²/(iωμ₀))·Ξ·curl_e0`.
pub fn compute_q(sm: &ShapeMatrices, imp: &Impedance, med: &Medium, curl_e0: &CVec3, a: f64) -> Result<CVec3> {
    if !(a.is_finite() && a > 0.0) {
        return Err(ScatterError::Validation(format!("particle size must be positive, got {a}")));
    }
    let area = sm.c_s * a * a;
    let coef = -imp.zeta(a) * area / med.i_omega_mu();
    Ok(sm.xi.mul_vec(curl_e0) * coef)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OneBodySolution {
    pub q: CVec3,
    pub center: Vec3,
    pub size: f64,
    /// `∇×E₀` at the center.
    pub curl_e0: CVec3,
    pub medium: Medium,
    pub shape_matrices: ShapeMatrices,
    pub impedance: Impedance,
    pub exclusion: Exclusion,
}

impl OneBodySolution {
    /// Solves for a particle of size `a` centered at `center`.
    pub fn solve(
        sm: &ShapeMatrices,
        imp: &Impedance,
        med: &Medium,
        incident: &dyn IncidentField,
        center: Vec3,
        a: f64,
    ) -> Result<Self> {
        imp.validate()?;
        med.validate()?;
        let curl_e0 = incident.curl_e(med, &center);
        let q = compute_q(sm, imp, med, &curl_e0, a)?;
        Ok(OneBodySolution {
            q,
            center,
            size: a,
            curl_e0,
            medium: *med,
            shape_matrices: *sm,
            impedance: *imp,
            exclusion: Exclusion::default(),
        })
    }

    pub fn with_exclusion(mut self, exclusion: Exclusion) -> Self {
        self.exclusion = exclusion;
        self
    }

    /// Scattered part `∇ₓg(x,O) × Q`.
    pub fn scattered_field(&self, x: &Vec3) -> Result<CVec3> {
        self.exclusion.check(x, &self.center, self.size)?;
        Ok(grad_green(x, &self.center, self.medium.k())?.cross(&self.q))
    }

    pub fn total_field(&self, incident: &dyn IncidentField, x: &Vec3) -> Result<CVec3> {
        Ok(incident.e(&self.medium, x) + self.scattered_field(x)?)
    }

    /// Leading far-zone term at `O + r·x0`:
    /// `−ζ|S|·sqrt(ε₀/μ₀)·e^{ikr}/(4πr)·x0 × Ξ∇×E₀(O)`.
    pub fn far_field(&self, direction: &Vec3, r: f64) -> Result<CVec3> {
        let k = self.medium.k();
        if !(k * r >= FAR_FIELD_MIN_KR) {
            return Err(ScatterError::Domain(format!(
                "far-field formula needs kr >= {FAR_FIELD_MIN_KR}, got {:.3}",
                k * r
            )));
        }
        let n = direction.norm();
        if !((n - 1.0).abs() <= 1e-12) {
            return Err(ScatterError::Validation(format!("observation direction must be a unit vector, |x0| = {n}")));
        }
        let a = self.size;
        let area = self.shape_matrices.c_s * a * a;
        let (s, c) = (k * r).sin_cos();
        let spherical = C64::new(c, s) / (4.0 * PI * r);
        let coef = -self.impedance.zeta(a) * area * self.medium.admittance() * spherical;
        let polar = self.shape_matrices.xi.mul_vec(&self.curl_e0);
        Ok(cross_rc(direction, &polar) * coef)
    }

    /// `H = ∇×E/(iωμ₀)` of the total field, with the curl of the scattered
    /// part taken analytically: `∇×(∇g × Q) = K(x,O)·Q`.
    pub fn magnetic_field(&self, incident: &dyn IncidentField, x: &Vec3) -> Result<CVec3> {
        self.exclusion.check(x, &self.center, self.size)?;
        let curl = incident.curl_e(&self.medium, x) + interaction_kernel(x, &self.center, self.medium.k())?.mul_vec(&self.q);
        Ok(curl * (C64::new(1.0, 0.0) / self.medium.i_omega_mu()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{fd_curl, PlaneWave};
    use crate::geometry::{compute_shape_matrices, ParticleShape};
    use crate::linalg::I;

    fn setup(kappa: f64) -> (ShapeMatrices, Impedance, Medium, PlaneWave) {
        let sm = compute_shape_matrices(&ParticleShape::sphere(1.0), 32, 6).unwrap();
        let imp = Impedance::new(C64::new(2.0, -1.0), kappa).unwrap();
        let med = Medium::new(1.5, 0.8, 2.0).unwrap();
        let amp = CVec3::new(C64::new(1.0, 0.2), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        let pw = PlaneWave::new(amp, Vec3::new(0.0, 0.0, 1.0)).unwrap();
        (sm, imp, med, pw)
    }

    #[test]
    fn impedance_validation() {
        assert!(Impedance::new(C64::new(-0.1, 0.0), 0.5).is_err());
        assert!(Impedance::new(C64::new(0.0, -3.0), 0.0).is_ok());
        assert!(Impedance::new(C64::new(1.0, 0.0), 1.0).is_err());
        assert!(Impedance::new(C64::new(1.0, 0.0), -0.1).is_err());
        let imp = Impedance::new(C64::new(2.0, 0.0), 0.5).unwrap();
        assert!((imp.zeta(0.04) - C64::new(10.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn sphere_q_matches_scalar_form() {
        let (sm, imp, med, pw) = setup(0.3);
        let a = 1e-3;
        let curl = pw.curl_e(&med, &Vec3::ZERO);
        let q = compute_q(&sm, &imp, &med, &curl, a).unwrap();
        let xi = sm.scalar_xi(1e-8).unwrap();
        let want = curl * (-imp.zeta(a) * 4.0 * PI * a * a / (I * med.omega * med.mu0) * xi);
        assert!((q - want).norm() <= 1e-12 * want.norm());
    }

    #[test]
    fn q_vanishes_without_curl_or_impedance() {
        let (sm, imp, med, _) = setup(0.0);
        assert_eq!(compute_q(&sm, &imp, &med, &CVec3::ZERO, 0.01).unwrap(), CVec3::ZERO);
        let zero = Impedance::new(C64::new(0.0, 0.0), 0.0).unwrap();
        let curl = CVec3::from_real(1.0, 2.0, 3.0);
        assert_eq!(compute_q(&sm, &zero, &med, &curl, 0.01).unwrap().norm(), 0.0);
    }

    #[test]
    fn exclusion_radius_is_enforced() {
        let (sm, imp, med, pw) = setup(0.0);
        let sol = OneBodySolution::solve(&sm, &imp, &med, &pw, Vec3::ZERO, 0.1).unwrap();
        assert!(matches!(sol.scattered_field(&Vec3::new(0.29, 0.0, 0.0)), Err(ScatterError::Domain(_))));
        assert!(sol.scattered_field(&Vec3::new(0.31, 0.0, 0.0)).is_ok());
        assert!(sol.magnetic_field(&pw, &Vec3::new(0.0, 0.1, 0.0)).is_err());
    }

    #[test]
    fn field_decays_as_inverse_distance() {
        let (sm, imp, med, pw) = setup(0.5);
        let sol = OneBodySolution::solve(&sm, &imp, &med, &pw, Vec3::ZERO, 1e-3).unwrap();
        let k = med.k();
        let dir = Vec3::new(0.6, 0.0, 0.8);
        let vals: Vec<f64> = [10.0, 20.0, 40.0]
            .iter()
            .map(|kr| {
                let r = kr / k;
                r * sol.scattered_field(&(dir * r)).unwrap().norm()
            })
            .collect();
        for v in &vals[1..] {
            assert!((v - vals[0]).abs() / vals[0] < 0.01);
        }
    }

    #[test]
    fn far_field_is_transverse_and_matches_near_field() {
        let (sm, imp, med, pw) = setup(0.2);
        let center = Vec3::new(0.1, -0.2, 0.05);
        let sol = OneBodySolution::solve(&sm, &imp, &med, &pw, center, 1e-3).unwrap();
        let r = 100.0 / med.k();
        for dir in crate::geometry::sample_directions(25) {
            let far = sol.far_field(&dir, r).unwrap();
            assert!(far.dot_real(&dir).norm() <= 1e-12 * far.norm());
            let near = sol.scattered_field(&(center + dir * r)).unwrap();
            assert!((near - far).norm() <= 2e-2 * near.norm());
        }
        assert!(sol.far_field(&Vec3::new(1.0, 0.0, 0.0), 1.0 / med.k()).is_err());
    }

    #[test]
    fn far_field_vanishes_along_polarization() {
        let (sm, imp, med, pw) = setup(0.0);
        let sol = OneBodySolution::solve(&sm, &imp, &med, &pw, Vec3::ZERO, 1e-3).unwrap();
        let p = sm.xi.mul_vec(&sol.curl_e0);
        // curl of an x-polarized wave along z points along y.
        assert!(p[0].norm() < 1e-15 && p[2].norm() < 1e-15);
        let far = sol.far_field(&Vec3::new(0.0, 1.0, 0.0), 20.0).unwrap();
        assert!(far.norm() < 1e-15 * sol.q.norm());
    }

    #[test]
    fn magnetic_field_of_bare_plane_wave() {
        let (sm, _, med, pw) = setup(0.0);
        let zero = Impedance::new(C64::new(0.0, 0.0), 0.0).unwrap();
        let sol = OneBodySolution::solve(&sm, &zero, &med, &pw, Vec3::ZERO, 0.01).unwrap();
        let x = Vec3::new(0.3, 0.4, -1.0);
        let h = sol.magnetic_field(&pw, &x).unwrap();
        let want = cross_rc(&pw.direction, &pw.amplitude) * (med.k() / (med.omega * med.mu0) * pw.e(&med, &x)[0] / pw.amplitude[0]);
        assert!((h - want).norm() < 1e-13 * want.norm());
    }

    #[test]
    fn magnetic_field_matches_finite_difference_curl() {
        let (sm, imp, med, pw) = setup(0.5);
        let sol = OneBodySolution::solve(&sm, &imp, &med, &pw, Vec3::ZERO, 0.02).unwrap();
        let x = Vec3::new(0.5, -0.3, 0.4);
        let h = sol.magnetic_field(&pw, &x).unwrap();
        let fd = fd_curl(|p| sol.total_field(&pw, p).unwrap(), &x, 1e-5) * (C64::new(1.0, 0.0) / med.i_omega_mu());
        assert!((h - fd).norm() <= 1e-5 * h.norm());
        // Scattered part alone, which is much smaller than the incident field.
        let hs = interaction_kernel(&x, &Vec3::ZERO, med.k()).unwrap().mul_vec(&sol.q);
        let fds = fd_curl(|p| sol.scattered_field(p).unwrap(), &x, 1e-5);
        assert!((hs - fds).norm() <= 1e-5 * hs.norm());
    }

    #[test]
    fn far_zone_impedance_relation() {
        let (sm, imp, med, pw) = setup(0.0);
        let sol = OneBodySolution::solve(&sm, &imp, &med, &pw, Vec3::ZERO, 1e-3).unwrap();
        let k = med.k();
        let dir = Vec3::new(1.0, 2.0, 2.0).normalized();
        let mut prev = f64::INFINITY;
        for kr in [50.0, 200.0, 800.0] {
            let x = dir * (kr / k);
            let e = sol.scattered_field(&x).unwrap();
            let hs = interaction_kernel(&x, &Vec3::ZERO, k).unwrap().mul_vec(&sol.q) * (C64::new(1.0, 0.0) / med.i_omega_mu());
            let lhs = cross_rc(&dir, &e);
            let rhs = hs * (med.mu0 / med.epsilon0).sqrt();
            let rel = (lhs - rhs).norm() / rhs.norm();
            assert!(rel < 3.0 / kr, "kr={kr}: {rel}");
            assert!(rel < prev);
            prev = rel;
        }
    }

    #[test]
    fn scattered_field_solves_vector_helmholtz() {
        let (sm, imp, med, pw) = setup(0.3);
        let sol = OneBodySolution::solve(&sm, &imp, &med, &pw, Vec3::ZERO, 0.01).unwrap();
        let k = med.k();
        for x in [Vec3::new(0.4, 0.1, -0.3), Vec3::new(-1.0, 2.0, 0.5), Vec3::new(0.05, 0.2, 0.1)] {
            let curl = |p: &Vec3| interaction_kernel(p, &Vec3::ZERO, k).unwrap().mul_vec(&sol.q);
            let h = 1e-5 * x.norm().max(1.0);
            let curlcurl = fd_curl(curl, &x, h);
            let e = sol.scattered_field(&x).unwrap();
            let resid = curlcurl - e * (k * k);
            assert!(resid.norm() <= 1e-4 * (k * k) * e.norm(), "{}", resid.norm() / (k * k * e.norm()));
        }
    }

    #[test]
    fn scattered_field_is_linear_in_amplitude() {
        let (sm, imp, med, pw) = setup(0.3);
        let double = pw.with_amplitude(pw.amplitude * 2.0);
        let x = Vec3::new(1.0, 1.0, 1.0);
        let s1 = OneBodySolution::solve(&sm, &imp, &med, &pw, Vec3::ZERO, 0.01).unwrap();
        let s2 = OneBodySolution::solve(&sm, &imp, &med, &double, Vec3::ZERO, 0.01).unwrap();
        assert_eq!(s1.scattered_field(&x).unwrap() * 2.0, s2.scattered_field(&x).unwrap());
    }

    #[test]
    fn q_scales_as_a_to_two_minus_kappa() {
        for kappa in [0.0, 0.5, 0.9] {
            let (sm, imp, med, pw) = setup(kappa);
            let lam = med.wavelength();
            let pts: Vec<(f64, f64)> = [1e-4, 1e-3, 1e-2]
                .iter()
                .map(|f| {
                    let a = f * lam;
                    let s = OneBodySolution::solve(&sm, &imp, &med, &pw, Vec3::ZERO, a).unwrap();
                    (a.ln(), s.q.norm().ln())
                })
                .collect();
            let slope = (pts[2].1 - pts[0].1) / (pts[2].0 - pts[0].0);
            assert!((slope - (2.0 - kappa)).abs() < 1e-10);
        }
    }
}
