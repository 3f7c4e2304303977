//! Background medium and incident fields.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScatterError};
use crate::linalg::{cross_rc, CVec3, Vec3, C64, I};

/// Homogeneous, lossless background medium (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Medium {
    pub epsilon0: f64,
    pub mu0: f64,
    /// Angular frequency in rad/s.
    pub omega: f64,
}

impl Medium {
    pub fn new(epsilon0: f64, mu0: f64, omega: f64) -> Result<Self> {
        let m = Medium { epsilon0, mu0, omega };
        m.validate()?;
        Ok(m)
    }

    /// Medium with `ε₀ = μ₀ = 1`, so `k = ω`.
    pub fn normalized(k: f64) -> Result<Self> {
        Self::new(1.0, 1.0, k)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("epsilon0", self.epsilon0), ("mu0", self.mu0), ("omega", self.omega)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ScatterError::Validation(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Wavenumber `k = ω·sqrt(ε₀μ₀)`.
    pub fn k(&self) -> f64 {
        self.omega * (self.epsilon0 * self.mu0).sqrt()
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.k()
    }

    /// `iωμ₀`, the factor relating `∇×E` and `H`.
    pub fn i_omega_mu(&self) -> C64 {
        I * (self.omega * self.mu0)
    }

    /// Wave admittance `sqrt(ε₀/μ₀)`.
    pub fn admittance(&self) -> f64 {
        (self.epsilon0 / self.mu0).sqrt()
    }
}

/// A source field satisfying Maxwell's equations in the whole space.
pub trait IncidentField: Sync {
    fn e(&self, med: &Medium, x: &Vec3) -> CVec3;

    /// `∇×E₀`. The default uses central finite differences with step
    /// `1e−5/k`; closed-form fields should override it.
    fn curl_e(&self, med: &Medium, x: &Vec3) -> CVec3 {
        fd_curl(|p| self.e(med, p), x, 1e-5 / med.k())
    }
}

pub(crate) fn fd_curl(f: impl Fn(&Vec3) -> CVec3, x: &Vec3, h: f64) -> CVec3 {
    let mut jac = [[C64::new(0.0, 0.0); 3]; 3];
    for j in 0..3 {
        let mut xp = *x;
        let mut xm = *x;
        xp[j] += h;
        xm[j] -= h;
        let (fp, fm) = (f(&xp), f(&xm));
        for i in 0..3 {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    CVec3([jac[2][1] - jac[1][2], jac[0][2] - jac[2][0], jac[1][0] - jac[0][1]])
}

/// Plane wave `E₀(x) = 𝓔·e^{ik α·x}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneWave {
    pub amplitude: CVec3,
    pub direction: Vec3,
}

impl PlaneWave {
    /// Validates `|α| = 1` and `α·𝓔 = 0` to 1e−12.
    pub fn new(amplitude: CVec3, direction: Vec3) -> Result<Self> {
        let pw = PlaneWave { amplitude, direction };
        pw.validate()?;
        Ok(pw)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.direction.norm();
        if !((n - 1.0).abs() <= 1e-12) {
            return Err(ScatterError::Validation(format!("propagation direction must be a unit vector, |α| = {n}")));
        }
        let t = self.amplitude.dot_real(&self.direction).norm();
        if t > 1e-12 * self.amplitude.norm().max(1.0) {
            return Err(ScatterError::Validation(format!("amplitude is not transverse: |α·𝓔| = {t:e}")));
        }
        if !self.amplitude.is_finite() {
            return Err(ScatterError::Validation("amplitude must be finite".into()));
        }
        Ok(())
    }

    fn phase(&self, k: f64, x: &Vec3) -> C64 {
        let (s, c) = (k * self.direction.dot(x)).sin_cos();
        C64::new(c, s)
    }

    pub fn with_amplitude(&self, amplitude: CVec3) -> Self {
        PlaneWave { amplitude, direction: self.direction }
    }
}

impl IncidentField for PlaneWave {
    fn e(&self, med: &Medium, x: &Vec3) -> CVec3 {
        incident_field(self, med, x)
    }

    fn curl_e(&self, med: &Medium, x: &Vec3) -> CVec3 {
        curl_incident(self, med, x)
    }
}

pub fn incident_field(pw: &PlaneWave, med: &Medium, x: &Vec3) -> CVec3 {
    pw.amplitude * pw.phase(med.k(), x)
}

/// `∇×E₀ = ik·(α × 𝓔)·e^{ik α·x}`.
pub fn curl_incident(pw: &PlaneWave, med: &Medium, x: &Vec3) -> CVec3 {
    let k = med.k();
    cross_rc(&pw.direction, &pw.amplitude) * (I * k * pw.phase(k, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave() -> PlaneWave {
        let dir = Vec3::new(1.0, 1.0, 0.0).normalized();
        let amp = CVec3::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, -0.5));
        PlaneWave::new(amp, dir).unwrap()
    }

    #[test]
    fn wavenumber_from_medium() {
        let m = Medium::new(2.0, 8.0, 3.0).unwrap();
        assert!((m.k() - 12.0).abs() < 1e-14);
        assert!(Medium::new(-1.0, 1.0, 1.0).is_err());
        assert!(Medium::new(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn plane_wave_validation() {
        let amp = CVec3::from_real(1.0, 0.0, 0.0);
        assert!(PlaneWave::new(amp, Vec3::new(1.0, 0.0, 0.0)).is_err());
        assert!(PlaneWave::new(amp, Vec3::new(0.0, 0.0, 2.0)).is_err());
        assert!(PlaneWave::new(amp, Vec3::new(0.0, 0.0, 1.0)).is_ok());
    }

    #[test]
    fn incident_field_basics() {
        let pw = wave();
        let med = Medium::normalized(2.5).unwrap();
        assert_eq!(incident_field(&pw, &med, &Vec3::ZERO), pw.amplitude);
        for x in [Vec3::new(0.3, -2.0, 1.0), Vec3::new(10.0, 4.0, -7.0)] {
            let e = incident_field(&pw, &med, &x);
            assert!((e.norm() - pw.amplitude.norm()).abs() < 1e-14);
            assert!(e.dot_real(&pw.direction).norm() < 1e-14);
        }
    }

    #[test]
    fn curl_matches_finite_differences() {
        let pw = wave();
        let med = Medium::normalized(1.7).unwrap();
        let x = Vec3::new(0.4, -0.3, 0.9);
        let an = curl_incident(&pw, &med, &x);
        let fd = fd_curl(|p| incident_field(&pw, &med, p), &x, 1e-5);
        assert!((an - fd).norm() / an.norm() < 1e-6);
        assert!((an.norm() - med.k() * pw.amplitude.norm()).abs() < 1e-13);
        let zero = pw.with_amplitude(CVec3::ZERO);
        assert_eq!(curl_incident(&zero, &med, &x), CVec3::ZERO);
    }

    struct Generic(PlaneWave);
    impl IncidentField for Generic {
        fn e(&self, med: &Medium, x: &Vec3) -> CVec3 {
            incident_field(&self.0, med, x)
        }
    }

    #[test]
    fn finite_difference_fallback() {
        let pw = wave();
        let med = Medium::normalized(1.0).unwrap();
        let x = Vec3::new(0.2, 0.1, -0.3);
        let fd = Generic(pw).curl_e(&med, &x);
        let an = curl_incident(&pw, &med, &x);
        assert!((fd - an).norm() / an.norm() < 1e-6);
    }
}
