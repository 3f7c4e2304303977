//! Free-space Helmholtz Green function `g(x,y) = e^{ik|x−y|} / (4π|x−y|)` and
//! its derivatives with respect to `x`.

use std::f64::consts::PI;

use crate::error::{Result, ScatterError};
use crate::linalg::{CMat3, CVec3, Vec3, C64};

/// Radial profile of `g` at distance `r`: value, first and second derivative.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Radial {
    pub g: C64,
    pub dg: C64,
    pub d2g: C64,
}

#[inline]
pub(crate) fn radial(r: f64, k: f64) -> Radial {
    let (s, c) = (k * r).sin_cos();
    let g = C64::new(c, s) / (4.0 * PI * r);
    let ikr = C64::new(-1.0 / r, k); // ik − 1/r
    let dg = g * ikr;
    let d2g = g * (ikr * ikr + 1.0 / (r * r));
    Radial { g, dg, d2g }
}

fn separation(x: &Vec3, y: &Vec3) -> Result<(Vec3, f64)> {
    let d = *x - *y;
    let r = d.norm();
    if r == 0.0 || !r.is_finite() {
        return Err(ScatterError::Domain(format!(
            "Green function evaluated at coincident points {:?}",
            x.0
        )));
    }
    Ok((d, r))
}

pub fn green(x: &Vec3, y: &Vec3, k: f64) -> Result<C64> {
    let (_, r) = separation(x, y)?;
    Ok(radial(r, k).g)
}

/// ∇ₓ g(x,y) = g·(ik − 1/r)·(x−y)/r.
pub fn grad_green(x: &Vec3, y: &Vec3, k: f64) -> Result<CVec3> {
    let (d, r) = separation(x, y)?;
    let rad = radial(r, k);
    let f = rad.dg / r;
    Ok(CVec3(d.0.map(|c| f * c)))
}

/// Matrix of second derivatives ∂²g/∂xᵢ∂xⱼ.
pub fn hess_green(x: &Vec3, y: &Vec3, k: f64) -> Result<CMat3> {
    let (d, r) = separation(x, y)?;
    let rad = radial(r, k);
    Ok(hessian_from(&d, r, &rad))
}

fn hessian_from(d: &Vec3, r: f64, rad: &Radial) -> CMat3 {
    let u = *d * (1.0 / r);
    let tang = rad.dg / r;
    let rr = rad.d2g - tang;
    let mut h = CMat3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            h.0[i][j] = rr * (u.0[i] * u.0[j]);
        }
        h.0[i][i] += tang;
    }
    h
}

/// Matrix `K(x,y)` with `K·v = ∇ₓ × (∇ₓ g(x,y) × v)` for constant `v`.
///
/// Away from the source `∇²g = −k²g`, so `K = k²·g·I + ∇∇g`.
pub fn interaction_kernel(x: &Vec3, y: &Vec3, k: f64) -> Result<CMat3> {
    let (d, r) = separation(x, y)?;
    let rad = radial(r, k);
    let mut m = hessian_from(&d, r, &rad);
    let kg = rad.g * (k * k);
    for i in 0..3 {
        m.0[i][i] += kg;
    }
    Ok(m)
}

/// `K(x,y)·w` without forming the matrix. `d = x − y`, `r = |d| > 0`.
///
/// Hot loop of the many-body and grid matvecs.
#[inline]
pub(crate) fn apply_kernel(d: &Vec3, r: f64, k: f64, w: &CVec3) -> CVec3 {
    let rad = radial(r, k);
    let inv_r = 1.0 / r;
    let tang = rad.dg * inv_r;
    let diag = rad.g * (k * k) + tang;
    let radial_coef = (rad.d2g - tang) * (inv_r * inv_r);
    let proj = w.0[0] * d.0[0] + w.0[1] * d.0[1] + w.0[2] * d.0[2];
    let p = radial_coef * proj;
    CVec3([
        diag * w.0[0] + p * d.0[0],
        diag * w.0[1] + p * d.0[1],
        diag * w.0[2] + p * d.0[2],
    ])
}

/// `∇ₓ g(x,y) × w` without forming the gradient. `d = x − y`, `r = |d| > 0`.
#[inline]
pub(crate) fn apply_grad_cross(d: &Vec3, r: f64, k: f64, w: &CVec3) -> CVec3 {
    let rad = radial(r, k);
    let f = rad.dg / r;
    let gx = f * d.0[0];
    let gy = f * d.0[1];
    let gz = f * d.0[2];
    CVec3([
        gy * w.0[2] - gz * w.0[1],
        gz * w.0[0] - gx * w.0[2],
        gx * w.0[1] - gy * w.0[0],
    ])
}

/// Static kernel gradient `∇ₛ g₀(s,t)` with `g₀ = 1/(4π|s−t|)`.
#[inline]
pub(crate) fn grad_static(s: &Vec3, t: &Vec3) -> Vec3 {
    let d = *s - *t;
    let r = d.norm();
    d * (-1.0 / (4.0 * PI * r * r * r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{I, ZERO};

    fn fd_step(r: f64) -> f64 {
        1e-5 * r.max(1.0)
    }

    /// Central-difference gradient of a scalar field.
    fn fd_grad(f: impl Fn(&Vec3) -> C64, x: &Vec3, h: f64) -> CVec3 {
        let mut out = CVec3::ZERO;
        for i in 0..3 {
            let mut xp = *x;
            let mut xm = *x;
            xp[i] += h;
            xm[i] -= h;
            out[i] = (f(&xp) - f(&xm)) / (2.0 * h);
        }
        out
    }

    /// Central-difference curl of a vector field.
    fn fd_curl(f: impl Fn(&Vec3) -> CVec3, x: &Vec3, h: f64) -> CVec3 {
        let mut jac = [[ZERO; 3]; 3]; // jac[i][j] = ∂f_i/∂x_j
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
        CVec3([
            jac[2][1] - jac[1][2],
            jac[0][2] - jac[2][0],
            jac[1][0] - jac[0][1],
        ])
    }

    #[test]
    fn green_static_unit_distance() {
        let g = green(&Vec3::new(1.0, 0.0, 0.0), &Vec3::ZERO, 0.0).unwrap();
        assert!((g.re - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert_eq!(g.im, 0.0);
        assert!((g.re - 0.0795775).abs() < 1e-7);
    }

    #[test]
    fn green_full_period_phase() {
        let g = green(&Vec3::new(0.0, 1.0, 0.0), &Vec3::ZERO, 2.0 * PI).unwrap();
        assert!((g - C64::new(1.0 / (4.0 * PI), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn green_half_unit_distance() {
        // e^{0.5i}/(2π), digits from an independent mpmath evaluation.
        let g = green(&Vec3::new(0.0, 0.0, 0.5), &Vec3::ZERO, 1.0).unwrap();
        let expected = C64::new(0.13967160269610199, 0.07630294431335320);
        assert!((g - expected).norm() < 1e-15, "{g}");
    }

    #[test]
    fn coincident_points_are_rejected() {
        let x = Vec3::new(0.1, 0.2, 0.3);
        assert!(matches!(green(&x, &x, 1.0), Err(ScatterError::Domain(_))));
        assert!(grad_green(&x, &x, 1.0).is_err());
        assert!(hess_green(&x, &x, 1.0).is_err());
        assert!(interaction_kernel(&x, &x, 1.0).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let y = Vec3::new(0.1, -0.2, 0.05);
        let x = y + Vec3::new(0.6, 0.0, 0.8); // r = 1
        let k = 1.0;
        let h = fd_step(1.0);
        let fd = fd_grad(|p| green(p, &y, k).unwrap(), &x, h);
        let an = grad_green(&x, &y, k).unwrap();
        let rel = (an - fd).norm() / an.norm();
        assert!(rel < 1e-6, "{rel}");
    }

    #[test]
    fn gradient_static_limit_and_direction() {
        let y = Vec3::ZERO;
        let x = Vec3::new(0.3, -0.4, 1.2);
        let r = x.norm();
        let an = grad_green(&x, &y, 0.0).unwrap();
        let expected = (x * (-1.0 / (4.0 * PI * r * r * r))).to_complex();
        assert!((an - expected).norm() < 1e-16);

        // Parallel to x − y for nonzero k as well.
        let g = grad_green(&x, &y, 3.0).unwrap();
        let c = crate::linalg::cross_rc(&x, &g);
        assert!(c.norm() < 1e-14 * g.norm() * r);
    }

    #[test]
    fn hessian_matches_finite_differences_of_gradient() {
        let y = Vec3::new(-0.3, 0.2, 0.1);
        let x = y + Vec3::new(0.48, 0.6, 0.64); // r = 1
        let k = 1.0;
        let h = fd_step(1.0);
        let an = hess_green(&x, &y, k).unwrap();
        let mut max_err: f64 = 0.0;
        for j in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let col = (grad_green(&xp, &y, k).unwrap() - grad_green(&xm, &y, k).unwrap()) * (0.5 / h);
            for i in 0..3 {
                max_err = max_err.max((an.0[i][j] - col[i]).norm());
            }
        }
        assert!(max_err / an.norm() < 1e-5, "{}", max_err / an.norm());
    }

    #[test]
    fn hessian_trace_and_symmetry() {
        let y = Vec3::new(0.0, 0.0, 0.0);
        for (x, k) in [
            (Vec3::new(0.3, 0.1, -0.7), 1.0),
            (Vec3::new(2.0, -1.0, 0.5), 4.5),
            (Vec3::new(0.01, 0.02, 0.0), 0.3),
        ] {
            let h = hess_green(&x, &y, k).unwrap();
            let g = green(&x, &y, k).unwrap();
            let rel = (h.trace() + g * (k * k)).norm() / (g * (k * k)).norm();
            assert!(rel < 1e-10, "{rel}");
            assert!((h - h.transpose()).max_abs() == 0.0);
        }
    }

    #[test]
    fn kernel_is_curl_of_grad_cross() {
        let y = Vec3::new(0.2, 0.1, -0.1);
        let x = y + Vec3::new(0.0, 0.6, -0.8);
        let k = 1.0;
        let v = CVec3::new(C64::new(0.3, -1.0), C64::new(1.1, 0.2), C64::new(-0.5, 0.7));
        let kv = interaction_kernel(&x, &y, k).unwrap() * v;
        let fd = fd_curl(|p| grad_green(p, &y, k).unwrap().cross(&v), &x, fd_step(1.0));
        assert!((kv - fd).norm() / kv.norm() < 1e-5);
    }

    #[test]
    fn kernel_static_parallel_vector() {
        let y = Vec3::ZERO;
        let x = Vec3::new(0.2, 0.4, -0.4);
        let v = x.to_complex() * C64::new(0.5, 1.5);
        let kv = interaction_kernel(&x, &y, 0.0).unwrap() * v;
        let hv = hess_green(&x, &y, 0.0).unwrap() * v;
        assert!((kv - hv).norm() < 1e-15 * hv.norm());
    }

    #[test]
    fn fast_paths_agree_with_matrices() {
        let y = Vec3::new(0.5, -0.25, 1.0);
        let x = Vec3::new(-0.3, 0.7, 0.2);
        let k = 2.3;
        let w = CVec3::new(C64::new(0.3, -1.0), C64::new(1.1, 0.2), C64::new(-0.5, 0.7));
        let d = x - y;
        let r = d.norm();
        let a = apply_kernel(&d, r, k, &w);
        let b = interaction_kernel(&x, &y, k).unwrap() * w;
        assert!((a - b).norm() < 1e-14 * b.norm());
        let a = apply_grad_cross(&d, r, k, &w);
        let b = grad_green(&x, &y, k).unwrap().cross(&w);
        assert!((a - b).norm() < 1e-14 * b.norm());
    }

    #[test]
    fn radiation_condition_residual_decreases() {
        let k = 1.3;
        let dir = Vec3::new(1.0, 2.0, -2.0).normalized();
        let mut last = f64::INFINITY;
        for scale in [1e2, 1e3, 1e4] {
            let r = scale / k;
            let x = dir * r;
            let g = green(&x, &Vec3::ZERO, k).unwrap();
            let dgdr = grad_green(&x, &Vec3::ZERO, k).unwrap().dot_real(&dir);
            let res = (r * (dgdr - I * k * g)).norm();
            assert!(res < last);
            last = res;
        }
    }
}
