use impscat_core::effective_medium::*;
use impscat_core::geometry::{compute_shape_matrices, ParticleShape, ShapeMatrices};
use impscat_core::many_body::{AxisBox, Domain};
use impscat_core::*;
use proptest::prelude::*;
use std::f64::consts::PI;

fn setup() -> (ShapeMatrices, Medium, PlaneWave, Domain) {
    let sm = compute_shape_matrices(&ParticleShape::sphere(1.0), 32, 6).unwrap();
    let med = Medium::normalized(2.0 * PI).unwrap();
    let pw = PlaneWave::new(CVec3::from_real(0.0, 1.0, 0.0), Vec3::new(1.0, 0.0, 0.0)).unwrap();
    (sm, med, pw, Domain::single(AxisBox::unit_cube()))
}

fn solve(n: usize, h: C64, density: f64) -> (CubeGrid, IeSolution) {
    let (sm, med, pw, dom) = setup();
    let g = CubeGrid::with_resolution(&dom, n, &|_| density, &|_| h).unwrap();
    let opts = GmresOptions { tol: 1e-10, ..Default::default() };
    let s = solve_limit_equation(&g, &med, &pw, &sm, IeMethod::Fft, &opts).unwrap();
    (g, s)
}

#[test]
fn grid_refinement_increments_shrink() {
    let h = C64::new(0.2, 0.0);
    let probes: Vec<Vec3> = (0..27)
        .map(|i| Vec3::new(0.2 + 0.3 * (i % 3) as f64, 0.2 + 0.3 * (i / 3 % 3) as f64, 0.2 + 0.3 * (i / 9) as f64))
        .collect();
    let at = |(g, s): &(CubeGrid, IeSolution)| -> Vec<CVec3> { probes.iter().map(|x| g.interpolate(&s.e, x)).collect() };
    let fields: Vec<Vec<CVec3>> = [6, 12, 24].into_iter().map(|n| at(&solve(n, h, 1.0))).collect();
    let diff = |a: &[CVec3], b: &[CVec3]| a.iter().zip(b).map(|(x, y)| (*x - *y).norm_sqr()).sum::<f64>().sqrt();
    let first = diff(&fields[1], &fields[0]);
    let second = diff(&fields[2], &fields[1]);
    assert!(second / first < 1.0, "{second} / {first}");
}

#[test]
fn dispersion_residual_decreases_under_refinement() {
    let (sm, med, _, _) = setup();
    let h = C64::new(0.2, 0.0);
    let hom = refraction_shift(&sm, &med, 1.0, h).unwrap();
    let mut prev = f64::INFINITY;
    for n in [8, 16, 32] {
        let (g, s) = solve(n, h, 1.0);
        let r = dispersion_check(&hom, &g, &s).unwrap();
        assert!(r.residual < prev, "n = {n}: {} !< {prev}", r.residual);
        prev = r.residual;
    }
}

#[test]
fn lattice_curl_carries_local_field_factor() {
    let (sm, med, _, _) = setup();
    let h = C64::new(0.2, 0.0);
    let hom = refraction_shift(&sm, &med, 1.0, h).unwrap();
    let (g, s) = solve(24, h, 1.0);
    let r = dispersion_check(&hom, &g, &s).unwrap();
    assert!(r.local_field_mismatch < 0.5 * r.curl_mismatch);
    assert!((r.curl_mismatch - 2.0 / 3.0 * hom.c2.norm()).abs() < 0.2 * hom.c2.norm());
}

#[test]
fn incident_wave_residual_is_discretization_error() {
    let (sm, med, _, _) = setup();
    let hom = refraction_shift(&sm, &med, 0.0, C64::new(0.3, 0.0)).unwrap();
    let k = med.k();
    for n in [8, 16] {
        let (g, s) = solve(n, C64::new(0.3, 0.0), 0.0);
        let r = dispersion_check(&hom, &g, &s).unwrap();
        // A centred difference of e^{ikx} over ±ℓ multiplies ik by sin(kℓ)/(kℓ).
        let sinc = (k * g.side).sin() / (k * g.side);
        assert!((r.homogenized_residual - (1.0 - sinc * sinc)).abs() < 1e-10);
        assert!((r.curl_mismatch - (1.0 - sinc)).abs() < 1e-10);
    }
}

#[test]
fn coupling_vanishes_linearly_with_density() {
    let (_, med, pw, _) = setup();
    let h = C64::new(0.4, 0.1);
    let scattered = |n: f64| -> f64 {
        let (g, s) = solve(6, h, n);
        g.cells.iter().zip(&s.e).map(|(c, e)| (*e - pw.e(&med, &c.center)).norm_sqr()).sum::<f64>().sqrt()
    };
    let ratios: Vec<f64> = [1e-2, 1e-3, 1e-4].iter().map(|&n| scattered(n) / n).collect();
    assert!((ratios[1] / ratios[2] - 1.0).abs() < 2e-3);
    assert!((ratios[0] / ratios[2] - 1.0).abs() < 2e-2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn absorption_sign_for_spheres(re in 0.0f64..5.0, im in -5.0f64..5.0, density in 0.1f64..10.0, k in 0.5f64..20.0) {
        let sm = compute_shape_matrices(&ParticleShape::sphere(1.0), 16, 6).unwrap();
        let med = Medium::normalized(k).unwrap();
        let hom = refraction_shift(&sm, &med, density, C64::new(re, im)).unwrap();
        prop_assert!(hom.k1_squared.im >= 0.0);
        if re > 0.0 {
            prop_assert!(hom.k1_squared.im > 0.0);
        }
    }
}
