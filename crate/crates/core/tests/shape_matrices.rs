use impscat_core::geometry::{
    build_quadrature, compute_b, compute_shape_matrices, ParticleShape, Rotation, TriMesh,
};
use impscat_core::{CMat3, Vec3};
use nalgebra::{Matrix3, SymmetricEigen};
use proptest::prelude::*;

fn rotation(axis: Vec3, angle: f64) -> Rotation {
    let u = axis.normalized();
    let (s, c) = angle.sin_cos();
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let delta = if i == j { 1.0 } else { 0.0 };
            r[i][j] = c * delta + (1.0 - c) * u[i] * u[j];
        }
    }
    r[0][1] -= s * u[2];
    r[0][2] += s * u[1];
    r[1][0] += s * u[2];
    r[1][2] -= s * u[0];
    r[2][0] -= s * u[1];
    r[2][1] += s * u[0];
    r
}

fn conjugate(r: &Rotation, m: &CMat3) -> CMat3 {
    let rc = CMat3::from_real(*r);
    rc * *m * rc.transpose()
}

#[test]
fn prolate_ellipsoid_b_is_axisymmetric() {
    let q = build_quadrature(&ParticleShape::ellipsoid([0.5, 0.5, 1.0]), 64).unwrap();
    let b = compute_b(&q);
    assert!(b.off_diagonal_norm() < 1e-12);
    assert!((b[(0, 0)] - b[(1, 1)]).norm() < 1e-12);
    assert!(b[(2, 2)].re < 1.0 / 3.0);
    assert!((b.trace().re - 1.0).abs() < 1e-10);
}

#[test]
fn b_refinement_converges_monotonically() {
    for shape in [ParticleShape::sphere(1.0), ParticleShape::ellipsoid([0.3, 0.6, 1.0])] {
        let levels: Vec<CMat3> = [4, 8, 16, 32]
            .iter()
            .map(|&n| compute_b(&build_quadrature(&shape, n).unwrap()))
            .collect();
        let diffs: Vec<f64> = levels.windows(2).map(|w| (w[1] - w[0]).max_abs()).collect();
        assert!(diffs.windows(2).all(|d| d[1] < d[0] || d[1] < 1e-14), "{diffs:?}");
    }
}

#[test]
fn matrices_are_scale_invariant() {
    let reference = compute_shape_matrices(&ParticleShape::sphere(1.0), 64, 6).unwrap();
    for r in [0.01, 0.1] {
        let sm = compute_shape_matrices(&ParticleShape::sphere(r), 64, 6).unwrap();
        assert!((sm.b - reference.b).max_abs() < 1e-12);
        assert!((sm.beta - reference.beta).max_abs() < 1e-10);
        assert!((sm.c_s - reference.c_s).abs() < 1e-10);
    }
    let mesh = ParticleShape::TriMesh(TriMesh::icosphere(1.0, 1));
    let a = compute_shape_matrices(&mesh, 7, 6).unwrap();
    let b = compute_shape_matrices(&mesh.scaled(0.01), 7, 6).unwrap();
    assert!((a.beta - b.beta).max_abs() < 1e-10);
}

#[test]
fn b_is_positive_semidefinite_with_unit_trace() {
    for shape in [
        ParticleShape::ellipsoid([0.2, 0.5, 1.0]),
        ParticleShape::TriMesh(TriMesh::cube(2.0)),
        ParticleShape::TriMesh(TriMesh::icosphere(1.0, 2)),
    ] {
        let b = compute_b(&build_quadrature(&shape, 32).unwrap());
        let m = Matrix3::from_fn(|i, j| b[(i, j)].re);
        assert!((m - m.transpose()).abs().max() < 1e-14);
        let eig = SymmetricEigen::new(m).eigenvalues;
        assert!(eig.iter().all(|&e| (-1e-12..=1.0 + 1e-12).contains(&e)), "{eig:?}");
        assert!((b.trace().re - 1.0).abs() < 1e-10);
    }
}

#[test]
fn alpha_inverts_one_plus_beta() {
    for shape in [ParticleShape::ellipsoid([0.4, 0.7, 1.0]), ParticleShape::TriMesh(TriMesh::cube(1.0))] {
        let order = if matches!(shape, ParticleShape::TriMesh(_)) { 7 } else { 48 };
        let sm = compute_shape_matrices(&shape, order, 6).unwrap();
        let id = CMat3::identity();
        assert!(((id + sm.alpha) * (id + sm.beta) - id).max_abs() < 1e-10);
        assert!((sm.xi - (id + sm.alpha) * sm.tau).max_abs() < 1e-14);
        assert!((sm.tau - (id - sm.b)).max_abs() < 1e-15);
        assert!((sm.c_s - sm.surface_area / sm.size.powi(2)).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn rotation_equivariance(ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in 0.1f64..1.0, angle in 0.0f64..6.28) {
        let r = rotation(Vec3::new(ax, ay, az), angle);
        let base = ParticleShape::ellipsoid([0.35, 0.6, 1.0]);
        let sm = compute_shape_matrices(&base, 48, 6).unwrap();
        let rot = compute_shape_matrices(&base.rotated(&r).unwrap(), 48, 6).unwrap();
        prop_assert!((rot.b - conjugate(&r, &sm.b)).max_abs() < 1e-8);
        prop_assert!((rot.beta - conjugate(&r, &sm.beta)).max_abs() < 1e-8);
    }
}
