use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use shrinklab_core::immersion::fixtures::{self, dilate_translate};
use shrinklab_core::immersion::{
    eval_frame, fundamental_data, fundamental::fundamental_data_with, DerivativeMode, ParamPoint,
};
use shrinklab_core::mesh::build_mesh;
use shrinklab_core::Error;

fn p(u: &[f64]) -> ParamPoint {
    ParamPoint::new(0, u)
}

#[test]
fn flat_chart_frame_is_the_standard_basis() {
    let plane = fixtures::plane(4);
    let f = eval_frame(&plane, &p(&[0.0, 0.0])).unwrap();
    let e = |k: usize| DVector::from_fn(4, |i, _| if i == k { 1.0 } else { 0.0 });
    assert!((&f.tangents[0] - e(0)).norm() < 1e-14);
    assert!((&f.tangents[1] - e(1)).norm() < 1e-14);
    assert!((&f.normals[0] - e(2)).norm() < 1e-14);
    assert!((&f.normals[1] - e(3)).norm() < 1e-14);
}

#[test]
fn north_pole_normal_is_radial() {
    let s = fixtures::sphere(2.0, 3);
    let f = eval_frame(&s, &p(&[PI / 2.0, PI / 2.0])).unwrap();
    let radial = &f.x / f.x.norm();
    assert!((f.x[2] - 2.0).abs() < 1e-14);
    assert!((f.normals[0].dot(&radial).abs() - 1.0).abs() < 1e-14);
}

#[test]
fn clifford_position_is_normal() {
    let c = fixtures::clifford();
    let fd = fundamental_data(&c, &p(&[0.0, 0.0])).unwrap();
    assert!(fd.x_tan.norm() < 1e-14);
    assert!((&fd.x_perp - &fd.frame.x).norm() < 1e-14);
    assert!((fd.h.norm_squared() - 1.0).abs() < 1e-12);
    assert!((fd.h.dot(&fd.frame.x) - 2.0).abs() < 1e-12);
}

#[test]
fn shrinking_sphere_fundamental_data() {
    let s = fixtures::sphere(2.0, 3);
    let fd = fundamental_data(&s, &p(&[0.7, 2.1])).unwrap();
    assert!((fd.h.norm_squared() - 1.0).abs() < 1e-12);
    assert!((fd.a_norm_sq - 0.5).abs() < 1e-12);
    assert!((&fd.a_h + DMatrix::identity(2, 2) * 0.5).norm() < 1e-12);
    // H points along x with |H| = n / r.
    assert!((&fd.h - &fd.frame.x * 0.5).norm() < 1e-12);
}

#[test]
fn flat_plane_has_no_curvature() {
    let fd = fundamental_data(&fixtures::plane(3), &p(&[1.3, -0.4])).unwrap();
    assert!(fd.a_norm_sq < 1e-24 && fd.h.norm() < 1e-12 && fd.x_perp.norm() < 1e-14);
}

#[test]
fn shrinker_residuals() {
    assert!(fixtures::sphere(2.0, 3).shrinker_residual().unwrap().sup < 1e-8);
    assert!(fixtures::clifford().shrinker_residual().unwrap().sup < 1e-8);
    // Radius-3 sphere: |H - x/2| = |n/r - r/2| everywhere.
    let r = fixtures::sphere(3.0, 3).shrinker_residual().unwrap();
    let expected = (2.0f64 / 3.0 - 1.5).abs();
    assert!((r.sup - expected).abs() < 1e-10 && (r.mean - expected).abs() < 1e-10);
    assert!(r.sup >= r.mean && r.l2_gaussian >= 0.0);
}

#[test]
fn difference_and_closed_form_data_agree() {
    let cases = [
        fixtures::sphere(2.0, 3),
        fixtures::clifford(),
        fixtures::torus_of_revolution(2.0, 0.8),
        fixtures::ellipsoid(1.0, 1.5, 2.0),
        fixtures::circle(SQRT_2, 2),
    ];
    for imm in &cases {
        for node in imm.quadrature_nodes(5) {
            let a = fundamental_data_with(imm, &node.point, DerivativeMode::Auto).unwrap();
            let b = fundamental_data_with(imm, &node.point, DerivativeMode::FiniteDifference).unwrap();
            assert!((&a.h - &b.h).norm() < 1e-6, "{}", imm.name);
            assert!((a.a_norm_sq - b.a_norm_sq).abs() < 1e-6, "{}", imm.name);
            assert!((&a.proj_tan - &b.proj_tan).norm() < 1e-6, "{}", imm.name);
        }
    }
}

#[test]
fn pointwise_invariants_on_every_fixture() {
    let cases = [
        fixtures::sphere(2.0, 3),
        fixtures::sphere(3.0, 4),
        fixtures::clifford(),
        fixtures::torus_of_revolution(2.0, 0.8),
        fixtures::perturbed_sphere(0.3),
        fixtures::circle(SQRT_2, 3),
    ];
    for imm in &cases {
        for (_, fd) in imm.sample(7, DerivativeMode::Auto).unwrap() {
            let x2 = fd.frame.x.norm_squared();
            assert!((x2 - fd.x_tan.norm_squared() - fd.x_perp.norm_squared()).abs() < 1e-10 * x2.max(1.0));
            for nu in &fd.frame.normals {
                assert!(fd.x_tan.dot(nu).abs() < 1e-10);
            }
            for e in &fd.frame.tangents {
                assert!(fd.x_perp.dot(e).abs() < 1e-10);
            }
            assert!(fd.frame.orthonormality_defect() < 1e-10);
            for comp in fd.a_components() {
                let asym = (&comp - comp.transpose()).norm();
                assert!(asym <= 1e-8 * comp.norm().max(1e-300));
            }
        }
    }
}

#[test]
fn exact_shrinkers_satisfy_four_h_squared_below_x_squared() {
    for imm in [fixtures::sphere(2.0, 3), fixtures::clifford(), fixtures::circle(SQRT_2, 2)] {
        for (_, fd) in imm.sample(9, DerivativeMode::Auto).unwrap() {
            assert!(4.0 * fd.h.norm_squared() <= fd.frame.x.norm_squared() + 1e-10);
        }
    }
}

#[test]
fn periodic_axes_match_at_both_ends() {
    for imm in [fixtures::sphere(2.0, 3), fixtures::clifford(), fixtures::circle(SQRT_2, 2)] {
        let chart = &imm.charts[0];
        for (d, &periodic) in chart.periodic.iter().enumerate() {
            if !periodic {
                continue;
            }
            let mut lo: Vec<f64> = chart.lower.iter().zip(&chart.upper).map(|(a, b)| 0.3 * a + 0.7 * b).collect();
            let mut hi = lo.clone();
            lo[d] = chart.lower[d];
            hi[d] = chart.upper[d];
            let (a, b) = (chart.map.position(&lo), chart.map.position(&hi));
            assert!((a - &b).norm() < 1e-10 * b.norm().max(1.0));
        }
    }
}

#[test]
fn degenerate_and_outside_points_are_errors() {
    let s = fixtures::sphere(2.0, 3);
    assert!(matches!(
        fundamental_data(&s, &p(&[0.0, 1.0])),
        Err(Error::DegenerateImmersion { .. })
    ));
    assert!(matches!(fundamental_data(&s, &p(&[4.0, 1.0])), Err(Error::OutsideChart(_))));
}

#[test]
fn frame_varies_continuously_along_a_path() {
    let imm = fixtures::perturbed_sphere(0.3);
    let mut prev = eval_frame(&imm, &p(&[0.4, 0.1])).unwrap();
    for k in 1..200 {
        let t = 0.4 + 0.005 * k as f64;
        let f = eval_frame(&imm, &p(&[t, 0.1 + 0.004 * k as f64])).unwrap();
        for (a, b) in f.tangents.iter().zip(&prev.tangents).chain(f.normals.iter().zip(&prev.normals)) {
            assert!((a - b).norm() < 0.05);
        }
        prev = f;
    }
}

#[test]
fn mesh_examples() {
    let s = fixtures::sphere(2.0, 3);
    let m = build_mesh(&s, 32).unwrap();
    assert_eq!(m.genus(), 0);
    assert!((m.area() / (16.0 * PI) - 1.0).abs() < 0.01);
    let t = build_mesh(&fixtures::clifford(), 64).unwrap();
    assert_eq!(t.genus(), 1);
    assert_eq!(t.euler_characteristic(), 0);
    let o = build_mesh(&s, 2).unwrap();
    assert_eq!((o.vertices.len(), o.triangles.len()), (6, 8));
    assert!(o.violations().is_empty());
}

#[test]
fn mesh_area_converges_at_second_order() {
    let s = fixtures::sphere(2.0, 3);
    let exact = 16.0 * PI;
    let errs: Vec<f64> = [8, 16, 32, 64]
        .iter()
        .map(|&r| (build_mesh(&s, r).unwrap().area() - exact).abs())
        .collect();
    for w in errs.windows(2) {
        let slope = (w[0] / w[1]).log2();
        assert!(slope >= 1.8, "slope {slope}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dilated_translated_sphere_keeps_pointwise_identities(c in 0.5f64..2.0, t in -2.0f64..2.0, u in 0.2f64..2.9, v in 0.0f64..6.2) {
        let base = fixtures::sphere(2.0, 3);
        let x0 = DVector::from_vec(vec![t, -0.5 * t, 0.25]);
        let moved = dilate_translate(&base, c, &x0);
        let fd = fundamental_data(&moved, &p(&[u, v])).unwrap();
        // Principal curvatures of a radius-2c sphere: |A|² = 2/(2c)², |H| = 1/c.
        prop_assert!((fd.a_norm_sq - 0.5 / (c * c)).abs() < 1e-10);
        prop_assert!((fd.h.norm() - 1.0 / c).abs() < 1e-10);
        let x2 = fd.frame.x.norm_squared();
        prop_assert!((x2 - fd.x_tan.norm_squared() - fd.x_perp.norm_squared()).abs() < 1e-10 * x2.max(1.0));
    }
}
