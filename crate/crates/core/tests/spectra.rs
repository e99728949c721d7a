use std::f64::consts::{E, PI, SQRT_2};

use shrinklab_core::discrete::DiscreteSurface;
use shrinklab_core::immersion::fixtures;
use shrinklab_core::linalg::EigenResult;
use shrinklab_core::spectra::{
    assemble_drift, conformal_spectrum, coordinate_eigen_residuals, drift_spectrum, korevaar_gap, mu_h2_spectrum,
    Weight,
};
use shrinklab_core::Error;

fn multiplicities(r: &EigenResult) -> Vec<usize> {
    r.clusters.iter().map(|c| c.multiplicity).collect()
}

fn sphere(res: usize) -> DiscreteSurface {
    DiscreteSurface::from_immersion(&fixtures::sphere(2.0, 3), res).unwrap()
}

fn check_invariants(r: &EigenResult, m: &shrinklab_core::linalg::CsrMatrix) {
    assert!(r.values[0].abs() < 1e-6);
    assert!(r.max_residual() < 1e-8);
    assert!(r.orthonormality_defect(m) < 1e-8);
}

#[test]
fn sphere_spectrum_is_l_l_plus_one_over_four() {
    let ds = sphere(64);
    let p = assemble_drift(&ds, Weight::Unit).unwrap();
    let r = drift_spectrum(&p, 8).unwrap();
    check_invariants(&r, &p.m);
    // Spherical harmonics of degree l on the radius-2 sphere.
    let expected: Vec<f64> = (0..3)
        .flat_map(|l: usize| std::iter::repeat_n((l * (l + 1)) as f64 / 4.0, 2 * l + 1))
        .collect();
    for (mu, e) in r.values.iter().zip(&expected) {
        assert!((mu - e).abs() < 1e-2, "{mu} vs {e}");
    }
    assert_eq!(multiplicities(&r), vec![1, 3, 5]);
}

#[test]
fn circle_spectrum_is_j_squared_over_two() {
    let ds = DiscreteSurface::from_immersion(&fixtures::circle(SQRT_2, 2), 2048).unwrap();
    let p = assemble_drift(&ds, Weight::Unit).unwrap();
    let r = drift_spectrum(&p, 4).unwrap();
    check_invariants(&r, &p.m);
    for (mu, e) in r.values.iter().zip([0.0, 0.5, 0.5, 2.0, 2.0]) {
        assert!((mu - e).abs() < 1e-4);
    }
    assert_eq!(multiplicities(&r), vec![1, 2, 2]);
}

#[test]
fn clifford_first_eigenvalue_has_multiplicity_four() {
    let ds = DiscreteSurface::from_immersion(&fixtures::clifford(), 48).unwrap();
    let p = assemble_drift(&ds, Weight::Unit).unwrap();
    let r = drift_spectrum(&p, 6).unwrap();
    check_invariants(&r, &p.m);
    assert_eq!(r.clusters[1].multiplicity, 4);
    assert!((r.clusters[1].mean - 0.5).abs() < 1e-2);
}

#[test]
fn constant_vector_spans_the_stiffness_kernel() {
    for ds in [sphere(16), DiscreteSurface::from_immersion(&fixtures::clifford(), 16).unwrap()] {
        let p = assemble_drift(&ds, Weight::Unit).unwrap();
        let ones = vec![1.0; p.dim];
        let k1 = p.k.mul_vec(&ones);
        assert!(k1.iter().all(|v| v.abs() < 1e-8));
        assert_eq!(p.k.asymmetry(), 0.0);
        assert_eq!(p.m.asymmetry(), 0.0);
    }
}

#[test]
fn discrete_operators_are_self_adjoint() {
    let ds = DiscreteSurface::from_immersion(&fixtures::torus_of_revolution(2.0, 0.8), 12).unwrap();
    for w in [Weight::Unit, Weight::Conformal, Weight::MeanCurvatureSq] {
        let p = assemble_drift(&ds, w).unwrap();
        let u: Vec<f64> = (0..p.dim).map(|i| (i as f64 * 0.37).sin()).collect();
        let v: Vec<f64> = (0..p.dim).map(|i| (i as f64 * 1.3).cos()).collect();
        let a: f64 = u.iter().zip(p.k.mul_vec(&v)).map(|(x, y)| x * y).sum();
        let b: f64 = v.iter().zip(p.k.mul_vec(&u)).map(|(x, y)| x * y).sum();
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}

#[test]
fn mean_curvature_weight_equals_unit_weight_on_the_sphere() {
    let ds = sphere(16);
    let a = assemble_drift(&ds, Weight::Unit).unwrap();
    let b = assemble_drift(&ds, Weight::MeanCurvatureSq).unwrap();
    let dk = a.k.to_dense() - b.k.to_dense();
    let dm = a.m.to_dense() - b.m.to_dense();
    assert!(dk.amax() < 1e-8 && dm.amax() < 1e-8);
}

#[test]
fn vanishing_mean_curvature_is_rejected() {
    let ds = DiscreteSurface::from_immersion(&fixtures::torus_of_revolution(2.0, 0.8), 8).unwrap();
    assert!(assemble_drift(&ds, Weight::MeanCurvatureSq).is_ok());
    let mut flat = ds.clone();
    flat.geometry.iter_mut().for_each(|g| g.h.fill(0.0));
    assert!(matches!(
        assemble_drift(&flat, Weight::MeanCurvatureSq),
        Err(Error::VanishingWeight { .. })
    ));
}

#[test]
fn refinement_converges_at_second_order() {
    let errs: Vec<f64> = [8, 16, 32]
        .iter()
        .map(|&res| {
            let r = drift_spectrum(&assemble_drift(&sphere(res), Weight::Unit).unwrap(), 3).unwrap();
            (r.values[1] - 0.5).abs()
        })
        .collect();
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.8);
    }
}

#[test]
fn drift_spectrum_lies_below_conformal_spectrum() {
    for ds in [
        sphere(24),
        DiscreteSurface::from_immersion(&fixtures::clifford(), 24).unwrap(),
        DiscreteSurface::from_immersion(&fixtures::torus_of_revolution(2.0, 0.8), 24).unwrap(),
    ] {
        let a = drift_spectrum(&assemble_drift(&ds, Weight::Unit).unwrap(), 10).unwrap();
        let b = conformal_spectrum(&ds, 10).unwrap();
        assert!(b.values[0].abs() < 1e-8);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!(*x <= y + 1e-8);
        }
    }
    let b = conformal_spectrum(&sphere(32), 3).unwrap();
    assert!(b.values[1] >= 0.5 - 1e-2);
}

#[test]
fn korevaar_rows() {
    let rows = korevaar_gap(&sphere(32), 3, 4.0 / E).unwrap();
    assert_eq!(rows[0].mu_lambda, 0.0);
    assert!((rows[1].ratio - 0.5 * 4.0 / E).abs() < 2e-3);
    let ds = DiscreteSurface::from_immersion(&fixtures::clifford(), 64).unwrap();
    let rows = korevaar_gap(&ds, 1, 2.0 * PI / E).unwrap();
    assert!((rows[1].ratio - 0.5 * 2.0 * PI / E / 2.0).abs() < 2e-3);
}

#[test]
fn mu_h2_on_round_shrinkers() {
    let r = mu_h2_spectrum(&sphere(32), 4).unwrap();
    assert!((r.mu_h2 - 0.5).abs() < 1e-2);
    assert_eq!(r.spectrum.cluster_of(r.index).unwrap().multiplicity, 3);
    // N = 3: the fourth eigenvalue is already at least one.
    assert!(r.spectrum.values[4] >= 1.0 - 1e-2);
    let ds = DiscreteSurface::from_immersion(&fixtures::circle(SQRT_2, 2), 1024).unwrap();
    assert!((mu_h2_spectrum(&ds, 3).unwrap().mu_h2 - 0.5).abs() < 1e-4);
}

#[test]
fn coordinate_functions_are_half_eigenfunctions() {
    let coarse = coordinate_eigen_residuals(&sphere(16), &assemble_drift(&sphere(16), Weight::Unit).unwrap());
    let fine = coordinate_eigen_residuals(&sphere(32), &assemble_drift(&sphere(32), Weight::Unit).unwrap());
    for (c, f) in coarse.iter().zip(&fine) {
        let (c, f) = (c.unwrap(), f.unwrap());
        assert!(f < 2e-2 && (c / f).log2() > 0.8, "{c} {f}");
    }
}
