//! Acceptance criteria 1-11, one PASS/FAIL line each.

use std::f64::consts::{E, PI, SQRT_2};
use std::process::Command;
use std::time::Instant;

use nalgebra::DMatrix;
use shrinklab_core::curves::{
    classify_stable_curves, curve_drift_spectrum, curve_stability_spectrum, nodal_domains, shoot_closed, CurveConfig,
    CurveShrinker,
};
use shrinklab_core::discrete::DiscreteSurface;
use shrinklab_core::functionals::{
    entropy, gaussian_willmore, maxh_argmax, willmore_entropy_gap, EntropyConfig, Surface,
};
use shrinklab_core::identities::{
    binormal_flatness, check_pointwise_identities, check_simons_equations, frenet_torsion, projection_trace,
    spherical_equivalence, IdentityConfig, IdentityReport, JOrientation,
};
use shrinklab_core::immersion::{fixtures, AnalyticImmersion, ParamPoint};
use shrinklab_core::linalg::{cluster, EigenResult};
use shrinklab_core::spectra::{assemble_drift, conformal_spectrum, drift_spectrum, korevaar_gap, Weight};
use shrinklab_core::stability::{
    constrained_family_test, extradims_test, instability_witness, ShrinkerGate, StabilityConfig, Verdict,
};

/// Outcome of one criterion: a verdict plus the measured facts behind it.
struct Outcome {
    pass: bool,
    facts: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            pass: true,
            facts: Vec::new(),
        }
    }

    fn require(&mut self, ok: bool, fact: String) {
        if !ok {
            self.facts.push(format!("FAILED {fact}"));
            self.pass = false;
        } else {
            self.facts.push(fact);
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn sphere2() -> AnalyticImmersion {
    fixtures::sphere(2.0, 3)
}

fn circle() -> AnalyticImmersion {
    fixtures::circle(SQRT_2, 2)
}

fn al_curve() -> CurveShrinker {
    shoot_closed(2, 3, &CurveConfig::default()).expect("the (2, 3) curve exists")
}

fn spectrum(ds: &DiscreteSurface, count: usize) -> EigenResult {
    drift_spectrum(&assemble_drift(ds, Weight::Unit).unwrap(), count).unwrap()
}

/// `(value, multiplicity)` of the eigenvalue clusters `1e-2` apart.
fn levels(values: &[f64]) -> Vec<(f64, usize)> {
    cluster(values, 1e-2).iter().map(|c| (c.mean, c.multiplicity)).collect()
}

fn matches_levels(values: &[f64], expected: &[(f64, usize)]) -> bool {
    let mut k = 0;
    for &(v, m) in expected {
        for _ in 0..m {
            if k >= values.len() || (values[k] - v).abs() > 1e-2 {
                return false;
            }
            k += 1;
        }
    }
    let found = levels(&values[..k]);
    found.len() == expected.len() && found.iter().zip(expected).all(|(a, b)| a.1 == b.1)
}

fn criterion_1() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let ds = DiscreteSurface::from_immersion(&sphere2(), 64).unwrap();
    let lambda = entropy((&ds).into(), &EntropyConfig::default()).unwrap().lambda;
    let secs = start.elapsed().as_secs_f64();
    o.require(rel(lambda, 4.0 / E) < 1e-3, format!("lambda(S2_2, res 64) = {lambda:.7} vs 4/e, rel {:.1e}", rel(lambda, 4.0 / E)));
    o.require(secs < 10.0, format!("{secs:.1} s"));
    o
}

fn criterion_2() -> Outcome {
    let mut o = Outcome::new();
    let cfg = EntropyConfig::default();
    let lc = entropy((&circle()).into(), &cfg).unwrap();
    let expected = 1.520347;
    o.require(rel(lc.lambda, expected) < 1e-3, format!("lambda(circle) = {:.6}", lc.lambda));
    let lt = entropy((&fixtures::clifford()).into(), &cfg).unwrap();
    o.require(rel(lt.lambda, 2.0 * PI / E) < 1e-3, format!("lambda(clifford) = {:.6}", lt.lambda));
    let al = al_curve().immersion(2);
    for (name, imm) in [("sphere2", sphere2()), ("circle", circle()), ("clifford", fixtures::clifford()), ("al-curve", al)] {
        let r = entropy((&imm).into(), &cfg).unwrap();
        let shift = r.shift.iter().map(|x| x * x).sum::<f64>().sqrt();
        o.require(
            (r.scale - 1.0).abs() < 1e-3 && shift < 1e-3,
            format!("{name} argmax c = {:.2e} off 1, |x0| = {shift:.1e}", (r.scale - 1.0).abs()),
        );
    }
    o
}

fn criterion_3() -> Outcome {
    let mut o = Outcome::new();
    let s = spectrum(&DiscreteSurface::from_immersion(&sphere2(), 64).unwrap(), 8);
    o.require(matches_levels(&s.values, &[(0.0, 1), (0.5, 3), (1.5, 5)]), format!("sphere2 levels {:?}", levels(&s.values)));
    let c = spectrum(&DiscreteSurface::from_immersion(&circle(), 256).unwrap(), 4);
    o.require(matches_levels(&c.values, &[(0.0, 1), (0.5, 2), (2.0, 2)]), format!("circle levels {:?}", levels(&c.values)));
    let t = spectrum(&DiscreteSurface::from_immersion(&fixtures::clifford(), 64).unwrap(), 4);
    o.require(matches_levels(&t.values, &[(0.0, 1), (0.5, 4)]), format!("clifford levels {:?}", levels(&t.values)));
    let errs: Vec<f64> = [8, 16, 32]
        .iter()
        .map(|&res| (spectrum(&DiscreteSurface::from_immersion(&sphere2(), res).unwrap(), 1).values[1] - 0.5).abs())
        .collect();
    let slope = errs.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min);
    o.require(slope >= 1.8, format!("refinement slope {slope:.3}"));
    o
}

fn criterion_4() -> Outcome {
    let mut o = Outcome::new();
    let cfg = StabilityConfig::default();
    let ds = DiscreteSurface::from_immersion(&sphere2(), 32).unwrap();
    let r = instability_witness(&ds, &cfg).unwrap();
    o.require((r.mu - 0.5).abs() < 1e-2 && r.witness.is_none(), format!("sphere2 mu1 = {:.5}, no witness", r.mu));
    let q = DMatrix::from_fn(4, 3, |i, j| if i == j { 1.0 } else { 0.0 });
    let ds4 = DiscreteSurface::from_immersion(&fixtures::embed(&sphere2(), q), 32).unwrap();
    let r = extradims_test(&ds4, None, &cfg).unwrap();
    o.require(
        (r.mu - 0.5).abs() < 1e-2 && r.witness.is_none() && r.verdict != Verdict::UnstableWitnessFound,
        format!("sphere2 in R^4 extra direction mu1 = {:.5}, no phi E witness", r.mu),
    );
    let al = al_curve();
    let r = extradims_test(&al.discrete(3).unwrap(), None, &cfg).unwrap();
    match &r.witness {
        Some(w) => o.require(
            r.mu < 0.5 && w.delta2 < 0.0 && w.orthogonality.max() < 1e-6,
            format!("al-curve mu1 = {:.5}, delta2 = {:.3e}, orthogonality {:.1e}", r.mu, w.delta2, w.orthogonality.max()),
        ),
        None => o.require(false, format!("al-curve mu1 = {:.5} but no witness", r.mu)),
    }
    o
}

fn criterion_5() -> Outcome {
    let mut o = Outcome::new();
    for (name, imm, lambda) in [
        ("sphere2", sphere2(), Some(4.0 / E)),
        ("sphere3", fixtures::sphere(3.0, 3), None),
        ("clifford", fixtures::clifford(), Some(2.0 * PI / E)),
    ] {
        let ds = DiscreteSurface::from_immersion(&imm, 32).unwrap();
        let a = spectrum(&ds, 10);
        let b = conformal_spectrum(&ds, 10).unwrap();
        let excess = a.values.iter().zip(&b.values).map(|(x, y)| x - y).fold(f64::NEG_INFINITY, f64::max);
        o.require(excess <= 1e-8, format!("{name} max mu_k(L) - mu_k(conformal) = {excess:.2e}"));
        if let Some(l) = lambda {
            let ratio = korevaar_gap(&ds, 10, l).unwrap().iter().skip(1).map(|r| r.ratio).fold(0.0, f64::max);
            o.require(ratio <= 1.2, format!("{name} measured ratio {ratio:.4}"));
        }
    }
    o
}

fn criterion_6() -> Outcome {
    let mut o = Outcome::new();
    let w = gaussian_willmore((&sphere2()).into()).unwrap();
    o.require((w - 4.0 / E).abs() < 1e-3, format!("W(sphere2) = {w:.7}"));
    let genus0_bound = 2.0 * 2.0 / E;
    o.require((w - genus0_bound).abs() < 1e-3, format!("oriented genus-0 bound {genus0_bound:.7} attained"));
    let al = al_curve().immersion(2);
    let shrinkers = [
        ("plane", fixtures::plane(3)),
        ("sphere2", sphere2()),
        ("circle", circle()),
        ("clifford", fixtures::clifford()),
        ("al-curve", al),
    ];
    for (name, imm) in &shrinkers {
        let g = willmore_entropy_gap(Surface::Analytic(imm)).unwrap();
        match *name {
            "sphere2" | "clifford" => o.require(g.gap.abs() < 1e-4, format!("{name} gap {:.1e}", g.gap)),
            "al-curve" => o.require(g.gap > 1e-2, format!("{name} gap {:.4}", g.gap)),
            _ => {}
        }
        let scale = 8.0 * g.n as f64 * g.lambda;
        let r = (g.identity_lhs - g.identity_rhs).abs() / scale;
        o.require(r < 1e-6, format!("{name} 16W identity residual {r:.1e}"));
    }
    o
}

fn criterion_7() -> Outcome {
    let mut o = Outcome::new();
    let (r, v) = maxh_argmax();
    o.require((r - 2.0).abs() < 1e-6, format!("argmax r = {r:.9}"));
    o.require((v - 4.0 / E).abs() < 1e-10, format!("max off 4/e by {:.1e}", (v - 4.0 / E).abs()));
    o
}

fn criterion_8() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let cfg = CurveConfig::default();
    let circle = shoot_closed(1, 1, &cfg).unwrap();
    let dev = circle.samples.iter().map(|s| (s.k - 1.0 / SQRT_2).abs()).fold(0.0, f64::max);
    o.require(dev < 1e-8, format!("circle |k - 1/sqrt2| = {dev:.1e}"));
    let al = al_curve();
    o.require(
        al.closure_error < 1e-8 && al.gauss_degree >= 2,
        format!("al-curve closure {:.1e}, Gauss degree {}", al.closure_error, al.gauss_degree),
    );
    let st = curve_stability_spectrum(&al, 4).unwrap();
    let (c1, c2) = (st.values[0], st.values[1]);
    o.require((c1 - 1.0).abs() < 1e-3 && c2 > 0.501 && c2 < 0.999, format!("c1 = {c1:.6}, c2 = {c2:.6}"));
    let ds = al.discrete(2).unwrap();
    let m = assemble_drift(&ds, Weight::Unit).unwrap().m;
    let k: Vec<f64> = ds.geometry.iter().map(|g| g.h.norm()).collect();
    let u = &st.spectrum.vectors[0];
    let alpha = m.bilinear(u, &k) / m.bilinear(u, u);
    let diff: Vec<f64> = k.iter().zip(u).map(|(a, b)| a - alpha * b).collect();
    let misfit = (m.bilinear(&diff, &diff) / m.bilinear(&k, &k)).sqrt();
    o.require(misfit < 1e-3, format!("c1 eigenfunction vs k misfit {misfit:.1e}"));
    let mu1 = curve_drift_spectrum(&al, 3).unwrap().values[1];
    o.require(mu1 < 0.499, format!("mu1 = {mu1:.5}"));
    let counts: Vec<usize> = [
        al.samples.iter().map(|s| s.theta.sin()).collect::<Vec<_>>(),
        al.samples.iter().map(|s| -s.theta.cos()).collect(),
        al.samples.iter().map(|s| s.x).collect(),
        al.samples.iter().map(|s| s.y).collect(),
    ]
    .iter()
    .map(|u| nodal_domains(u))
    .collect();
    o.require(counts.iter().all(|&c| c >= 4), format!("nodal domains <n,E1>, <n,E2>, x1, x2: {counts:?}"));
    let v = classify_stable_curves(&[circle, al]).unwrap();
    o.require(!v[0].flagged && v[1].flagged, "classification flags only the non-circular curve".into());
    let secs = start.elapsed().as_secs_f64();
    o.require(secs < 60.0, format!("{secs:.1} s"));
    o
}

fn sup(r: &[IdentityReport], name: &str) -> f64 {
    r.iter().find(|x| x.name == name).map_or(f64::NAN, |x| x.sup)
}

fn criterion_9() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let cfg = IdentityConfig::default();
    for (name, imm) in [
        ("plane", fixtures::plane(3)),
        ("sphere2", sphere2()),
        ("circle", circle()),
        ("clifford", fixtures::clifford()),
    ] {
        let mut all = check_pointwise_identities(&imm, &cfg).unwrap();
        if name != "plane" {
            all.extend(check_simons_equations(&imm, &cfg).unwrap());
        }
        let worst = all.iter().filter(|r| !r.pass).map(|r| r.name.clone()).collect::<Vec<_>>();
        let max = all.iter().map(|r| r.sup / r.tol).fold(0.0, f64::max);
        o.require(worst.is_empty(), format!("{name}: {} identities, worst sup/tol {max:.1e} {worst:?}", all.len()));
    }
    let contrast = IdentityConfig {
        gate: ShrinkerGate::Contrast,
        ..cfg
    };
    let s3 = fixtures::sphere(3.0, 3);
    let mut r = check_pointwise_identities(&s3, &contrast).unwrap();
    r.extend(check_simons_equations(&s3, &contrast).unwrap());
    let failing = ["hess-f-minus-a-h", "hess-f-plus-ric", "simons-lh", "simons-la"];
    let min = failing.iter().map(|n| sup(&r, n)).fold(f64::INFINITY, f64::min);
    o.require(min > 1e-2, format!("sphere3 contrast: smallest shrinker-only residual {min:.4} (dH and L V hold on round spheres)"));
    for (name, imm) in [("sphere2", sphere2()), ("clifford", fixtures::clifford())] {
        let e = spherical_equivalence(&imm, &cfg).unwrap();
        o.require(e.consistent && e.shrinker.pass && e.minimal_in_sphere.pass, format!("{name} spherical equivalence"));
    }
    let t = frenet_torsion(
        &fixtures::clifford(),
        &ParamPoint::new(0, &[0.3, 1.1]),
        &[1.0, -0.5, 0.2, 0.7],
        JOrientation::Positive,
        None,
    )
    .unwrap();
    let tr = t.residual.unwrap_or(f64::NAN);
    o.require(tr < 1e-6, format!("torsion two ways differ by {tr:.1e}"));
    let rotated = fixtures::embed(&sphere2(), fixtures::random_isometry(4, 3, 11));
    let b = binormal_flatness(&rotated, &cfg).unwrap();
    o.require(b.flat && b.in_hyperplane && b.consistent, "binormal flat and in a hyperplane: rotated sphere2".into());
    let b = binormal_flatness(&fixtures::clifford(), &cfg).unwrap();
    o.require(!b.flat && !b.in_hyperplane && b.consistent, "binormal neither: clifford".into());
    let b = binormal_flatness(&al_curve().immersion(3), &cfg).unwrap();
    o.require(b.flat && b.in_hyperplane && b.consistent, "binormal flat and in a hyperplane: al-curve in R^3".into());
    let mut held = 0;
    for i in 0..100u64 {
        let dim = 2 + (i % 7) as usize;
        let n = 1 + (i / 7) as usize % (dim - 1);
        let k = 1 + (i / 3) as usize % (dim - n);
        let v = fixtures::random_isometry(dim, n, 1000 + i);
        let p = v.clone() * v.transpose();
        let brute: f64 = (0..n + k).map(|j| 1.0 - p[(j, j)]).sum();
        let t = projection_trace(&v, k).unwrap();
        if t.holds && (t.value - brute).abs() < 1e-9 {
            held += 1;
        }
    }
    o.require(held == 100, format!("projection trace bound on {held}/100 random subspaces"));
    let secs = start.elapsed().as_secs_f64();
    o.require(secs < 120.0, format!("{secs:.1} s"));
    o
}

fn criterion_10() -> Outcome {
    let mut o = Outcome::new();
    let ds = DiscreteSurface::from_immersion(&sphere2(), 32).unwrap();
    let s = spectrum(&ds, 12);
    let margin = s.values[12] / 0.25;
    o.require(margin >= 10.0, format!("mu_12 = {:.4} >= 1/4 with margin {margin:.1}x", s.values[12]));
    let r = constrained_family_test(&ds, 1, 0, ShrinkerGate::Require).unwrap();
    let margin = r.mu_index / r.bound;
    o.require(margin >= 10.0, format!("mu_{} = {:.4} >= {:.4} with margin {margin:.1}x", r.index, r.mu_index, r.bound));
    o.require(
        r.lhs <= r.rhs && (r.rhs - r.rhs_spectral).abs() < 1e-8 && r.system_residual < 1e-8,
        format!(
            "constrained phi: {:.4} <= {:.4} (form) = {:.4} (spectral), conditions {:.1e}",
            r.lhs, r.rhs, r.rhs_spectral, r.system_residual
        ),
    );
    o
}

fn criterion_11() -> Outcome {
    let mut o = Outcome::new();
    let dir = tempfile::tempdir().unwrap();
    for fixture in ["sphere2", "al-curve"] {
        let paths: Vec<_> = (0..2).map(|i| dir.path().join(format!("{fixture}-{i}.json"))).collect();
        for p in &paths {
            let status = Command::new(env!("CARGO_BIN_EXE_shrinklab"))
                .args(["verify", "--fixture", fixture, "--out"])
                .arg(p)
                .output()
                .unwrap()
                .status;
            o.require(status.success(), format!("{fixture} verify exit {:?}", status.code()));
        }
        let a = std::fs::read(&paths[0]).unwrap_or_default();
        let b = std::fs::read(&paths[1]).unwrap_or_default();
        o.require(!a.is_empty() && a == b, format!("{fixture}: two reports of {} bytes identical", a.len()));
    }
    o
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("entropy of the shrinking sphere on a mesh", criterion_1),
        ("entropy closed forms and argmax", criterion_2),
        ("drift spectra and refinement order", criterion_3),
        ("extra-dimension borderline and witness", criterion_4),
        ("conformal comparison chain", criterion_5),
        ("Gaussian Willmore values, gap and identity", criterion_6),
        ("maximum of r^2 exp(-r^2/4)", criterion_7),
        ("closed curve suite", criterion_8),
        ("identity suite and failure contrast", criterion_9),
        ("counting bounds on the sphere", criterion_10),
        ("byte-identical verify runs", criterion_11),
    ];
    let mut failed = 0;
    for (i, (title, f)) in criteria.iter().enumerate() {
        let o = f();
        println!("criterion {:>2} {}: {title}; {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.facts.join("; "));
        if !o.pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
