use std::f64::consts::{E, PI, SQRT_2};
use std::sync::OnceLock;

use proptest::prelude::*;
use shrinklab_core::curves::*;
use shrinklab_core::discrete::DiscreteSurface;
use shrinklab_core::functionals::{entropy, gaussian_willmore, EntropyConfig};
use shrinklab_core::immersion::fixtures;
use shrinklab_core::stability::{extradims_test, instability_witness, scalar_stability_spectrum, StabilityConfig, Verdict};
use shrinklab_core::Error;

fn al23() -> &'static CurveShrinker {
    static C: OnceLock<CurveShrinker> = OnceLock::new();
    C.get_or_init(|| shoot_closed(2, 3, &CurveConfig::default()).unwrap())
}

fn circle() -> &'static CurveShrinker {
    static C: OnceLock<CurveShrinker> = OnceLock::new();
    C.get_or_init(|| shoot_closed(1, 1, &CurveConfig::default()).unwrap())
}

/// Fixed-step RK4 oracle for `(x, y, θ)`.
mod oracle {
    pub type S = [f64; 3];

    pub fn rhs(y: &S) -> S {
        [y[2].cos(), y[2].sin(), 0.5 * (y[0] * y[2].sin() - y[1] * y[2].cos())]
    }

    pub fn step(y: &S, h: f64) -> S {
        let add = |a: &S, b: &S, t: f64| [a[0] + t * b[0], a[1] + t * b[1], a[2] + t * b[2]];
        let k1 = rhs(y);
        let k2 = rhs(&add(y, &k1, h / 2.0));
        let k3 = rhs(&add(y, &k2, h / 2.0));
        let k4 = rhs(&add(y, &k3, h));
        [0, 1, 2].map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
    }

    pub fn radial(y: &S) -> f64 {
        y[0] * y[2].cos() + y[1] * y[2].sin()
    }

    /// `(period, Δθ)` up to the second zero of `<x, T>`.
    pub fn period(k0: f64, h: f64) -> (f64, f64) {
        let mut y = [2.0 * k0, 0.0, std::f64::consts::PI / 2.0];
        let mut s = 0.0;
        let mut sign = 0.0;
        let mut crossings = 0;
        loop {
            let next = step(&y, h);
            let g = radial(&next);
            if sign != 0.0 && g.signum() != sign {
                crossings += 1;
                if crossings == 2 {
                    let (mut a, mut b) = (0.0, h);
                    for _ in 0..60 {
                        let mid = 0.5 * (a + b);
                        if radial(&step(&y, mid)).signum() == sign {
                            a = mid;
                        } else {
                            b = mid;
                        }
                    }
                    let end = step(&y, a);
                    return (s + a, end[2] - std::f64::consts::PI / 2.0);
                }
            }
            sign = g.signum();
            y = next;
            s += h;
        }
    }

    /// Closed curve sampled at `m` equal arclength steps of `length / m`.
    pub fn samples(k0: f64, length: f64, m: usize, sub: usize) -> Vec<S> {
        let h = length / (m * sub) as f64;
        let mut y = [2.0 * k0, 0.0, std::f64::consts::PI / 2.0];
        let mut out = Vec::with_capacity(m);
        for _ in 0..m {
            out.push(y);
            for _ in 0..sub {
                y = step(&y, h);
            }
        }
        out
    }
}

#[test]
fn circle_closes_after_one_period() {
    let t = integrate_curve(1.0 / SQRT_2, &CurveConfig::default()).unwrap();
    assert!(t.circle);
    assert!((t.period - 2.0 * PI * SQRT_2).abs() < 1e-12);
    assert!((t.ratio() - 1.0).abs() < 1e-12);
    let c = circle();
    assert!(c.samples.iter().all(|s| (s.k - 1.0 / SQRT_2).abs() < 1e-10));
    assert!(c.samples.iter().all(|s| ((s.x * s.x + s.y * s.y).sqrt() - SQRT_2).abs() < 1e-10));
    assert_eq!((c.rotation_index, c.gauss_degree), (1, 1));
}

#[test]
fn perturbed_circle_oscillates() {
    let t = integrate_curve(1.0 / SQRT_2 + 1e-3, &CurveConfig::default()).unwrap();
    assert!(!t.circle && t.period > 0.0);
    // Linearization about the circle: the curvature oscillates 1/√2 times per turn.
    assert!((t.ratio() - 1.0 / SQRT_2).abs() < 1e-3);
    let (period, dtheta) = oracle::period(1.0 / SQRT_2 + 1e-3, 1e-3);
    assert!((t.period - period).abs() < 1e-9 && (t.delta_theta - dtheta).abs() < 1e-9);
}

#[test]
fn invalid_initial_curvature() {
    let cfg = CurveConfig::default();
    assert!(matches!(integrate_curve(0.0, &cfg), Err(Error::NonPositiveCurvature(_))));
    assert!(matches!(integrate_curve(-0.3, &cfg), Err(Error::NonPositiveCurvature(_))));
    assert!(matches!(integrate_curve(1e-7, &cfg), Err(Error::BlowUp(_))));
}

#[test]
fn two_three_curve_matches_an_rk4_shooting_oracle() {
    // Bisection on the RK4 period ratio.
    let (mut a, mut b) = (0.1, 0.3);
    for _ in 0..40 {
        let mid = 0.5 * (a + b);
        if oracle::period(mid, 2e-3).1 / (2.0 * PI) < 2.0 / 3.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let k0 = 0.5 * (a + b);
    let c = al23();
    assert!((c.k0 - k0).abs() < 1e-8, "{} {}", c.k0, k0);
    let length = 3.0 * oracle::period(k0, 2e-3).0;
    assert!((c.length - length).abs() < 1e-6);
    assert_eq!((c.rotation_index, c.gauss_degree), (2, 2));
    assert!(c.convex && c.k_min > 0.0 && c.closure_error < 1e-8);
    assert!(c.shrinker_residual(2) < 1e-8);
}

#[test]
fn second_solution_and_missing_targets() {
    let cfg = CurveConfig::default();
    let c = shoot_closed(5, 8, &cfg).unwrap();
    assert_eq!((c.rotation_index, c.gauss_degree), (5, 5));
    assert!(c.closure_error < 1e-8 && c.convex);
    assert!(c.shrinker_residual(2) < 1e-8);
    for (p, q) in [(1, 2), (1, 5), (3, 4)] {
        assert!(matches!(shoot_closed(p, q, &cfg), Err(Error::NoRoot { .. })));
    }
    assert!(matches!(shoot_closed(2, 4, &cfg), Err(Error::BadDimensions(_))));
}

#[test]
fn functionals_of_the_curves() {
    let cfg = EntropyConfig::default();
    let circle_imm = circle().immersion(2);
    let lc = entropy((&circle_imm).into(), &cfg).unwrap().lambda;
    assert!((lc - (2.0 * PI / E).sqrt()).abs() < 1e-8);

    // Trapezoid oracle on RK4 samples of the closed curve.
    let c = al23();
    let m = 2048;
    let pts = oracle::samples(c.k0, c.length, m, 8);
    let ds = c.length / m as f64;
    let f: f64 = pts.iter().map(|y| (-(y[0] * y[0] + y[1] * y[1]) / 4.0).exp()).sum::<f64>() * ds / (4.0 * PI).sqrt();
    let w: f64 = pts
        .iter()
        .map(|y| {
            let k = oracle::rhs(y)[2];
            k * k * (-(y[0] * y[0] + y[1] * y[1]) / 4.0).exp()
        })
        .sum::<f64>()
        * ds
        / (4.0 * PI).sqrt();
    let imm = c.immersion(2);
    let ent = entropy((&imm).into(), &cfg).unwrap();
    assert!(ent.argmax_is_identity);
    assert!((ent.lambda - f).abs() < 1e-7, "{} {f}", ent.lambda);
    assert!(ent.lambda > lc);
    let wil = gaussian_willmore((&imm).into()).unwrap();
    assert!((wil - w).abs() < 1e-7, "{wil} {w}");
}

#[test]
fn drift_spectra() {
    let d = curve_drift_spectrum(circle(), 4).unwrap();
    for (mu, e) in d.values.iter().zip([0.0, 0.5, 0.5, 2.0, 2.0]) {
        assert!((mu - e).abs() < 1e-5);
    }
    let ds = circle().discrete(2).unwrap();
    let m = shrinklab_core::spectra::assemble_drift(&ds, shrinklab_core::spectra::Weight::Unit).unwrap();
    let x1 = ds.coordinate(0);
    let kx = m.k.mul_vec(&x1);
    let mx = m.m.mul_vec(&x1);
    let rel = kx.iter().zip(&mx).map(|(a, b)| (a - 0.5 * b).abs()).fold(0.0, f64::max)
        / mx.iter().map(|b| b.abs()).fold(0.0, f64::max);
    assert!(rel < 1e-5);

    let d = curve_drift_spectrum(al23(), 3).unwrap();
    assert!(d.values[0].abs() < 1e-8);
    assert!(d.values[1] < 0.5);
}

#[test]
fn stability_spectra() {
    let s = curve_stability_spectrum(circle(), 5).unwrap();
    for (c, e) in s.values.iter().zip([1.0, 0.5, 0.5, -1.0, -1.0]) {
        assert!((c - e).abs() < 1e-5);
    }
    let reference = DiscreteSurface::from_immersion(&fixtures::circle(SQRT_2, 2), circle().samples.len()).unwrap();
    let r = scalar_stability_spectrum(&reference, 5).unwrap();
    for (a, b) in s.values.iter().zip(&r.values) {
        assert!((a - b).abs() < 1e-6);
    }

    let c = al23();
    let s = curve_stability_spectrum(c, 4).unwrap();
    assert!((s.values[0] - 1.0).abs() < 1e-4);
    assert!(s.values[1] > 0.5 + 1e-3 && s.values[1] < 1.0 - 1e-3, "{:?}", s.values);
    // Top eigenfunction against k.
    let ds = c.discrete(2).unwrap();
    let m = shrinklab_core::spectra::assemble_drift(&ds, shrinklab_core::spectra::Weight::Unit).unwrap().m;
    let k: Vec<f64> = ds.geometry.iter().map(|g| g.h.norm()).collect();
    let u = &s.spectrum.vectors[0];
    let alpha = m.bilinear(u, &k) / m.bilinear(u, u);
    let diff: Vec<f64> = k.iter().zip(u).map(|(a, b)| a - alpha * b).collect();
    assert!((m.bilinear(&diff, &diff) / m.bilinear(&k, &k)).sqrt() < 1e-3);
}

#[test]
fn nodal_domain_counts() {
    let c = al23();
    let sin_theta: Vec<f64> = c.samples.iter().map(|s| s.theta.sin()).collect();
    assert!(nodal_domains(&sin_theta) >= 4);
    let x1: Vec<f64> = c.samples.iter().map(|s| s.x).collect();
    assert!(nodal_domains(&x1) >= 4);
    assert_eq!(nodal_domains(&[2.0; 16]), 1);
    assert_eq!(nodal_domains(&[1.0, 1e-9, -1.0, -1.0, 1e-9, 1.0]), 2);
}

#[test]
fn classification() {
    let v = classify_stable_curves(&[circle().clone(), al23().clone()]).unwrap();
    assert!(!v[0].flagged && v[1].flagged);
    let v = classify_stable_curves(&[circle().clone()]).unwrap();
    assert!(!v[0].flagged);
    let other = shoot_closed(5, 8, &CurveConfig::default()).unwrap();
    let v = classify_stable_curves(&[al23().clone(), other]).unwrap();
    assert!(v.iter().all(|c| c.flagged));
}

#[test]
fn witnesses_on_the_two_three_curve() {
    let c = al23();
    for samples in [2048, 4096] {
        let coarse = CurveShrinker {
            samples: c.samples.iter().step_by(4096 / samples).copied().collect(),
            ..c.clone()
        };
        let ds = coarse.discrete(2).unwrap();
        let r = instability_witness(&ds, &StabilityConfig::default()).unwrap();
        assert_eq!(r.verdict, Verdict::UnstableWitnessFound, "{r:?}");
        let w = r.witness.unwrap();
        assert!(w.orthogonality.max() < 1e-6);
        assert!(w.delta2 < -1e-6 * w.l2_norm_sq);
    }
    let ds3 = c.discrete(3).unwrap();
    let r = extradims_test(&ds3, None, &StabilityConfig::default()).unwrap();
    assert_eq!(r.verdict, Verdict::UnstableWitnessFound);
    assert!(r.mu < 0.5);
}

#[test]
fn csv_round_trip() {
    let c = al23();
    let mut buf = Vec::new();
    c.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with('#'));
    let back = CurveShrinker::read_csv(buf.as_slice(), "reloaded").unwrap();
    assert_eq!(back.samples.len(), c.samples.len());
    assert!(back.samples.iter().zip(&c.samples).all(|(a, b)| a.x == b.x && a.theta == b.theta));
    assert_eq!((back.rotation_index, back.gauss_degree), (2, 2));
    assert!((back.length - c.length).abs() < 1e-9);
    assert!(back.shrinker_residual(2) < 1e-8);
    assert!(matches!(
        CurveShrinker::read_csv("s,x\n1,2\n".as_bytes(), "bad"),
        Err(Error::Parse(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn period_ratio_lies_between_one_half_and_one_over_root_two(k0 in 0.01f64..0.7) {
        let t = integrate_curve(k0, &CurveConfig::default()).unwrap();
        prop_assert!(t.ratio() > 0.5 && t.ratio() < 1.0 / SQRT_2);
        // The curvature along the period never drops below its starting value.
        let kmin = t.steps.iter().map(|s| 0.5 * (s[1] * s[3].sin() - s[2] * s[3].cos())).fold(f64::INFINITY, f64::min);
        prop_assert!(kmin >= k0 * (1.0 - 1e-9));
    }
}
