//! Second-variation quadratic forms, F-stability certificates and
//! instability witnesses on discretized shrinkers.
//!
//! `L` eigenvalues are reported in the `L u = c u` convention and `ℒ`
//! eigenvalues in the `ℒ u + μ u = 0` convention.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::discrete::DiscreteSurface;
use crate::error::{Error, Result};
use crate::functionals::{gaussian_normalization, Surface};
use crate::immersion::fundamental::frame_from_jet;
use crate::immersion::{chart::fd_step, AnalyticImmersion, DerivativeMode};
use crate::linalg::{smallest_generalized, CsrMatrix, EigenOptions, EigenResult};
use crate::spectra::{assemble_drift, drift_spectrum, mu_h2_spectrum, potential_mass, weighted_pair, Weight};

pub const SHRINKER_TOL: f64 = 1e-4;
/// Largest normalized inner product an emitted witness may have with `H` or a translation.
pub const ORTHOGONALITY_TOL: f64 = 1e-6;

pub const CONVENTION_NOTE: &str = "L u = c u for the stability operator; ℒ u + μ u = 0 for drift operators";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShrinkerGate {
    /// Refuse inputs whose shrinker residual exceeds [`SHRINKER_TOL`].
    #[default]
    Require,
    /// Evaluate anyway and report the residual.
    Contrast,
}

/// Sup of `|H - x^perp/2|` over the vertices, gated.
pub fn shrinker_gate(ds: &DiscreteSurface, gate: ShrinkerGate) -> Result<f64> {
    let residual = Surface::Discrete(ds).shrinker_residual_sup()?;
    if gate == ShrinkerGate::Require && residual > SHRINKER_TOL {
        return Err(Error::NotAShrinker { residual });
    }
    Ok(residual)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariationKind {
    PhiH,
    PhiV,
    PhiE,
    /// `u H - V^perp` with `V^perp` the projection of `u H` onto translations.
    PhiHMinusTranslation,
}

#[derive(Debug, Clone, Serialize)]
pub struct VariationField {
    pub kind: VariationKind,
    #[serde(skip)]
    pub phi: Vec<f64>,
    pub direction: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    UnstableWitnessFound,
    NoWitnessInFamily,
    Borderline,
}

/// Normalized Gaussian inner products `|<w, X>| / (|w| |X|)`.
#[derive(Debug, Clone, Serialize)]
pub struct Orthogonality {
    pub against_h: f64,
    pub against_translations: Vec<f64>,
}

impl Orthogonality {
    pub fn max(&self) -> f64 {
        self.against_translations.iter().copied().fold(self.against_h, f64::max)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub field: VariationField,
    pub delta2: f64,
    /// `(4π)^{-n/2} ∫ |w|² e^{-f}`.
    pub l2_norm_sq: f64,
    pub orthogonality: Orthogonality,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub test: &'static str,
    pub surface: String,
    pub shrinker_residual: f64,
    pub mu_label: &'static str,
    pub mu: f64,
    pub delta2: Vec<(String, f64)>,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub notes: Vec<String>,
    pub convention: &'static str,
}

#[derive(Debug, Clone, Copy)]
pub struct StabilityConfig {
    pub gate: ShrinkerGate,
    /// Window around `1/2` treated as borderline.
    pub mu_tol: f64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            gate: ShrinkerGate::Require,
            mu_tol: 1e-2,
        }
    }
}

pub(crate) type Field = Vec<DVector<f64>>;

fn check_phi(ds: &DiscreteSurface, phi: &[f64]) -> Result<()> {
    if phi.len() != ds.vertex_count() {
        return Err(Error::BadDimensions(format!(
            "φ has {} values for {} vertices",
            phi.len(),
            ds.vertex_count()
        )));
    }
    if phi.iter().any(|v| !v.is_finite()) {
        return Err(Error::BadDimensions("φ is not finite".into()));
    }
    Ok(())
}

fn check_direction(ds: &DiscreteSurface, v: &[f64]) -> Result<DVector<f64>> {
    if v.len() != ds.ambient_dim {
        return Err(Error::BadDimensions(format!(
            "direction has {} components in R^{}",
            v.len(),
            ds.ambient_dim
        )));
    }
    Ok(DVector::from_column_slice(v))
}

pub(crate) fn mass(ds: &DiscreteSurface) -> CsrMatrix {
    potential_mass(ds, &vec![1.0; ds.vertex_count()])
}

/// Gaussian `L²` pairing of per-vertex vector fields through the P1 mass matrix.
pub(crate) fn pair(m: &CsrMatrix, x: &[DVector<f64>], y: &[DVector<f64>]) -> f64 {
    let dim = x.first().map_or(0, |v| v.len());
    (0..dim)
        .map(|d| {
            let xd: Vec<f64> = x.iter().map(|v| v[d]).collect();
            let yd: Vec<f64> = y.iter().map(|v| v[d]).collect();
            m.bilinear(&xd, &yd)
        })
        .sum()
}

pub(crate) fn normal_part(ds: &DiscreteSurface, v: &DVector<f64>) -> Field {
    ds.geometry.iter().map(|g| v - &g.proj_tan * v).collect()
}

pub(crate) fn h_field(ds: &DiscreteSurface) -> Field {
    ds.geometry.iter().map(|g| g.h.clone()).collect()
}

fn translations(ds: &DiscreteSurface) -> Vec<Field> {
    (0..ds.ambient_dim)
        .map(|j| normal_part(ds, &DVector::from_fn(ds.ambient_dim, |i, _| if i == j { 1.0 } else { 0.0 })))
        .collect()
}

pub(crate) fn scale_field(phi: &[f64], x: &[DVector<f64>]) -> Field {
    phi.iter().zip(x).map(|(p, v)| v * *p).collect()
}

fn orthogonality(m: &CsrMatrix, w: &[DVector<f64>], h: &[DVector<f64>], trans: &[Field]) -> Orthogonality {
    let wn = pair(m, w, w).sqrt().max(1e-300);
    let rel = |x: &[DVector<f64>]| {
        let xn = pair(m, x, x).sqrt();
        if xn < 1e-300 {
            0.0
        } else {
            pair(m, w, x).abs() / (wn * xn)
        }
    };
    Orthogonality {
        against_h: rel(h),
        against_translations: trans.iter().map(|t| rel(t)).collect(),
    }
}

fn phi_v_form(ds: &DiscreteSurface, phi: &[f64], v: &DVector<f64>) -> f64 {
    let q: Vec<f64> = normal_part(ds, v).iter().map(|w| w.norm_squared()).collect();
    let (k, m) = weighted_pair(ds, &q);
    gaussian_normalization(ds.intrinsic_dim) * (k.bilinear(phi, phi) - 0.5 * m.bilinear(phi, phi))
}

fn phi_h_form(ds: &DiscreteSurface, phi: &[f64]) -> f64 {
    let (k, m) = weighted_pair(ds, &ds.h_norm_sq());
    gaussian_normalization(ds.intrinsic_dim) * (k.bilinear(phi, phi) - m.bilinear(phi, phi))
}

/// `δ²(φ V^perp) = (4π)^{-n/2} ∫ [|∇φ|² - φ²/2] |V^perp|² e^{-f}`.
pub fn second_variation_phi_v(ds: &DiscreteSurface, phi: &[f64], v: &[f64], gate: ShrinkerGate) -> Result<f64> {
    check_phi(ds, phi)?;
    let v = check_direction(ds, v)?;
    shrinker_gate(ds, gate)?;
    Ok(phi_v_form(ds, phi, &v))
}

/// `δ²(φ H) = (4π)^{-n/2} ∫ [|∇φ|² - φ²] |H|² e^{-f}`.
pub fn second_variation_phi_h(ds: &DiscreteSurface, phi: &[f64], gate: ShrinkerGate) -> Result<f64> {
    check_phi(ds, phi)?;
    shrinker_gate(ds, gate)?;
    Ok(phi_h_form(ds, phi))
}

fn require_codim_one(ds: &DiscreteSurface) -> Result<Vec<f64>> {
    if ds.ambient_dim != ds.intrinsic_dim + 1 {
        return Err(Error::WrongCodimension {
            intrinsic: ds.intrinsic_dim,
            ambient: ds.ambient_dim,
        });
    }
    ds.a_norm_sq()
        .ok_or_else(|| Error::BadDimensions("|A|² is unavailable on this discretization".into()))
}

/// Scalar route in codimension one: `δ²(w ν) = (4π)^{-n/2} ∫ |∇w|² - (1/2 + |A|²) w² e^{-f}`.
pub fn second_variation_scalar(ds: &DiscreteSurface, w: &[f64]) -> Result<f64> {
    check_phi(ds, w)?;
    let a2 = require_codim_one(ds)?;
    let q: Vec<f64> = a2.iter().map(|a| 0.5 + a).collect();
    let k = assemble_drift(ds, Weight::Unit)?.k;
    let mq = potential_mass(ds, &q);
    Ok(gaussian_normalization(ds.intrinsic_dim) * (k.bilinear(w, w) - mq.bilinear(w, w)))
}

/// Builds `u H - V^perp` from the first nontrivial `ℒ_{|H|²}` eigenfunction
/// when `μ_{|H|²} < 1/2`.
pub fn instability_witness(ds: &DiscreteSurface, cfg: &StabilityConfig) -> Result<StabilityReport> {
    let residual = shrinker_gate(ds, cfg.gate)?;
    let mh = mu_h2_spectrum(ds, 3)?;
    let mu = mh.mu_h2;
    let mut report = StabilityReport {
        test: "instability-witness",
        surface: ds.name.clone(),
        shrinker_residual: residual,
        mu_label: "mu_|H|^2",
        mu,
        delta2: Vec::new(),
        verdict: if (mu - 0.5).abs() <= cfg.mu_tol {
            Verdict::Borderline
        } else {
            Verdict::NoWitnessInFamily
        },
        witness: None,
        notes: Vec::new(),
        convention: CONVENTION_NOTE,
    };
    if mu >= 0.5 - cfg.mu_tol {
        return Ok(report);
    }
    let m = mass(ds);
    let h = h_field(ds);
    let trans = translations(ds);
    let u = &mh.spectrum.vectors[mh.index];
    let uh = scale_field(u, &h);

    // Joint projection of uH onto span{H, E_j^perp}.
    let mut basis: Vec<&[DVector<f64>]> = vec![&h];
    basis.extend(trans.iter().map(|t| t.as_slice()));
    let dim = basis.len();
    let gram = DMatrix::from_fn(dim, dim, |i, j| pair(&m, basis[i], basis[j]));
    let rhs = DVector::from_fn(dim, |i, _| pair(&m, basis[i], &uh));
    let coeffs = gram
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-12 * gram.norm())
        .map_err(|e| Error::SolverFailure(e.to_string()))?;
    let alpha = coeffs[0];
    let v = DVector::from_fn(ds.ambient_dim, |j, _| coeffs[j + 1]);
    let u_prime: Vec<f64> = u.iter().map(|x| x - alpha).collect();
    let up_h = scale_field(&u_prime, &h);
    let vperp = normal_part(ds, &v);
    let w: Field = up_h.iter().zip(&vperp).map(|(a, b)| a - b).collect();

    let norm = gaussian_normalization(ds.intrinsic_dim);
    let q_h = phi_h_form(ds, &u_prime);
    let delta2 = q_h + norm * (pair(&m, &vperp, &up_h) - 0.5 * pair(&m, &vperp, &vperp));
    let l2 = norm * pair(&m, &w, &w);
    let orth = orthogonality(&m, &w, &h, &trans);
    report.delta2.push(("phi-h".into(), phi_h_form(ds, u)));
    report.delta2.push(("witness".into(), delta2));
    let (vn, un) = (pair(&m, &vperp, &vperp).sqrt(), pair(&m, &uh, &uh).sqrt());
    report.notes.push(format!("|V^perp| = {vn:.6e}, |uH| = {un:.6e}"));
    if delta2 < -ORTHOGONALITY_TOL * l2 && orth.max() < ORTHOGONALITY_TOL {
        report.verdict = Verdict::UnstableWitnessFound;
    } else {
        report.verdict = Verdict::NoWitnessInFamily;
        report
            .notes
            .push("candidate failed verification (sign of δ² or orthogonality)".into());
    }
    report.witness = Some(Witness {
        field: VariationField {
            kind: VariationKind::PhiHMinusTranslation,
            phi: u_prime,
            direction: Some(v.iter().copied().collect()),
        },
        delta2,
        l2_norm_sq: l2,
        orthogonality: orth,
    });
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct PhiECheck {
    pub orthogonality: Orthogonality,
    /// `|∫ φ e^{-f}| / (|φ| |1|)`.
    pub against_e: f64,
    pub allowable: bool,
    pub delta2: f64,
    pub l2_norm_sq: f64,
}

/// Allowability and second variation of `φ E` for a constant direction `E`.
pub fn phi_e_check(ds: &DiscreteSurface, phi: &[f64], e: &[f64]) -> Result<PhiECheck> {
    check_phi(ds, phi)?;
    let e = check_direction(ds, e)?;
    let m = mass(ds);
    let w = scale_field(phi, &normal_part(ds, &e));
    let orth = orthogonality(&m, &w, &h_field(ds), &translations(ds));
    let ones = vec![1.0; phi.len()];
    let against_e = m.bilinear(phi, &ones).abs() / (m.bilinear(phi, phi) * m.bilinear(&ones, &ones)).sqrt().max(1e-300);
    Ok(PhiECheck {
        allowable: orth.max().max(against_e) < ORTHOGONALITY_TOL,
        orthogonality: orth,
        against_e,
        delta2: phi_v_form(ds, phi, &e),
        l2_norm_sq: gaussian_normalization(ds.intrinsic_dim) * pair(&m, &w, &w),
    })
}

/// Unit vector orthogonal to the linear span of the vertices, with the
/// matching singular value normalized by `sqrt(#vertices)`.
pub fn complementary_direction(ds: &DiscreteSurface) -> Result<(DVector<f64>, f64)> {
    let nv = ds.vertex_count();
    if nv < ds.ambient_dim {
        return Err(Error::BadDimensions("fewer vertices than ambient dimensions".into()));
    }
    let x = DMatrix::from_fn(nv, ds.ambient_dim, |i, d| ds.vertices[i][d]);
    let svd = x.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let k = svd.singular_values.imin();
    Ok((vt.row(k).transpose(), svd.singular_values[k] / (nv as f64).sqrt()))
}

/// Witness `φ E` for surfaces inside a proper subspace, with `φ` the first
/// nontrivial `ℒ` eigenfunction.
pub fn extradims_test(ds: &DiscreteSurface, e: Option<&[f64]>, cfg: &StabilityConfig) -> Result<StabilityReport> {
    let residual = shrinker_gate(ds, cfg.gate)?;
    let scale = ds.vertices.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let e = match e {
        Some(e) => {
            let e = check_direction(ds, e)?;
            let e = e.normalize();
            let off = ds.vertices.iter().map(|x| x.dot(&e).abs()).fold(0.0, f64::max);
            if off > 1e-8 * scale {
                return Err(Error::NotInSubspace(off));
            }
            e
        }
        None => {
            let (e, s) = complementary_direction(ds)?;
            if s > 1e-8 * scale {
                return Err(Error::NotInSubspace(s));
            }
            e
        }
    };
    let spectrum = drift_spectrum(&assemble_drift(ds, Weight::Unit)?, 3)?;
    let mu = spectrum.values[1];
    let phi = &spectrum.vectors[1];
    let check = phi_e_check(ds, phi, e.as_slice())?;
    let spectral = gaussian_normalization(ds.intrinsic_dim) * (mu - 0.5);
    let mut report = StabilityReport {
        test: "extradims",
        surface: ds.name.clone(),
        shrinker_residual: residual,
        mu_label: "mu_1",
        mu,
        delta2: vec![("phi-e".into(), check.delta2), ("spectral".into(), spectral)],
        verdict: Verdict::NoWitnessInFamily,
        witness: None,
        notes: vec![format!("E = {:?}", e.as_slice())],
        convention: CONVENTION_NOTE,
    };
    if mu < 0.5 - cfg.mu_tol {
        if check.allowable && check.delta2 < -ORTHOGONALITY_TOL * check.l2_norm_sq {
            report.verdict = Verdict::UnstableWitnessFound;
        } else {
            report.notes.push("φE failed verification".into());
        }
        report.witness = Some(Witness {
            field: VariationField {
                kind: VariationKind::PhiE,
                phi: phi.clone(),
                direction: Some(e.iter().copied().collect()),
            },
            delta2: check.delta2,
            l2_norm_sq: check.l2_norm_sq,
            orthogonality: check.orthogonality,
        });
    } else if (mu - 0.5).abs() <= cfg.mu_tol {
        report.verdict = Verdict::Borderline;
        report.notes.push("μ₁ = 1/2 within tolerance: consistent with F-stability".into());
    } else {
        report.notes.push("μ₁ > 1/2: consistent with F-stability".into());
    }
    Ok(report)
}

/// One homogeneous condition on `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Condition {
    /// `∫ φ <E_j^perp, H> e^{-f} = 0`.
    AgainstH(usize),
    /// `∫ φ <E_j^perp, E_l^perp> e^{-f} = 0`.
    AgainstTranslation(usize, usize),
}

/// Conditions for `j < n + k`, deduplicated for symmetric pairs.
pub fn family_conditions(n: usize, k: usize, big_n: usize) -> Vec<Condition> {
    let mut out: Vec<Condition> = (0..n + k).map(Condition::AgainstH).collect();
    for j in 0..n + k {
        for l in 0..big_n {
            if l < n + k && l < j {
                continue;
            }
            out.push(Condition::AgainstTranslation(j, l));
        }
    }
    out
}

/// `(n+k)(N + I - (n+k-3)/2)`.
pub fn family_index(n: usize, k: usize, big_n: usize, index_i: usize) -> usize {
    let nk = (n + k) as i64;
    let v = nk * (big_n + index_i) as i64 - nk * (nk - 3) / 2;
    v.max(0) as usize
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstrainedFamilyReport {
    pub n: usize,
    pub k: usize,
    pub ambient_dim: usize,
    pub f_index: usize,
    /// Eigenvalue index `m` of the counting bound.
    pub index: usize,
    pub conditions: usize,
    pub coefficients: Vec<f64>,
    /// Largest normalized condition residual of the constructed `φ`.
    pub system_residual: f64,
    /// `∫ φ² e^{-f}`.
    pub lhs: f64,
    /// `2(n/k + 1) ∫ |∇φ|² e^{-f}`.
    pub rhs: f64,
    /// `2(n/k + 1) Σ a_i² μ_i`.
    pub rhs_spectral: f64,
    pub inequality_holds: bool,
    pub mu_index: f64,
    /// `k / (2(n+k))`.
    pub bound: f64,
    pub bound_holds: bool,
    /// `μ_{2nN}` when `k = n`.
    pub mu_2nn: Option<f64>,
    /// Range over vertices of `Σ_{j<n+k} |E_j^perp|²`.
    pub projection_trace: (f64, f64),
    pub shrinker_residual: f64,
    pub convention: &'static str,
}

pub fn constrained_family_test(
    ds: &DiscreteSurface,
    k: usize,
    f_index: usize,
    gate: ShrinkerGate,
) -> Result<ConstrainedFamilyReport> {
    let residual = shrinker_gate(ds, gate)?;
    let (n, big_n) = (ds.intrinsic_dim, ds.ambient_dim);
    if k < 1 || n + k > big_n {
        return Err(Error::BadDimensions(format!("need 1 <= k <= N - n, got k = {k}, n = {n}, N = {big_n}")));
    }
    let index = family_index(n, k, big_n, f_index);
    let needed = if k == n { index.max(2 * n * big_n) } else { index };
    let dim = ds.vertex_count();
    if needed + 1 > dim {
        return Err(Error::InsufficientEigenbasis {
            needed,
            available: dim.saturating_sub(1),
        });
    }
    let spectrum = drift_spectrum(&assemble_drift(ds, Weight::Unit)?, needed)?;
    if spectrum.values.len() <= needed {
        return Err(Error::InsufficientEigenbasis {
            needed,
            available: spectrum.values.len().saturating_sub(1),
        });
    }
    let m = mass(ds);
    let conditions = family_conditions(n, k, big_n);
    let cols = index + 1;
    let rows = conditions.len().max(cols);
    let mut a = DMatrix::zeros(rows, cols);
    for (r, c) in conditions.iter().enumerate() {
        let s: Vec<f64> = ds
            .geometry
            .iter()
            .map(|g| match *c {
                Condition::AgainstH(j) => g.h[j],
                Condition::AgainstTranslation(j, l) => (if j == l { 1.0 } else { 0.0 }) - g.proj_tan[(j, l)],
            })
            .collect();
        let ms = m.mul_vec(&s);
        for i in 0..cols {
            a[(r, i)] = spectrum.vectors[i].iter().zip(&ms).map(|(u, w)| u * w).sum();
        }
        let norm = a.row(r).norm();
        if norm > 1e-300 {
            a.row_mut(r).scale_mut(1.0 / norm);
        }
    }
    let svd = a.clone().svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let kmin = svd.singular_values.imin();
    let coeffs = vt.row(kmin).transpose();
    let system_residual = (&a * &coeffs).amax();

    let mut phi = vec![0.0; dim];
    for (i, ai) in coeffs.iter().enumerate() {
        for (p, u) in phi.iter_mut().zip(&spectrum.vectors[i]) {
            *p += ai * u;
        }
    }
    let stiff = assemble_drift(ds, Weight::Unit)?.k;
    let factor = 2.0 * (n as f64 / k as f64 + 1.0);
    let lhs = m.bilinear(&phi, &phi);
    let rhs = factor * stiff.bilinear(&phi, &phi);
    let rhs_spectral = factor * coeffs.iter().enumerate().map(|(i, a)| a * a * spectrum.values[i]).sum::<f64>();
    let mu_index = spectrum.values[index];
    let bound = k as f64 / (2.0 * (n + k) as f64);
    let trace: Vec<f64> = ds
        .geometry
        .iter()
        .map(|g| (0..n + k).map(|j| 1.0 - g.proj_tan[(j, j)]).sum())
        .collect();
    Ok(ConstrainedFamilyReport {
        n,
        k,
        ambient_dim: big_n,
        f_index,
        index,
        conditions: conditions.len(),
        coefficients: coeffs.iter().copied().collect(),
        system_residual,
        lhs,
        rhs,
        rhs_spectral,
        inequality_holds: lhs <= rhs * (1.0 + 1e-9),
        mu_index,
        bound,
        bound_holds: mu_index >= bound,
        mu_2nn: (k == n).then(|| spectrum.values[2 * n * big_n]),
        projection_trace: (
            trace.iter().copied().fold(f64::INFINITY, f64::min),
            trace.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ),
        shrinker_residual: residual,
        convention: CONVENTION_NOTE,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalarStability {
    /// Eigenvalues `c` of `L u = c u`, descending.
    pub values: Vec<f64>,
    /// The same problem in the `-L u = ν u` form, ascending.
    pub spectrum: EigenResult,
    /// Mode most aligned with the scalar mean curvature.
    pub h_index: Option<usize>,
    pub h_alignment: Option<f64>,
    /// Mode most aligned with `<E_j, ν>`, per `j`.
    pub translation_indices: Option<Vec<usize>>,
    pub convention: &'static str,
}

/// Low eigenvalues of `L = ℒ + 1/2 + |A|²` on a hypersurface or planar curve.
pub fn scalar_stability_spectrum(ds: &DiscreteSurface, count: usize) -> Result<ScalarStability> {
    let a2 = require_codim_one(ds)?;
    let q: Vec<f64> = a2.iter().map(|a| 0.5 + a).collect();
    let base = assemble_drift(ds, Weight::Unit)?;
    let op = base.k.add_scaled(-1.0, &potential_mass(ds, &q));
    let qmax = q.iter().copied().fold(0.0, f64::max);
    let spectrum = smallest_generalized(&op, &base.m, &EigenOptions::new(count).with_shift(-qmax - 1.0))?;
    let values = spectrum.values.iter().map(|v| -v).collect();

    // Unit normal from H; identification is skipped where H vanishes.
    let nu: Option<Vec<DVector<f64>>> = ds
        .geometry
        .iter()
        .map(|g| {
            let n = g.h.norm();
            (n > 1e-8).then(|| &g.h / n)
        })
        .collect();
    let align = |s: &[f64]| -> (usize, f64) {
        let sn = base.m.bilinear(s, s).sqrt();
        spectrum
            .vectors
            .iter()
            .map(|u| base.m.bilinear(u, s).abs() / sn.max(1e-300))
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((0, 0.0))
    };
    let (h_index, h_alignment, translation_indices) = match &nu {
        Some(nu) => {
            let h: Vec<f64> = ds.geometry.iter().map(|g| g.h.norm()).collect();
            let (hi, ha) = align(&h);
            let t = (0..ds.ambient_dim)
                .map(|j| align(&nu.iter().map(|v| v[j]).collect::<Vec<_>>()).0)
                .collect();
            (Some(hi), Some(ha), Some(t))
        }
        None => (None, None, None),
    };
    Ok(ScalarStability {
        values,
        spectrum,
        h_index,
        h_alignment,
        translation_indices,
        convention: CONVENTION_NOTE,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FormComparison {
    pub quadratic_form: f64,
    pub direct: f64,
    pub relative: f64,
}

const D1: [(i32, f64); 4] = [(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)];
const D2: [(i32, f64); 5] = [
    (-2, -1.0 / 12.0),
    (-1, 16.0 / 12.0),
    (0, -30.0 / 12.0),
    (1, 16.0 / 12.0),
    (2, -1.0 / 12.0),
];

/// Gradient and Hessian in chart coordinates of a scalar function of the parameter.
fn chart_derivatives(u: &[f64], h: f64, f: &dyn Fn(&[f64]) -> f64) -> (Vec<f64>, DMatrix<f64>) {
    let n = u.len();
    let at = |shifts: &[(usize, i32)]| {
        let mut v = u.to_vec();
        for &(a, s) in shifts {
            v[a] += s as f64 * h;
        }
        f(&v)
    };
    let grad: Vec<f64> = (0..n).map(|a| D1.iter().map(|&(s, c)| c * at(&[(a, s)])).sum::<f64>() / h).collect();
    let mut hess = DMatrix::zeros(n, n);
    for a in 0..n {
        hess[(a, a)] = D2.iter().map(|&(s, c)| c * at(&[(a, s)])).sum::<f64>() / (h * h);
        for b in 0..a {
            let v: f64 = D1
                .iter()
                .flat_map(|&(s, c)| D1.iter().map(move |&(t, d)| (s, t, c * d)))
                .map(|(s, t, cd)| cd * at(&[(a, s), (b, t)]))
                .sum::<f64>()
                / (h * h);
            hess[(a, b)] = v;
            hess[(b, a)] = v;
        }
    }
    (grad, hess)
}

/// Compares the `φ V^perp` quadratic form with `-(4π)^{-n/2} ∫ w L w e^{-f}`,
/// `w = φ <V, ν>`, where `L w` is taken by finite differences in the chart.
pub fn phi_v_direct_check(
    imm: &AnalyticImmersion,
    phi: &(dyn Fn(&DVector<f64>) -> f64 + Sync),
    v: &[f64],
) -> Result<FormComparison> {
    let (n, dim) = (imm.intrinsic_dim(), imm.ambient_dim());
    if dim != n + 1 {
        return Err(Error::WrongCodimension { intrinsic: n, ambient: dim });
    }
    if v.len() != dim {
        return Err(Error::BadDimensions(format!("direction has {} components in R^{dim}", v.len())));
    }
    let v = DVector::from_column_slice(v);
    let samples = imm.sample(imm.nodes_per_axis, DerivativeMode::Auto)?;
    let mut quad = 0.0;
    let mut direct = 0.0;
    for (node, fd) in &samples {
        let chart = imm.chart(&node.point)?;
        let nu0 = &fd.frame.normals[0];
        let h = fd_step(2, chart.scale);
        let w_at = |u: &[f64]| -> f64 {
            let jet = match chart.jet(u, 1, DerivativeMode::Auto) {
                Ok(j) => j,
                Err(_) => return f64::NAN,
            };
            let Ok((frame, ..)) = frame_from_jet(&jet) else {
                return f64::NAN;
            };
            let nu = &frame.normals[0];
            let s = if nu.dot(nu0) < 0.0 { -1.0 } else { 1.0 };
            phi(&jet.x) * s * nu.dot(&v)
        };
        let phi_at = |u: &[f64]| phi(&chart.map.position(u));
        let (wg, wh) = chart_derivatives(&node.point.u, h, &w_at);
        let (pg, _) = chart_derivatives(&node.point.u, h, &phi_at);
        let gi = &fd.metric_inv;
        let jet = &fd.jet;
        let mut lap = 0.0;
        let mut drift = 0.0;
        let mut grad_phi_sq = 0.0;
        for a in 0..n {
            for b in 0..n {
                let gamma_w: f64 = (0..n)
                    .map(|c| {
                        let christoffel: f64 = (0..n).map(|d| gi[(c, d)] * jet.dxx(a, b).dot(jet.dx(d))).sum();
                        christoffel * wg[c]
                    })
                    .sum();
                lap += gi[(a, b)] * (wh[(a, b)] - gamma_w);
                drift += gi[(a, b)] * jet.x.dot(jet.dx(a)) * wg[b];
                grad_phi_sq += gi[(a, b)] * pg[a] * pg[b];
            }
        }
        let w0 = phi(&jet.x) * nu0.dot(&v);
        let l_w = lap - 0.5 * drift + (0.5 + fd.a_norm_sq) * w0;
        let dmu = node.weight * fd.area_element * fd.weight;
        let p0 = phi(&jet.x);
        quad += dmu * (grad_phi_sq - 0.5 * p0 * p0) * nu0.dot(&v).powi(2);
        direct -= dmu * w0 * l_w;
    }
    let norm = gaussian_normalization(n);
    let (quad, direct) = (norm * quad, norm * direct);
    Ok(FormComparison {
        quadratic_form: quad,
        direct,
        relative: (quad - direct).abs() / quad.abs().max(direct.abs()).max(1e-300),
    })
}
