//! Residual checks of the pointwise identities satisfied by shrinkers.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::covariant::{covariant_derivatives, hessian, normal_projector, partials, ricci, Steps};
use crate::discrete::{centered_singular_values, DiscreteSurface};
use crate::error::{Error, Result};
use crate::immersion::chart::{Chart, DerivativeMode};
use crate::immersion::fundamental::{fundamental_from_jet, FundamentalData};
use crate::immersion::{AnalyticImmersion, ParamPoint, QuadNode};
use crate::spectra::{assemble_drift, mu_h2_spectrum, Weight};
use crate::stability::{h_field, instability_witness, mass, normal_part, pair, scale_field, ShrinkerGate, StabilityConfig, Verdict};

/// Shrinker residual below which shrinker-only identities are evaluated.
pub const EXACT_SHRINKER_TOL: f64 = 1e-6;
/// Allowed `||x|² - 2n|` for the spherical equivalence.
pub const SPHERE_TOL: f64 = 1e-2;
/// Below this a residual counts as vanishing, above [`LARGE`] as clearly nonzero.
pub const SMALL: f64 = 1e-6;
pub const LARGE: f64 = 1e-2;

pub const J_CONVENTION: &str = "B = J N with J ν₁ = ν₂, J ν₂ = -ν₁ in the positively oriented normal frame";

#[derive(Debug, Clone, Copy)]
pub struct IdentityConfig {
    pub nodes_per_axis: usize,
    pub tol: f64,
    pub simons_tol: f64,
    /// Fixed finite-difference step for every stencil; default steps when `None`.
    pub step: Option<f64>,
    pub gate: ShrinkerGate,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        Self {
            nodes_per_axis: 6,
            tol: 1e-6,
            simons_tol: 1e-5,
            step: None,
            gate: ShrinkerGate::Require,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub name: String,
    pub fixture: String,
    pub sup: f64,
    pub mean: f64,
    pub tol: f64,
    pub pass: bool,
    pub shrinker_only: bool,
    /// Auxiliary measurements, such as an eigenvalue range.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
}

impl IdentityReport {
    fn new(name: &str, fixture: &str, residuals: &[f64], tol: f64, shrinker_only: bool) -> Self {
        let sup = residuals.iter().copied().fold(0.0, f64::max);
        let mean = residuals.iter().sum::<f64>() / residuals.len().max(1) as f64;
        Self {
            name: name.into(),
            fixture: fixture.into(),
            sup,
            mean: mean.min(sup),
            tol,
            pass: sup < tol,
            shrinker_only,
            values: Vec::new(),
        }
    }
}

fn max_abs_mat(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, b| a.max(b.abs()))
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// Sup of `|H - x^perp/2|`, or `NotAShrinker` under [`ShrinkerGate::Require`].
fn gate(imm: &AnalyticImmersion, gate: ShrinkerGate) -> Result<f64> {
    let residual = imm.shrinker_residual()?.sup;
    if gate == ShrinkerGate::Require && residual > EXACT_SHRINKER_TOL {
        return Err(Error::NotAShrinker { residual });
    }
    Ok(residual)
}

fn data_at(imm: &AnalyticImmersion, chart: &Chart, u: &[f64]) -> Result<FundamentalData> {
    fundamental_from_jet(chart.jet(u, 2, DerivativeMode::Auto)?, imm.length_scale)
}

fn nodes(imm: &AnalyticImmersion, per_axis: usize) -> Vec<QuadNode> {
    imm.quadrature_nodes(per_axis)
}

const POINTWISE: [(&str, bool); 8] = [
    ("hess-f-minus-a-h", true),
    ("hess-x2", false),
    ("gauss-ricci", false),
    ("gauss-scalar", false),
    ("hess-f-plus-ric", true),
    ("hess-f-plus-ric-bound", true),
    ("dh", true),
    ("dv-perp", false),
];

struct PointValues {
    residuals: [f64; 8],
    bound_eigs: (f64, f64),
}

fn pointwise_at(imm: &AnalyticImmersion, node: &QuadNode, fixed: Option<f64>) -> Result<PointValues> {
    let chart = imm.chart(&node.point)?;
    let u = &node.point.u;
    let steps = Steps::at(chart, u, fixed)?;
    let fd = data_at(imm, chart, u)?;
    let n = fd.n();
    let dim = fd.ambient_dim();
    let id = DMatrix::<f64>::identity(n, n);
    let pos = |v: &[f64]| chart.map.position(v);

    let hess_f = fd.to_frame(&hessian(chart, u, steps, &|v| pos(v).norm_squared() / 4.0)?);
    let hess_x2 = fd.to_frame(&hessian(chart, u, steps, &|v| pos(v).norm_squared())?);
    let ric = fd.to_frame(&ricci(chart, u, steps)?);
    let a_x = DMatrix::from_fn(n, n, |i, j| fd.a(i, j).dot(&fd.x_perp));

    let shrink = max_abs_mat(&(&hess_f - &fd.a_h - &id * 0.5));
    let hx2 = max_abs_mat(&(&hess_x2 - &id * 2.0 - &a_x * 2.0));
    let gauss = max_abs_mat(&(&ric + &fd.a_sq + &fd.a_h));
    let scalar = (ric.trace() - fd.h.norm_squared() + fd.a_norm_sq).abs();
    let comb = &hess_f + &ric;
    let comb_res = max_abs_mat(&(&comb - &id * 0.5 + &fd.a_sq));
    let sym = (&comb + comb.transpose()) * 0.5;
    let eigs = sym.symmetric_eigenvalues();
    let (lo, hi) = eigs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &e| (a.min(e), b.max(e)));
    let bound = (hi - 0.5).max(0.0);

    let along_frame = |d: &[Vec<f64>], i: usize| {
        let mut out = DVector::zeros(dim);
        for (a, da) in d.iter().enumerate() {
            out.axpy(fd.frame_coeffs[(i, a)], &DVector::from_column_slice(da), 1.0);
        }
        out
    };

    let dh_chart = partials(u, steps.first, &|v| Ok(data_at(imm, chart, v)?.h.as_slice().to_vec()))?;
    let mut dh = 0.0f64;
    for i in 0..n {
        let got = along_frame(&dh_chart, i);
        let mut expect = fd.a_of(&fd.frame.tangents[i], &fd.x_tan) * -0.5;
        for j in 0..n {
            expect.axpy(-fd.h.dot(fd.a(i, j)), &fd.frame.tangents[j], 1.0);
        }
        dh = dh.max(max_abs(&(got - expect)));
    }

    let pn = fd.proj_normal();
    let mut dv = 0.0f64;
    for alpha in 0..dim {
        let e = DVector::from_fn(dim, |k, _| if k == alpha { 1.0 } else { 0.0 });
        let d = partials(u, steps.first, &|v| Ok((normal_projector(chart, v)? * &e).as_slice().to_vec()))?;
        for i in 0..n {
            let got = &pn * along_frame(&d, i);
            let expect = -fd.a_of(&fd.frame.tangents[i], &e);
            dv = dv.max(max_abs(&(got - expect)));
        }
    }

    Ok(PointValues {
        residuals: [shrink, hx2, gauss, scalar, comb_res, bound, dh, dv],
        bound_eigs: (lo, hi),
    })
}

/// Hessian, Gauss, derivative and inequality identities at the quadrature nodes.
///
/// Under [`ShrinkerGate::Contrast`] non-shrinkers are accepted and the
/// shrinker-only identities are expected to fail.
pub fn check_pointwise_identities(imm: &AnalyticImmersion, cfg: &IdentityConfig) -> Result<Vec<IdentityReport>> {
    gate(imm, cfg.gate)?;
    let values: Vec<PointValues> = nodes(imm, cfg.nodes_per_axis)
        .par_iter()
        .map(|node| pointwise_at(imm, node, cfg.step))
        .collect::<Result<_>>()?;
    Ok(POINTWISE
        .iter()
        .enumerate()
        .map(|(k, &(name, shrinker_only))| {
            let r: Vec<f64> = values.iter().map(|v| v.residuals[k]).collect();
            let mut report = IdentityReport::new(name, &imm.name, &r, cfg.tol, shrinker_only);
            if name == "hess-f-plus-ric-bound" {
                let lo = values.iter().map(|v| v.bound_eigs.0).fold(f64::INFINITY, f64::min);
                let hi = values.iter().map(|v| v.bound_eigs.1).fold(f64::NEG_INFINITY, f64::max);
                report.values = vec![lo, hi];
            }
            report
        })
        .collect())
}

/// `L F` in chart components for a normal-valued tensor field of the given rank.
fn l_operator(
    chart: &Chart,
    u: &[f64],
    steps: Steps,
    fd: &FundamentalData,
    rank: usize,
    field: &(dyn Fn(&[f64]) -> Result<Vec<DVector<f64>>> + Sync),
) -> Result<Vec<DVector<f64>>> {
    let n = fd.n();
    let (t1, t2) = covariant_derivatives(chart, u, steps, rank, field)?;
    let values = field(u)?;
    let gi = &fd.metric_inv;
    let xt: Vec<f64> = (0..n)
        .map(|c| (0..n).map(|d| gi[(c, d)] * fd.jet.x.dot(fd.jet.dx(d))).sum())
        .collect();
    let block = n.pow(rank as u32);
    Ok((0..block)
        .map(|idx| {
            let mut out = &values[idx] * 0.5;
            for c in 0..n {
                for d in 0..n {
                    out.axpy(gi[(d, c)], &t2[(d * n + c) * block + idx], 1.0);
                }
                out.axpy(-0.5 * xt[c], &t1[c * block + idx], 1.0);
            }
            for a in &fd.second_form {
                out.axpy(values[idx].dot(a), a, 1.0);
            }
            out
        })
        .collect())
}

fn simons_at(imm: &AnalyticImmersion, node: &QuadNode, fixed: Option<f64>) -> Result<[f64; 3]> {
    let chart = imm.chart(&node.point)?;
    let u = &node.point.u;
    let steps = Steps::at(chart, u, fixed)?;
    let fd = data_at(imm, chart, u)?;
    let (n, dim) = (fd.n(), fd.ambient_dim());

    let h_field = |v: &[f64]| Ok(vec![data_at(imm, chart, v)?.h]);
    let lh = l_operator(chart, u, steps, &fd, 0, &h_field)?;
    let r_h = max_abs(&(&lh[0] - &fd.h));

    let mut r_v = 0.0f64;
    for alpha in 0..dim {
        let e = DVector::from_fn(dim, |k, _| if k == alpha { 1.0 } else { 0.0 });
        let v_field = |v: &[f64]| Ok(vec![normal_projector(chart, v)? * &e]);
        let lv = l_operator(chart, u, steps, &fd, 0, &v_field)?;
        r_v = r_v.max(max_abs(&(&lv[0] - (&fd.proj_normal() * &e) * 0.5)));
    }

    let a_field = |v: &[f64]| {
        let jet = chart.jet(v, 2, DerivativeMode::Auto)?;
        let pn = normal_projector(chart, v)?;
        Ok((0..n * n).map(|k| &pn * &jet.d2[k]).collect())
    };
    let la_chart = l_operator(chart, u, steps, &fd, 2, &a_field)?;
    let c = &fd.frame_coeffs;
    let a = |i: usize, j: usize| fd.a(i, j);
    let mut r_a = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let mut la = DVector::zeros(dim);
            for p in 0..n {
                for q in 0..n {
                    la.axpy(c[(i, p)] * c[(j, q)], &la_chart[p * n + q], 1.0);
                }
            }
            let mut rhs = a(i, j).clone();
            for k in 0..n {
                for l in 0..n {
                    rhs.axpy(2.0 * a(j, l).dot(a(i, k)), a(l, k), 1.0);
                }
            }
            for m in 0..n {
                for l in 0..n {
                    rhs.axpy(-a(m, l).dot(a(i, l)), a(j, m), 1.0);
                    rhs.axpy(-a(j, l).dot(a(m, l)), a(m, i), 1.0);
                }
            }
            r_a = r_a.max(max_abs(&(la - rhs)));
        }
    }
    Ok([r_h, r_v, r_a])
}

/// Residuals of `L H = H`, `L V^perp = V^perp/2` (every basis `V`) and the
/// equation for `L A`.
pub fn check_simons_equations(imm: &AnalyticImmersion, cfg: &IdentityConfig) -> Result<Vec<IdentityReport>> {
    let available = imm.closed_form_order();
    if available < 2 {
        return Err(Error::DerivativeOrderUnavailable { needed: 2, available });
    }
    gate(imm, cfg.gate)?;
    let values: Vec<[f64; 3]> = nodes(imm, cfg.nodes_per_axis)
        .par_iter()
        .map(|node| simons_at(imm, node, cfg.step))
        .collect::<Result<_>>()?;
    Ok(["simons-lh", "simons-lv", "simons-la"]
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let r: Vec<f64> = values.iter().map(|v| v[k]).collect();
            IdentityReport::new(name, &imm.name, &r, cfg.simons_tol, true)
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct SphericalEquivalence {
    /// Largest `||x|² - 2n|` over the nodes.
    pub radius_deviation: f64,
    pub shrinker: IdentityReport,
    pub minimal_in_sphere: IdentityReport,
    pub a_h: IdentityReport,
    /// All three pass or all three fail.
    pub consistent: bool,
}

/// Shrinker equation, minimality in the sphere and `A^H = -g/2` on a surface
/// lying in the sphere of radius `sqrt(2n)`.
pub fn spherical_equivalence(imm: &AnalyticImmersion, cfg: &IdentityConfig) -> Result<SphericalEquivalence> {
    let samples = imm.sample(cfg.nodes_per_axis, DerivativeMode::Auto)?;
    let n = imm.intrinsic_dim() as f64;
    let r2: Vec<f64> = samples.iter().map(|(_, fd)| fd.jet.x.norm_squared()).collect();
    let deviation = r2.iter().map(|r| (r - 2.0 * n).abs()).fold(0.0, f64::max);
    let spread = r2.iter().copied().fold(f64::NEG_INFINITY, f64::max) - r2.iter().copied().fold(f64::INFINITY, f64::min);
    if deviation > SPHERE_TOL || spread > SMALL {
        return Err(Error::NotSpherical(deviation.max(spread)));
    }
    let mut ra = Vec::new();
    let mut rb = Vec::new();
    let mut rc = Vec::new();
    for (_, fd) in &samples {
        ra.push(fd.shrinker_defect().norm());
        let xhat = fd.jet.x.normalize();
        rb.push((&fd.h - &xhat * fd.h.dot(&xhat)).norm());
        let k = fd.n();
        rc.push(max_abs_mat(&(&fd.a_h + DMatrix::<f64>::identity(k, k) * 0.5)));
    }
    let shrinker = IdentityReport::new("sphere-shrinker", &imm.name, &ra, cfg.tol, false);
    let minimal_in_sphere = IdentityReport::new("sphere-minimal", &imm.name, &rb, cfg.tol, false);
    let a_h = IdentityReport::new("sphere-a-h", &imm.name, &rc, cfg.tol, false);
    let consistent = shrinker.pass == minimal_in_sphere.pass && shrinker.pass == a_h.pass;
    Ok(SphericalEquivalence {
        radius_deviation: deviation,
        shrinker,
        minimal_in_sphere,
        a_h,
        consistent,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum JOrientation {
    #[default]
    Positive,
    /// `J` replaced by `-J`.
    Negative,
}

fn binormal(fd: &FundamentalData, orientation: JOrientation) -> Result<(DVector<f64>, DVector<f64>)> {
    let hn = fd.h.norm();
    if hn < 1e-8 {
        return Err(Error::VanishingH(hn));
    }
    let nvec = &fd.h / hn;
    let (n1, n2) = (&fd.frame.normals[0], &fd.frame.normals[1]);
    let (c1, c2) = (nvec.dot(n1), nvec.dot(n2));
    let b = n2 * c1 - n1 * c2;
    let sign = if orientation == JOrientation::Positive { 1.0 } else { -1.0 };
    Ok((nvec, b * sign))
}

fn require_codim_two(imm: &AnalyticImmersion) -> Result<()> {
    if imm.codimension() != 2 {
        return Err(Error::BadDimensions(format!(
            "codimension two required, got {} in R^{}",
            imm.intrinsic_dim(),
            imm.ambient_dim()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct Torsion {
    /// `<∇^perp_V N, B>` by differentiating `N = H/|H|`.
    pub derivative: f64,
    /// `-<A(x^T, V), B> / (2|H|)`, only on shrinkers.
    pub closed_form: Option<f64>,
    pub residual: Option<f64>,
    pub h_norm: f64,
    pub orientation: JOrientation,
    pub convention: &'static str,
}

/// Normal torsion of a codimension-two surface along a tangent vector `v`
/// (ambient components, projected to the tangent space).
pub fn frenet_torsion(
    imm: &AnalyticImmersion,
    p: &ParamPoint,
    v: &[f64],
    orientation: JOrientation,
    fixed_step: Option<f64>,
) -> Result<Torsion> {
    require_codim_two(imm)?;
    if v.len() != imm.ambient_dim() {
        return Err(Error::BadDimensions(format!("vector has {} components", v.len())));
    }
    let chart = imm.chart(p)?;
    let fd = data_at(imm, chart, &p.u)?;
    let (_, b) = binormal(&fd, orientation)?;
    let v = &fd.proj_tan * DVector::from_column_slice(v);
    let n = fd.n();
    let coeffs: Vec<f64> = (0..n)
        .map(|a| (0..n).map(|c| fd.metric_inv[(a, c)] * v.dot(fd.jet.dx(c))).sum())
        .collect();
    let steps = Steps::at(chart, &p.u, fixed_step)?;
    let dn = partials(&p.u, steps.first, &|w| {
        let h = data_at(imm, chart, w)?.h;
        Ok((&h / h.norm()).as_slice().to_vec())
    })?;
    let mut dv = DVector::zeros(imm.ambient_dim());
    for (a, d) in dn.iter().enumerate() {
        dv.axpy(coeffs[a], &DVector::from_column_slice(d), 1.0);
    }
    let derivative = dv.dot(&b);
    let h_norm = fd.h.norm();
    let closed_form = if imm.shrinker_residual()?.sup <= EXACT_SHRINKER_TOL {
        Some(-0.5 * fd.a_of(&fd.x_tan, &v).dot(&b) / h_norm)
    } else {
        None
    };
    Ok(Torsion {
        derivative,
        closed_form,
        residual: closed_form.map(|c| (c - derivative).abs()),
        h_norm,
        orientation,
        convention: J_CONVENTION,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BinormalReport {
    /// Pointwise `|<A, B>|` (Frobenius over the frame).
    pub a_b: IdentityReport,
    /// Smallest centered singular value of the sampled positions.
    pub hyperplane_residual: f64,
    pub flat: bool,
    pub in_hyperplane: bool,
    /// Both below [`SMALL`] or both above [`LARGE`].
    pub consistent: bool,
}

pub fn binormal_flatness(imm: &AnalyticImmersion, cfg: &IdentityConfig) -> Result<BinormalReport> {
    require_codim_two(imm)?;
    let samples = imm.sample(cfg.nodes_per_axis, DerivativeMode::Auto)?;
    let mut ab = Vec::with_capacity(samples.len());
    for (_, fd) in &samples {
        let (_, b) = binormal(fd, JOrientation::Positive)?;
        ab.push(fd.second_form.iter().map(|a| a.dot(&b).powi(2)).sum::<f64>().sqrt());
    }
    let a_b = IdentityReport::new("binormal-a-b", &imm.name, &ab, SMALL, false);
    let points: Vec<DVector<f64>> = nodes(imm, 2 * cfg.nodes_per_axis)
        .iter()
        .map(|node| imm.position(&node.point))
        .collect::<Result<_>>()?;
    let hyperplane_residual = centered_singular_values(&points).last().copied().unwrap_or(0.0);
    let flat = a_b.sup < SMALL;
    let in_hyperplane = hyperplane_residual < SMALL;
    let consistent = (flat && in_hyperplane) || (a_b.sup > LARGE && hyperplane_residual > LARGE);
    Ok(BinormalReport {
        a_b,
        hyperplane_residual,
        flat,
        in_hyperplane,
        consistent,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct H212Entry {
    /// Rayleigh quotient of `φ` for `ℒ_{|H|²}`.
    pub rayleigh: f64,
    /// Least-squares `V` with `V^perp ≈ φ H`.
    pub v: Vec<f64>,
    /// `|φH - V^perp| / |φH|` in the Gaussian `L²` norm.
    pub misfit: f64,
    /// `|∇^perp_{∇φ} N| / |∇φ|` in the Gaussian `L²` norm.
    pub normal_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct H212Report {
    pub surface: String,
    pub mu_h2: f64,
    pub witness_verdict: Verdict,
    pub entries: Vec<H212Entry>,
}

/// Edge differences of `N` projected onto the normals orthogonal to `N`,
/// averaged over the edge end points.
fn normal_connection_residual(ds: &DiscreteSurface, nfield: &[DVector<f64>], phi: &[f64]) -> f64 {
    let dim = ds.ambient_dim;
    let q: Vec<DMatrix<f64>> = ds
        .geometry
        .iter()
        .zip(nfield)
        .map(|(g, nv)| DMatrix::identity(dim, dim) - &g.proj_tan - nv * nv.transpose())
        .collect();
    let mut num = 0.0;
    let mut den = 0.0;
    for (c, cell) in ds.cells.iter().enumerate() {
        let v0 = cell[0];
        let edges: Vec<DVector<f64>> = cell[1..].iter().map(|&v| &ds.vertices[v] - &ds.vertices[v0]).collect();
        let k = edges.len();
        let gram = DMatrix::from_fn(k, k, |i, j| edges[i].dot(&edges[j]));
        let Some(gi) = gram.try_inverse() else { continue };
        let dphi = DVector::from_fn(k, |i, _| phi[cell[i + 1]] - phi[v0]);
        let coef = gi * dphi;
        let mut grad = DVector::zeros(dim);
        let mut dn = DVector::zeros(dim);
        for (i, &v) in cell[1..].iter().enumerate() {
            grad.axpy(coef[i], &edges[i], 1.0);
            let d = (&q[v] + &q[v0]) * (&nfield[v] - &nfield[v0]) * 0.5;
            dn.axpy(coef[i], &d, 1.0);
        }
        let centroid = cell.iter().fold(DVector::zeros(dim), |acc, &v| acc + &ds.vertices[v]) / cell.len() as f64;
        let w = ds.cell_geometry(c).measure * (-centroid.norm_squared() / 4.0).exp();
        num += w * dn.norm_squared();
        den += w * grad.norm_squared();
    }
    (num / den.max(1e-300)).sqrt()
}

/// Borderline diagnostics for surfaces with `μ_{|H|²} = 1/2`: for each
/// candidate `φ` (the `1/2`-eigenfunctions by default) the translation fit
/// of `φH` and the size of `∇^perp_{∇φ} N`.
pub fn h212_diagnostics(ds: &DiscreteSurface, phis: Option<&[Vec<f64>]>, cfg: &StabilityConfig) -> Result<H212Report> {
    let mh = mu_h2_spectrum(ds, 8)?;
    if (mh.mu_h2 - 0.5).abs() > cfg.mu_tol {
        return Err(Error::NotBorderline(mh.mu_h2));
    }
    let witness_verdict = instability_witness(ds, cfg)?.verdict;
    let candidates: Vec<Vec<f64>> = match phis {
        Some(p) => p.to_vec(),
        None => mh
            .spectrum
            .values
            .iter()
            .zip(&mh.spectrum.vectors)
            .filter(|(v, _)| (*v - 0.5).abs() <= cfg.mu_tol)
            .map(|(_, u)| u.clone())
            .collect(),
    };
    let problem = assemble_drift(ds, Weight::MeanCurvatureSq)?;
    let m = mass(ds);
    let h = h_field(ds);
    let nfield: Vec<DVector<f64>> = h
        .iter()
        .map(|x| {
            let r = x.norm();
            if r < 1e-8 {
                Err(Error::VanishingH(r))
            } else {
                Ok(x / r)
            }
        })
        .collect::<Result<_>>()?;
    let dim = ds.ambient_dim;
    let trans: Vec<Vec<DVector<f64>>> = (0..dim)
        .map(|j| normal_part(ds, &DVector::from_fn(dim, |i, _| if i == j { 1.0 } else { 0.0 })))
        .collect();
    let gram = DMatrix::from_fn(dim, dim, |i, j| pair(&m, &trans[i], &trans[j]));
    let mut entries = Vec::new();
    for phi in &candidates {
        if phi.len() != ds.vertex_count() {
            return Err(Error::BadDimensions(format!("φ has {} values", phi.len())));
        }
        let denom = problem.m.bilinear(phi, phi);
        if denom <= 0.0 || !denom.is_finite() {
            return Err(Error::NotAnEigenfunction("φ vanishes identically".into()));
        }
        let rayleigh = problem.k.bilinear(phi, phi) / denom;
        if (rayleigh - 0.5).abs() > cfg.mu_tol {
            return Err(Error::NotAnEigenfunction(format!("Rayleigh quotient {rayleigh} is not 1/2")));
        }
        let phi_h = scale_field(phi, &h);
        let rhs = DVector::from_fn(dim, |i, _| pair(&m, &trans[i], &phi_h));
        let v = gram
            .clone()
            .svd(true, true)
            .solve(&rhs, 1e-12 * gram.norm())
            .map_err(|e| Error::SolverFailure(e.to_string()))?;
        let vperp = normal_part(ds, &v);
        let diff: Vec<DVector<f64>> = phi_h.iter().zip(&vperp).map(|(a, b)| a - b).collect();
        let misfit = (pair(&m, &diff, &diff) / pair(&m, &phi_h, &phi_h)).sqrt();
        entries.push(H212Entry {
            rayleigh,
            v: v.iter().copied().collect(),
            misfit,
            normal_residual: normal_connection_residual(ds, &nfield, phi),
        });
    }
    Ok(H212Report {
        surface: ds.name.clone(),
        mu_h2: mh.mu_h2,
        witness_verdict,
        entries,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionTrace {
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
    pub holds: bool,
}

/// `Σ_{i ≤ n+k} |Π^perp(E_i)|²` for the subspace spanned by the columns of `basis`.
pub fn projection_trace(basis: &DMatrix<f64>, k: usize) -> Result<ProjectionTrace> {
    let (dim, n) = basis.shape();
    if n == 0 || k == 0 || n + k > dim {
        return Err(Error::BadDimensions(format!("n = {n}, k = {k}, N = {dim}")));
    }
    let qr = basis.clone().qr();
    let r = qr.r();
    let scale = basis.norm().max(1e-300);
    if (0..n).any(|i| r[(i, i)].abs() < 1e-10 * scale) {
        return Err(Error::BadDimensions("basis is rank deficient".into()));
    }
    let q = qr.q();
    let value: f64 = (0..n + k).map(|i| 1.0 - q.row(i).norm_squared()).sum();
    let (lower, upper) = (k as f64, (n + k) as f64);
    Ok(ProjectionTrace {
        lower,
        value,
        upper,
        holds: value >= lower - 1e-12 && value <= upper + 1e-12,
    })
}
