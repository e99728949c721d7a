//! Finite-difference tensor calculus in a chart.
//!
//! Christoffel symbols come from the chart jet. Covariant derivatives of
//! normal-valued tensors take the normal part of the ambient derivative
//! and correct the tangent indices with Christoffel symbols.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::immersion::chart::{fd_step, Chart, DerivativeMode};
use crate::immersion::fundamental::frame_from_jet;

const D1: [(f64, f64); 4] = [(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)];
const D2: [(f64, f64); 5] = [
    (-2.0, -1.0 / 12.0),
    (-1.0, 16.0 / 12.0),
    (0.0, -30.0 / 12.0),
    (1.0, 16.0 / 12.0),
    (2.0, -1.0 / 12.0),
];

/// Step sizes for first-derivative and direct second-derivative stencils.
#[derive(Debug, Clone, Copy)]
pub struct Steps {
    pub first: f64,
    pub second: f64,
    /// Step for differentiating Christoffel symbols.
    pub curvature: f64,
}

impl Steps {
    /// The default curvature step shrinks with the chart's anisotropy
    /// `sqrt(λ_min(g) / λ_max(g))`, since Christoffel symbols vary on that
    /// scale near a collapsing chart edge.
    pub fn at(chart: &Chart, u: &[f64], fixed: Option<f64>) -> Result<Self> {
        if let Some(h) = fixed {
            return Ok(Steps {
                first: h,
                second: h,
                curvature: h,
            });
        }
        let jet = chart.jet(u, 1, DerivativeMode::Auto)?;
        let n = jet.n;
        let g = DMatrix::from_fn(n, n, |a, b| jet.dx(a).dot(jet.dx(b)));
        let ev = g.symmetric_eigenvalues();
        let (lo, hi) = ev.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &e| (a.min(e), b.max(e)));
        let shrink = (lo / hi).sqrt().clamp(1e-3, 1.0);
        Ok(Steps {
            first: fd_step(1, chart.scale),
            second: fd_step(2, chart.scale),
            curvature: fd_step(1, chart.scale) * shrink,
        })
    }
}

type Flat = Vec<f64>;

fn shift(u: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut v = u.to_vec();
    for &(a, d) in moves {
        v[a] += d;
    }
    v
}

fn axpy(acc: &mut [f64], c: f64, x: &[f64]) {
    for (a, b) in acc.iter_mut().zip(x) {
        *a += c * b;
    }
}

/// First partials of a flattened field, one entry per chart axis.
pub fn partials(u: &[f64], h: f64, f: &dyn Fn(&[f64]) -> Result<Flat>) -> Result<Vec<Flat>> {
    (0..u.len())
        .map(|a| {
            let mut acc: Flat = Vec::new();
            for &(s, c) in &D1 {
                let val = f(&shift(u, &[(a, s * h)]))?;
                if acc.is_empty() {
                    acc = vec![0.0; val.len()];
                }
                axpy(&mut acc, c / h, &val);
            }
            Ok(acc)
        })
        .collect()
}

/// Second partials of a flattened field, index `a * n + b`.
pub fn second_partials(u: &[f64], h: f64, f: &dyn Fn(&[f64]) -> Result<Flat>) -> Result<Vec<Flat>> {
    let n = u.len();
    let mut out = vec![Vec::new(); n * n];
    for a in 0..n {
        let mut acc: Flat = Vec::new();
        for &(s, c) in &D2 {
            let val = f(&shift(u, &[(a, s * h)]))?;
            if acc.is_empty() {
                acc = vec![0.0; val.len()];
            }
            axpy(&mut acc, c / (h * h), &val);
        }
        out[a * n + a] = acc;
        for b in 0..a {
            let mut acc: Flat = Vec::new();
            for &(s, c) in &D1 {
                for &(t, d) in &D1 {
                    let val = f(&shift(u, &[(a, s * h), (b, t * h)]))?;
                    if acc.is_empty() {
                        acc = vec![0.0; val.len()];
                    }
                    axpy(&mut acc, c * d / (h * h), &val);
                }
            }
            out[b * n + a] = acc.clone();
            out[a * n + b] = acc;
        }
    }
    Ok(out)
}

/// `Γ^c_ab = g^{cd} <x_ab, x_d>` at index `(c * n + a) * n + b`.
pub fn christoffel(chart: &Chart, u: &[f64]) -> Result<Flat> {
    let jet = chart.jet(u, 2, DerivativeMode::Auto)?;
    let n = jet.n;
    let g = DMatrix::from_fn(n, n, |a, b| jet.dx(a).dot(jet.dx(b)));
    let gi = g.try_inverse().ok_or(crate::Error::DegenerateImmersion {
        param: u.to_vec(),
        det: 0.0,
    })?;
    let mut gamma = vec![0.0; n * n * n];
    for c in 0..n {
        for a in 0..n {
            for b in 0..n {
                gamma[(c * n + a) * n + b] = (0..n).map(|d| gi[(c, d)] * jet.dxx(a, b).dot(jet.dx(d))).sum();
            }
        }
    }
    Ok(gamma)
}

/// Ricci tensor in chart components from differences of the Christoffel symbols.
pub fn ricci(chart: &Chart, u: &[f64], steps: Steps) -> Result<DMatrix<f64>> {
    let n = u.len();
    let gamma = christoffel(chart, u)?;
    let dgamma = partials(u, steps.curvature, &|v| christoffel(chart, v))?;
    let g = |c: usize, a: usize, b: usize| gamma[(c * n + a) * n + b];
    let dg = |e: usize, c: usize, a: usize, b: usize| dgamma[e][(c * n + a) * n + b];
    Ok(DMatrix::from_fn(n, n, |b, d| {
        let mut r = 0.0;
        for a in 0..n {
            r += dg(a, a, d, b) - dg(d, a, a, b);
            for e in 0..n {
                r += g(a, a, e) * g(e, d, b) - g(a, d, e) * g(e, a, b);
            }
        }
        r
    }))
}

/// Chart Hessian `∂_a∂_b φ - Γ^c_ab ∂_c φ` of a scalar function of the parameter.
pub fn hessian(chart: &Chart, u: &[f64], steps: Steps, phi: &dyn Fn(&[f64]) -> f64) -> Result<DMatrix<f64>> {
    let n = u.len();
    let gamma = christoffel(chart, u)?;
    let grad = partials(u, steps.first, &|v| Ok(vec![phi(v)]))?;
    let hess = second_partials(u, steps.second, &|v| Ok(vec![phi(v)]))?;
    Ok(DMatrix::from_fn(n, n, |a, b| {
        hess[a * n + b][0] - (0..n).map(|c| gamma[(c * n + a) * n + b] * grad[c][0]).sum::<f64>()
    }))
}

pub fn normal_projector(chart: &Chart, u: &[f64]) -> Result<DMatrix<f64>> {
    let jet = chart.jet(u, 1, DerivativeMode::Auto)?;
    let (frame, ..) = frame_from_jet(&jet)?;
    let dim = jet.x.len();
    Ok(DMatrix::identity(dim, dim) - frame.tangent_projector())
}

/// A normal-valued tensor field with `rank` lower chart indices, as
/// `n^rank` ambient vectors in row-major index order.
pub type NormalField<'a> = dyn Fn(&[f64]) -> Result<Vec<DVector<f64>>> + Sync + 'a;

fn flatten(v: &[DVector<f64>]) -> Flat {
    v.iter().flat_map(|x| x.iter().copied()).collect()
}

/// `∇F` with the new index first: entry `(c, a_1..a_r)`.
pub fn covariant_derivative(
    chart: &Chart,
    u: &[f64],
    h: f64,
    rank: usize,
    field: &NormalField,
) -> Result<Vec<DVector<f64>>> {
    let n = u.len();
    let dim = chart.ambient_dim();
    let values = field(u)?;
    let raw = partials(u, h, &|v| Ok(flatten(&field(v)?)))?;
    let pn = normal_projector(chart, u)?;
    let gamma = christoffel(chart, u)?;
    let block = n.pow(rank as u32);
    let mut out = Vec::with_capacity(n * block);
    for c in 0..n {
        for idx in 0..block {
            let d = DVector::from_column_slice(&raw[c][idx * dim..(idx + 1) * dim]);
            let mut t = &pn * d;
            // Digits of idx in base n, most significant first.
            for k in 0..rank {
                let place = n.pow((rank - 1 - k) as u32);
                let ak = (idx / place) % n;
                for e in 0..n {
                    let swapped = idx - ak * place + e * place;
                    t.axpy(-gamma[(e * n + c) * n + ak], &values[swapped], 1.0);
                }
            }
            out.push(t);
        }
    }
    Ok(out)
}

/// `∇F`, `∇∇F` (outer index first) for a normal-valued tensor field.
pub fn covariant_derivatives(
    chart: &Chart,
    u: &[f64],
    steps: Steps,
    rank: usize,
    field: &NormalField,
) -> Result<(Vec<DVector<f64>>, Vec<DVector<f64>>)> {
    let first = covariant_derivative(chart, u, steps.first, rank, field)?;
    let inner = |v: &[f64]| covariant_derivative(chart, v, steps.first, rank, field);
    let second = covariant_derivative(chart, u, steps.first, rank + 1, &inner)?;
    Ok((first, second))
}
