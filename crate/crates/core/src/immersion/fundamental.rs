//! Frames, second fundamental form and mean curvature at a parameter point.

use nalgebra::{DMatrix, DVector};

use super::chart::{DerivativeMode, Jet};
use super::{AnalyticImmersion, ParamPoint};
use crate::error::{Error, Result};

/// Orthonormal tangent and normal bases at a point.
#[derive(Debug, Clone)]
pub struct Frame {
    pub x: DVector<f64>,
    pub tangents: Vec<DVector<f64>>,
    pub normals: Vec<DVector<f64>>,
}

impl Frame {
    /// Largest deviation of the combined basis from orthonormality.
    pub fn orthonormality_defect(&self) -> f64 {
        let all: Vec<&DVector<f64>> = self.tangents.iter().chain(&self.normals).collect();
        let mut worst = 0.0f64;
        for (i, a) in all.iter().enumerate() {
            for (j, b) in all.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.dot(b) - target).abs());
            }
        }
        worst
    }

    pub fn tangent_projector(&self) -> DMatrix<f64> {
        let n = self.x.len();
        let mut p = DMatrix::zeros(n, n);
        for e in &self.tangents {
            p += e * e.transpose();
        }
        p
    }
}

/// Pointwise package of induced geometry.
#[derive(Debug, Clone)]
pub struct FundamentalData {
    pub frame: Frame,
    pub jet: Jet,
    /// Chart metric `g_ab = <x_a, x_b>`.
    pub metric: DMatrix<f64>,
    pub metric_inv: DMatrix<f64>,
    /// `e_i = Σ_a C[i, a] x_a`.
    pub frame_coeffs: DMatrix<f64>,
    pub area_element: f64,
    /// `A(e_i, e_j)` as ambient normal vectors, index `i * n + j`.
    pub second_form: Vec<DVector<f64>>,
    pub h: DVector<f64>,
    pub x_tan: DVector<f64>,
    pub x_perp: DVector<f64>,
    pub f: f64,
    pub weight: f64,
    pub a_norm_sq: f64,
    /// `A^H_ij = <A_ij, H>` in the orthonormal frame.
    pub a_h: DMatrix<f64>,
    /// `A²_ij = Σ_k <A_ik, A_kj>` in the orthonormal frame.
    pub a_sq: DMatrix<f64>,
    pub proj_tan: DMatrix<f64>,
}

impl FundamentalData {
    pub fn n(&self) -> usize {
        self.frame.tangents.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.x.len()
    }

    pub fn a(&self, i: usize, j: usize) -> &DVector<f64> {
        &self.second_form[i * self.n() + j]
    }

    /// Components `A_ijα = <A_ij, ν_α>`, one matrix per normal.
    pub fn a_components(&self) -> Vec<DMatrix<f64>> {
        let n = self.n();
        self.frame
            .normals
            .iter()
            .map(|nu| DMatrix::from_fn(n, n, |i, j| self.a(i, j).dot(nu)))
            .collect()
    }

    pub fn proj_normal(&self) -> DMatrix<f64> {
        DMatrix::identity(self.ambient_dim(), self.ambient_dim()) - &self.proj_tan
    }

    /// `A(X, Y)` for ambient vectors, through their tangential parts.
    pub fn a_of(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let n = self.n();
        let xs: Vec<f64> = self.frame.tangents.iter().map(|e| e.dot(x)).collect();
        let ys: Vec<f64> = self.frame.tangents.iter().map(|e| e.dot(y)).collect();
        let mut out = DVector::zeros(self.ambient_dim());
        for i in 0..n {
            for j in 0..n {
                out.axpy(xs[i] * ys[j], self.a(i, j), 1.0);
            }
        }
        out
    }

    /// `H - x^perp / 2`.
    pub fn shrinker_defect(&self) -> DVector<f64> {
        &self.h - &self.x_perp * 0.5
    }

    /// Converts a chart bilinear form to the orthonormal frame.
    pub fn to_frame(&self, chart_form: &DMatrix<f64>) -> DMatrix<f64> {
        &self.frame_coeffs * chart_form * self.frame_coeffs.transpose()
    }
}

/// Normal completion: Gram–Schmidt of the ambient basis in index order,
/// skipping near-parallel candidates and falling back to the best remaining.
/// The last normal is oriented so that `det[e_1..e_n, ν_1..ν_k] > 0`.
fn complete_normals(tangents: &[DVector<f64>], dim: usize) -> Vec<DVector<f64>> {
    let need = dim - tangents.len();
    let mut basis: Vec<DVector<f64>> = tangents.to_vec();
    let mut normals = Vec::with_capacity(need);
    let residual = |basis: &[DVector<f64>], k: usize| {
        let mut v = DVector::zeros(dim);
        v[k] = 1.0;
        for _ in 0..2 {
            for b in basis {
                let c = b.dot(&v);
                v.axpy(-c, b, 1.0);
            }
        }
        v
    };
    for k in 0..dim {
        if normals.len() == need {
            break;
        }
        let v = residual(&basis, k);
        let nrm = v.norm();
        if nrm > 1e-3 {
            let v = v / nrm;
            basis.push(v.clone());
            normals.push(v);
        }
    }
    while normals.len() < need {
        let (v, nrm) = (0..dim)
            .map(|k| {
                let v = residual(&basis, k);
                let nrm = v.norm();
                (v, nrm)
            })
            .fold((DVector::zeros(dim), -1.0), |best, c| if c.1 > best.1 { c } else { best });
        let v = v / nrm;
        basis.push(v.clone());
        normals.push(v);
    }
    if !normals.is_empty() {
        let cols: Vec<DVector<f64>> = tangents.iter().chain(&normals).cloned().collect();
        if DMatrix::from_columns(&cols).determinant() < 0.0 {
            let last = normals.len() - 1;
            normals[last] *= -1.0;
        }
    }
    normals
}

pub(crate) fn frame_from_jet(jet: &Jet) -> Result<(Frame, DMatrix<f64>, DMatrix<f64>, f64)> {
    let n = jet.n;
    let dim = jet.x.len();
    let metric = DMatrix::from_fn(n, n, |a, b| jet.dx(a).dot(jet.dx(b)));
    let det = metric.determinant();
    let chol = metric.clone().cholesky().ok_or(Error::DegenerateImmersion {
        param: Vec::new(),
        det,
    })?;
    let linv = chol
        .l()
        .try_inverse()
        .ok_or(Error::DegenerateImmersion { param: Vec::new(), det })?;
    let tangents: Vec<DVector<f64>> = (0..n)
        .map(|i| {
            let mut e = DVector::zeros(dim);
            for a in 0..n {
                e.axpy(linv[(i, a)], jet.dx(a), 1.0);
            }
            e
        })
        .collect();
    let normals = complete_normals(&tangents, dim);
    Ok((
        Frame {
            x: jet.x.clone(),
            tangents,
            normals,
        },
        metric,
        linv,
        det,
    ))
}

/// Builds the full pointwise package from a jet of order at least two.
pub fn fundamental_from_jet(jet: Jet, length_scale: f64) -> Result<FundamentalData> {
    let n = jet.n;
    let dim = jet.x.len();
    let (frame, metric, coeffs, det) = frame_from_jet(&jet)?;
    if det <= 1e-12 * length_scale.powi(4) || !det.is_finite() {
        return Err(Error::DegenerateImmersion { param: Vec::new(), det });
    }
    let metric_inv = metric
        .clone()
        .try_inverse()
        .ok_or(Error::DegenerateImmersion { param: Vec::new(), det })?;
    let proj_tan = frame.tangent_projector();
    let proj_normal = DMatrix::identity(dim, dim) - &proj_tan;
    let chart_a: Vec<DVector<f64>> = (0..n * n).map(|k| &proj_normal * &jet.d2[k]).collect();
    let mut second_form = vec![DVector::zeros(dim); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut v = DVector::zeros(dim);
            for a in 0..n {
                for b in 0..n {
                    v.axpy(coeffs[(i, a)] * coeffs[(j, b)], &chart_a[a * n + b], 1.0);
                }
            }
            second_form[i * n + j] = v;
        }
    }
    let mut h = DVector::zeros(dim);
    for i in 0..n {
        h -= &second_form[i * n + i];
    }
    let x_tan = &proj_tan * &jet.x;
    let x_perp = &jet.x - &x_tan;
    let f = jet.x.norm_squared() / 4.0;
    let a_norm_sq = second_form.iter().map(|v| v.norm_squared()).sum();
    let a_h = DMatrix::from_fn(n, n, |i, j| second_form[i * n + j].dot(&h));
    let a_sq = DMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| second_form[i * n + k].dot(&second_form[k * n + j])).sum()
    });
    Ok(FundamentalData {
        frame,
        metric,
        metric_inv,
        frame_coeffs: coeffs,
        area_element: det.sqrt(),
        second_form,
        h,
        x_tan,
        x_perp,
        f,
        weight: (-f).exp(),
        a_norm_sq,
        a_h,
        a_sq,
        proj_tan,
        jet,
    })
}

fn attach_param(err: Error, p: &ParamPoint) -> Error {
    match err {
        Error::DegenerateImmersion { det, .. } => Error::DegenerateImmersion { param: p.u.clone(), det },
        e => e,
    }
}

fn check_inside(imm: &AnalyticImmersion, p: &ParamPoint) -> Result<()> {
    if imm.chart(p)?.contains(&p.u) {
        Ok(())
    } else {
        Err(Error::OutsideChart(p.u.clone()))
    }
}

/// Orthonormal frame at a parameter point.
pub fn eval_frame(imm: &AnalyticImmersion, p: &ParamPoint) -> Result<Frame> {
    check_inside(imm, p)?;
    let jet = imm.chart(p)?.jet(&p.u, 1, DerivativeMode::Auto)?;
    let (frame, _, _, det) = frame_from_jet(&jet).map_err(|e| attach_param(e, p))?;
    if det <= 1e-12 * imm.length_scale.powi(4) {
        return Err(Error::DegenerateImmersion { param: p.u.clone(), det });
    }
    Ok(frame)
}

/// Fundamental data at a parameter point using closed-form derivatives when available.
pub fn fundamental_data(imm: &AnalyticImmersion, p: &ParamPoint) -> Result<FundamentalData> {
    check_inside(imm, p)?;
    fundamental_data_with(imm, p, DerivativeMode::Auto)
}

/// As [`fundamental_data`] without the range check, with an explicit derivative mode.
pub fn fundamental_data_with(imm: &AnalyticImmersion, p: &ParamPoint, mode: DerivativeMode) -> Result<FundamentalData> {
    let jet = imm.chart(p)?.jet(&p.u, 2, mode)?;
    fundamental_from_jet(jet, imm.length_scale).map_err(|e| attach_param(e, p))
}
