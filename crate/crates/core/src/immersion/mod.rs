//! Immersed curves and surfaces in `R^N` and their pointwise geometry.

pub mod chart;
pub mod fixtures;
pub mod fundamental;

use rayon::prelude::*;
use serde::Serialize;

pub use chart::{Chart, ChartMap, DerivativeMode, Jet};
pub use fundamental::{eval_frame, fundamental_data, Frame, FundamentalData};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// A point of the parameter domain: chart index plus coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPoint {
    pub chart: usize,
    pub u: Vec<f64>,
}

impl ParamPoint {
    pub fn new(chart: usize, u: &[f64]) -> Self {
        Self { chart, u: u.to_vec() }
    }
}

/// A quadrature node: parameter point and parameter-space weight.
#[derive(Debug, Clone)]
pub struct QuadNode {
    pub point: ParamPoint,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct AnalyticImmersion {
    pub name: String,
    pub charts: Vec<Chart>,
    /// Declared genus for closed surfaces.
    pub genus: Option<usize>,
    pub closed: bool,
    /// Gauss–Legendre nodes per parameter axis.
    pub nodes_per_axis: usize,
    /// Typical ambient length; scales the degeneracy threshold.
    pub length_scale: f64,
}

impl AnalyticImmersion {
    pub fn new(name: &str, chart: Chart) -> Self {
        let n = chart.intrinsic_dim();
        Self {
            name: name.to_string(),
            charts: vec![chart],
            genus: None,
            closed: true,
            nodes_per_axis: if n == 1 { 512 } else { 64 },
            length_scale: 1.0,
        }
    }

    pub fn with_genus(mut self, genus: usize) -> Self {
        self.genus = Some(genus);
        self
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes_per_axis = nodes;
        self
    }

    pub fn with_length_scale(mut self, scale: f64) -> Self {
        self.length_scale = scale;
        self
    }

    pub fn open(mut self) -> Self {
        self.closed = false;
        self
    }

    pub fn ambient_dim(&self) -> usize {
        self.charts[0].ambient_dim()
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.charts[0].intrinsic_dim()
    }

    pub fn codimension(&self) -> usize {
        self.ambient_dim() - self.intrinsic_dim()
    }

    /// Lowest closed-form derivative order over all charts.
    pub fn closed_form_order(&self) -> usize {
        self.charts.iter().map(|c| c.map.closed_form_order()).min().unwrap_or(0)
    }

    pub fn chart(&self, p: &ParamPoint) -> Result<&Chart> {
        self.charts.get(p.chart).ok_or_else(|| Error::OutsideChart(p.u.clone()))
    }

    pub fn position(&self, p: &ParamPoint) -> Result<nalgebra::DVector<f64>> {
        Ok(self.chart(p)?.map.position(&p.u))
    }

    /// Tensor Gauss–Legendre nodes with `per_axis` points per axis on every chart.
    pub fn quadrature_nodes(&self, per_axis: usize) -> Vec<QuadNode> {
        let mut out = Vec::new();
        for (ci, chart) in self.charts.iter().enumerate() {
            let rules: Vec<Vec<(f64, f64)>> = (0..chart.intrinsic_dim())
                .map(|d| gauss_legendre(per_axis, chart.lower[d], chart.upper[d]))
                .collect();
            match rules.len() {
                1 => out.extend(rules[0].iter().map(|&(u, w)| QuadNode {
                    point: ParamPoint::new(ci, &[u]),
                    weight: w,
                })),
                _ => {
                    for &(u, wu) in &rules[0] {
                        for &(v, wv) in &rules[1] {
                            out.push(QuadNode {
                                point: ParamPoint::new(ci, &[u, v]),
                                weight: wu * wv,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    /// Fundamental data at every default quadrature node, in node order.
    pub fn sample(&self, per_axis: usize, mode: DerivativeMode) -> Result<Vec<(QuadNode, FundamentalData)>> {
        self.quadrature_nodes(per_axis)
            .into_par_iter()
            .map(|node| {
                let fd = fundamental::fundamental_data_with(self, &node.point, mode)?;
                Ok((node, fd))
            })
            .collect()
    }

    /// `∫ F dA` over the immersion with `per_axis` nodes.
    pub fn integrate<F>(&self, per_axis: usize, integrand: F) -> Result<f64>
    where
        F: Fn(&FundamentalData) -> f64 + Sync,
    {
        let terms: Vec<f64> = self
            .quadrature_nodes(per_axis)
            .into_par_iter()
            .map(|node| {
                let fd = fundamental::fundamental_data_with(self, &node.point, DerivativeMode::Auto)?;
                Ok(node.weight * fd.area_element * integrand(&fd))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(terms.iter().sum())
    }

    /// Like [`integrate`](Self::integrate), also returning the value at half
    /// the resolution so callers can check quadrature convergence.
    pub fn integrate_checked<F>(&self, integrand: F) -> Result<f64>
    where
        F: Fn(&FundamentalData) -> f64 + Sync,
    {
        let fine = self.integrate(self.nodes_per_axis, &integrand)?;
        let coarse = self.integrate((self.nodes_per_axis / 2).max(2), &integrand)?;
        let rel = (fine - coarse).abs() / fine.abs().max(1e-300);
        if rel > 1e-4 && (fine - coarse).abs() > 1e-14 {
            return Err(Error::QuadratureUnderResolved { rel });
        }
        Ok(fine)
    }

    pub fn shrinker_residual(&self) -> Result<ShrinkerResidual> {
        shrinker_residual(self)
    }
}

/// Statistics of `|H - x^perp / 2|` over the quadrature nodes.
#[derive(Debug, Clone, Serialize)]
pub struct ShrinkerResidual {
    pub sup: f64,
    pub mean: f64,
    /// `((4π)^{-n/2} ∫ |H - x^perp/2|^2 e^{-f})^{1/2}`.
    pub l2_gaussian: f64,
    pub nodes: usize,
}

pub fn shrinker_residual(imm: &AnalyticImmersion) -> Result<ShrinkerResidual> {
    let samples = imm.sample(imm.nodes_per_axis, DerivativeMode::Auto)?;
    let n = imm.intrinsic_dim() as i32;
    let mut sup = 0.0f64;
    let mut sum = 0.0;
    let mut l2 = 0.0;
    for (node, fd) in &samples {
        let r = fd.shrinker_defect().norm();
        sup = sup.max(r);
        sum += r;
        l2 += node.weight * fd.area_element * r * r * fd.weight;
    }
    Ok(ShrinkerResidual {
        sup,
        mean: (sum / samples.len() as f64).min(sup),
        l2_gaussian: (l2 * (4.0 * std::f64::consts::PI).powf(-(n as f64) / 2.0)).sqrt(),
        nodes: samples.len(),
    })
}
