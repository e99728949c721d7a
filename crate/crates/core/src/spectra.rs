//! Gaussian-weighted P1 finite elements for the drift Laplacian and its relatives.

use rayon::prelude::*;
use serde::Serialize;

use crate::discrete::DiscreteSurface;
use crate::error::{Error, Result};
use crate::linalg::eigen::{default_cluster_tol, smallest_generalized, EigenOptions, EigenResult};
use crate::linalg::sparse::{CsrMatrix, TripletBuilder};
use crate::quadrature::SimplexRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weight {
    /// `ℒ = Δ - ∇_{∇f}`.
    Unit,
    /// `ℒ_{|H|²}`: stiffness and mass weighted by `|H|²`.
    MeanCurvatureSq,
    /// `Δ_{g₁}` for `g₁ = e^{-f} g` in two dimensions: unweighted stiffness, Gaussian mass.
    Conformal,
}

#[derive(Debug, Clone)]
pub struct SpectralProblem {
    pub k: CsrMatrix,
    pub m: CsrMatrix,
    pub weight: Weight,
    pub dim: usize,
    pub surface: String,
}

/// Per cell, per quadrature point: `(measure * rule weight, barycentrics, e^{-f})`.
fn cell_points(ds: &DiscreteSurface, c: usize, rule: &SimplexRule) -> Vec<(f64, Vec<f64>, f64)> {
    let cell = &ds.cells[c];
    let measure = ds.cell_geometry(c).measure;
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(bary, w)| {
            let r2: f64 = (0..ds.ambient_dim)
                .map(|d| {
                    let x: f64 = cell.iter().zip(bary).map(|(&v, b)| b * ds.vertices[v][d]).sum();
                    x * x
                })
                .sum();
            (measure * w, bary.clone(), (-r2 / 4.0).exp())
        })
        .collect()
}

fn interpolate(values: &[f64], cell: &[usize], bary: &[f64]) -> f64 {
    cell.iter().zip(bary).map(|(&v, b)| b * values[v]).sum()
}

/// Local stiffness and mass contributions of every cell, assembled in cell order.
fn assemble_with(
    ds: &DiscreteSurface,
    stiffness_weight: impl Fn(&[usize], &[f64], f64) -> f64 + Sync,
    mass_weight: impl Fn(&[usize], &[f64], f64) -> f64 + Sync,
) -> (CsrMatrix, CsrMatrix) {
    let rule = SimplexRule::standard(ds.intrinsic_dim);
    let locals: Vec<(Vec<usize>, Vec<f64>, Vec<f64>)> = (0..ds.cells.len())
        .into_par_iter()
        .map(|c| {
            let cell = &ds.cells[c];
            let q = cell.len();
            let geom = ds.cell_geometry(c);
            let mut kl = vec![0.0; q * q];
            let mut ml = vec![0.0; q * q];
            for (w, bary, gauss) in cell_points(ds, c, &rule) {
                let sk = w * stiffness_weight(cell, &bary, gauss);
                let sm = w * mass_weight(cell, &bary, gauss);
                for a in 0..q {
                    for b in 0..q {
                        kl[a * q + b] += sk * geom.grad[(a, b)];
                        ml[a * q + b] += sm * bary[a] * bary[b];
                    }
                }
            }
            (cell.clone(), kl, ml)
        })
        .collect();
    let n = ds.vertex_count();
    let mut kb = TripletBuilder::new(n);
    let mut mb = TripletBuilder::new(n);
    for (cell, kl, ml) in &locals {
        let q = cell.len();
        for a in 0..q {
            for b in 0..q {
                kb.add(cell[a], cell[b], kl[a * q + b]);
                mb.add(cell[a], cell[b], ml[a * q + b]);
            }
        }
    }
    (kb.build(), mb.build())
}

pub fn assemble_drift(ds: &DiscreteSurface, weight: Weight) -> Result<SpectralProblem> {
    let (k, m) = match weight {
        Weight::Unit => assemble_with(ds, |_, _, g| g, |_, _, g| g),
        Weight::Conformal => {
            if ds.intrinsic_dim != 2 {
                return Err(Error::BadDimensions("the conformal problem needs a surface".into()));
            }
            assemble_with(ds, |_, _, _| 1.0, |_, _, g| g)
        }
        Weight::MeanCurvatureSq => {
            let h2 = ds.h_norm_sq();
            let min = h2.iter().copied().fold(f64::INFINITY, f64::min);
            if min < 1e-10 {
                return Err(Error::VanishingWeight { min });
            }
            let w = |cell: &[usize], bary: &[f64], g: f64| g * interpolate(&h2, cell, bary);
            assemble_with(ds, w, w)
        }
    };
    Ok(SpectralProblem {
        dim: k.dim(),
        k,
        m,
        weight,
        surface: ds.name.clone(),
    })
}

/// Stiffness and mass with both integrands multiplied by a per-vertex weight `q`.
pub fn weighted_pair(ds: &DiscreteSurface, q: &[f64]) -> (CsrMatrix, CsrMatrix) {
    let w = |cell: &[usize], bary: &[f64], g: f64| g * interpolate(q, cell, bary);
    assemble_with(ds, w, w)
}

/// `∫ q φ_a φ_b e^{-f}` for a per-vertex potential `q`.
pub fn potential_mass(ds: &DiscreteSurface, q: &[f64]) -> CsrMatrix {
    assemble_with(ds, |_, _, _| 0.0, |cell, bary, g| g * interpolate(q, cell, bary)).1
}

/// Smallest `count + 1` eigenpairs of `K u = μ M u`.
pub fn drift_spectrum(problem: &SpectralProblem, count: usize) -> Result<EigenResult> {
    if count + 1 > problem.dim {
        return Err(Error::BadDimensions(format!(
            "{} eigenvalues requested from a dimension-{} problem",
            count + 1,
            problem.dim
        )));
    }
    let mut res = smallest_generalized(&problem.k, &problem.m, &EigenOptions::new(count + 1))?;
    res.recluster(default_cluster_tol(res.max_residual()));
    Ok(res)
}

pub fn conformal_spectrum(ds: &DiscreteSurface, count: usize) -> Result<EigenResult> {
    drift_spectrum(&assemble_drift(ds, Weight::Conformal)?, count)
}

#[derive(Debug, Clone, Serialize)]
pub struct KorevaarRow {
    pub k: usize,
    pub mu: f64,
    pub mu_lambda: f64,
    /// `k (1 + γ)`.
    pub budget: f64,
    /// `μ_k λ / (k (1 + γ))`; zero on the `k = 0` row.
    pub ratio: f64,
}

/// Ratios `μ_k λ / (k(1+γ))` with the genus taken from the mesh.
pub fn korevaar_gap(ds: &DiscreteSurface, count: usize, lambda: f64) -> Result<Vec<KorevaarRow>> {
    let genus = ds
        .genus
        .ok_or_else(|| Error::BadDimensions("genus unavailable for this discretization".into()))?;
    let spec = drift_spectrum(&assemble_drift(ds, Weight::Unit)?, count)?;
    Ok(spec
        .values
        .iter()
        .enumerate()
        .map(|(k, &mu)| {
            let budget = (k * (1 + genus)) as f64;
            let mu_lambda = if k == 0 { 0.0 } else { mu * lambda };
            KorevaarRow {
                k,
                mu,
                mu_lambda,
                budget,
                ratio: if k == 0 { 0.0 } else { mu_lambda / budget },
            }
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct MuH2 {
    pub spectrum: EigenResult,
    /// First eigenvalue above the kernel.
    pub mu_h2: f64,
    pub index: usize,
}

pub fn mu_h2_spectrum(ds: &DiscreteSurface, count: usize) -> Result<MuH2> {
    let spectrum = drift_spectrum(&assemble_drift(ds, Weight::MeanCurvatureSq)?, count)?;
    let index = spectrum
        .values
        .iter()
        .position(|&v| v > 1e-6)
        .ok_or_else(|| Error::SolverFailure("no positive eigenvalue among those computed".into()))?;
    Ok(MuH2 {
        mu_h2: spectrum.values[index],
        index,
        spectrum,
    })
}

/// `|K x_i - ½ M x_i| / |M x_i|` for each ambient coordinate with `|M x_i|` not negligible.
pub fn coordinate_eigen_residuals(ds: &DiscreteSurface, problem: &SpectralProblem) -> Vec<Option<f64>> {
    let scale = ds.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    (0..ds.ambient_dim)
        .map(|d| {
            let x = ds.coordinate(d);
            if x.iter().all(|v| v.abs() < 1e-12 * scale) {
                return None;
            }
            let kx = problem.k.mul_vec(&x);
            let mx = problem.m.mul_vec(&x);
            let num: f64 = kx.iter().zip(&mx).map(|(a, b)| (a - 0.5 * b).powi(2)).sum::<f64>().sqrt();
            let den: f64 = mx.iter().map(|b| b * b).sum::<f64>().sqrt();
            Some(num / den)
        })
        .collect()
}
