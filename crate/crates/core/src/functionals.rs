//! Gaussian area `F`, entropy `λ`, Gaussian Willmore `W` and related bounds.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::discrete::{Cloud, DiscreteSurface};
use crate::error::{Error, Result};
use crate::immersion::AnalyticImmersion;
use crate::optimize::{brent_minimize, brent_root, nelder_mead, NelderMeadConfig};
use crate::quadrature::{gauss_legendre, SimplexRule};

/// Anything the Gaussian functionals can integrate over.
#[derive(Debug, Clone, Copy)]
pub enum Surface<'a> {
    Analytic(&'a AnalyticImmersion),
    Discrete(&'a DiscreteSurface),
}

impl<'a> From<&'a AnalyticImmersion> for Surface<'a> {
    fn from(s: &'a AnalyticImmersion) -> Self {
        Surface::Analytic(s)
    }
}

impl<'a> From<&'a DiscreteSurface> for Surface<'a> {
    fn from(s: &'a DiscreteSurface) -> Self {
        Surface::Discrete(s)
    }
}

impl Surface<'_> {
    pub fn intrinsic_dim(&self) -> usize {
        match self {
            Surface::Analytic(s) => s.intrinsic_dim(),
            Surface::Discrete(s) => s.intrinsic_dim,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Surface::Analytic(s) => s.ambient_dim(),
            Surface::Discrete(s) => s.ambient_dim,
        }
    }

    /// Default cloud and a coarser or lower-order companion.
    pub fn clouds(&self) -> Result<(Cloud, Cloud)> {
        match self {
            Surface::Analytic(s) => Ok((
                Cloud::from_immersion(s, s.nodes_per_axis)?,
                Cloud::from_immersion(s, (s.nodes_per_axis / 2).max(2))?,
            )),
            Surface::Discrete(s) => Ok((
                Cloud::from_discrete(s, &SimplexRule::standard(s.intrinsic_dim)),
                Cloud::from_discrete(s, &SimplexRule::refined(s.intrinsic_dim)),
            )),
        }
    }

    pub fn cloud(&self) -> Result<Cloud> {
        match self {
            Surface::Analytic(s) => Cloud::from_immersion(s, s.nodes_per_axis),
            Surface::Discrete(s) => Ok(Cloud::from_discrete(s, &SimplexRule::standard(s.intrinsic_dim))),
        }
    }

    /// Sup of `|H - x^perp/2|` over quadrature nodes or vertices.
    pub fn shrinker_residual_sup(&self) -> Result<f64> {
        match self {
            Surface::Analytic(s) => Ok(s.shrinker_residual()?.sup),
            Surface::Discrete(s) => Ok(s
                .vertices
                .iter()
                .zip(&s.geometry)
                .map(|(x, g)| {
                    let perp = x - &g.proj_tan * x;
                    (&g.h - perp * 0.5).norm()
                })
                .fold(0.0, f64::max)),
        }
    }
}

/// `(4π)^{-n/2}`.
pub fn gaussian_normalization(n: usize) -> f64 {
    (4.0 * PI).powf(-(n as f64) / 2.0)
}

/// `c^n (4π)^{-n/2} Σ w_i g_i e^{-|c x_i + x0|²/4}` with `g ≡ 1` or the given values.
pub fn cloud_integral(cloud: &Cloud, c: f64, x0: &[f64], g: Option<&[f64]>) -> f64 {
    let dim = cloud.ambient_dim;
    let s: f64 = (0..cloud.len())
        .map(|i| {
            let p = cloud.point(i);
            let r2: f64 = (0..dim).map(|d| (c * p[d] + x0[d]).powi(2)).sum();
            let gi = g.map_or(1.0, |g| g[i]);
            cloud.weights[i] * gi * (-r2 / 4.0).exp()
        })
        .sum();
    c.powi(cloud.intrinsic_dim as i32) * gaussian_normalization(cloud.intrinsic_dim) * s
}

fn checked(fine: f64, coarse: f64) -> Result<f64> {
    let rel = (fine - coarse).abs() / fine.abs().max(1e-300);
    if rel > 1e-4 && (fine - coarse).abs() > 1e-12 {
        Err(Error::QuadratureUnderResolved { rel })
    } else {
        Ok(fine)
    }
}

/// `F(Σ) = (4π)^{-n/2} ∫ e^{-|x|²/4}`.
pub fn gaussian_area(surface: Surface<'_>) -> Result<f64> {
    let (a, b) = surface.clouds()?;
    let zero = vec![0.0; a.ambient_dim];
    checked(cloud_integral(&a, 1.0, &zero, None), cloud_integral(&b, 1.0, &zero, None))
}

/// `W(Σ) = (4π)^{-n/2} ∫ |H|² e^{-|x|²/4}`.
pub fn gaussian_willmore(surface: Surface<'_>) -> Result<f64> {
    let (a, b) = surface.clouds()?;
    let zero = vec![0.0; a.ambient_dim];
    let wa = cloud_integral(&a, 1.0, &zero, a.h2.as_deref());
    let wb = cloud_integral(&b, 1.0, &zero, b.h2.as_deref());
    if wa.abs() < 1e-14 && wb.abs() < 1e-14 {
        return Ok(wa);
    }
    checked(wa, wb)
}

#[derive(Debug, Clone)]
pub struct EntropyConfig {
    pub starts: usize,
    pub nelder_mead: NelderMeadConfig,
    /// Tolerance for declaring the argmax to be `(1, 0)`.
    pub identity_tol: f64,
}

impl Default for EntropyConfig {
    fn default() -> Self {
        Self {
            starts: 8,
            nelder_mead: NelderMeadConfig {
                initial_step: 0.1,
                f_tol: 1e-13,
                x_tol: 1e-8,
                max_iter: 4000,
            },
            identity_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyResult {
    pub lambda: f64,
    /// `F` of the untransformed surface.
    pub f: f64,
    pub scale: f64,
    pub shift: Vec<f64>,
    pub iterations: usize,
    pub starts_converged: usize,
    pub argmax_is_identity: bool,
}

/// Deterministic start list in `(log c, x0)`.
pub fn entropy_starts(cloud: &Cloud, count: usize) -> Vec<Vec<f64>> {
    let dim = cloud.ambient_dim;
    let n = cloud.intrinsic_dim as f64;
    let centroid = cloud.centroid();
    let total: f64 = cloud.weights.iter().sum();
    let spread: f64 = (0..cloud.len())
        .map(|i| {
            let p = cloud.point(i);
            cloud.weights[i] * p.iter().zip(&centroid).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
        })
        .sum::<f64>()
        / total;
    let c_guess = if spread > 0.0 { (2.0 * n / spread).sqrt() } else { 1.0 };
    let start = |c: f64, shift: Option<(usize, f64)>| {
        let mut p = vec![c.ln()];
        p.extend(centroid.iter().map(|x| -c * x));
        if let Some((axis, s)) = shift {
            p[1 + axis] += s;
        }
        p
    };
    let mut starts = vec![{
        let mut p = vec![0.0];
        p.extend(std::iter::repeat_n(0.0, dim));
        p
    }];
    for f in [1.0, 0.5, 2.0] {
        starts.push(start(c_guess * f, None));
    }
    let mut k = 0;
    while starts.len() < count {
        let axis = (k / 2) % dim;
        let sign = if k % 2 == 0 { 0.5 } else { -0.5 };
        starts.push(start(c_guess, Some((axis, sign))));
        k += 1;
    }
    starts.truncate(count.max(1));
    starts
}

/// `λ(Σ) = sup_{c, x0} F(cΣ + x0)` by multistart Nelder–Mead.
pub fn entropy(surface: Surface<'_>, cfg: &EntropyConfig) -> Result<EntropyResult> {
    let cloud = surface.cloud()?;
    entropy_of_cloud(&cloud, cfg)
}

pub fn entropy_of_cloud(cloud: &Cloud, cfg: &EntropyConfig) -> Result<EntropyResult> {
    let dim = cloud.ambient_dim;
    let objective = |p: &[f64]| -cloud_integral(cloud, p[0].exp(), &p[1..], None);
    let runs: Vec<_> = entropy_starts(cloud, cfg.starts)
        .par_iter()
        .map(|s| nelder_mead(objective, s, &cfg.nelder_mead))
        .collect();
    let iterations = runs.iter().map(|r| r.iterations).sum();
    let converged = runs.iter().filter(|r| r.converged).count();
    if converged == 0 {
        return Err(Error::OptimizerStalled { iterations });
    }
    let best = runs
        .iter()
        .filter(|r| r.converged)
        .fold(None::<&crate::optimize::Minimum>, |acc, r| match acc {
            Some(a) if a.value <= r.value => Some(a),
            _ => Some(r),
        })
        .expect("at least one converged run");
    let f = cloud_integral(cloud, 1.0, &vec![0.0; dim], None);
    let scale = best.x[0].exp();
    let shift = best.x[1..].to_vec();
    let shift_norm = shift.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(EntropyResult {
        lambda: (-best.value).max(f),
        f,
        scale,
        argmax_is_identity: (scale - 1.0).abs() < cfg.identity_tol && shift_norm < cfg.identity_tol,
        shift,
        iterations,
        starts_converged: converged,
    })
}

/// `(4π)^{-n/2} ∫ (|x|² - 2n)² e^{-f}`.
pub fn sphere_deviation_integral(cloud: &Cloud) -> f64 {
    let n = cloud.intrinsic_dim as f64;
    let g: Vec<f64> = (0..cloud.len())
        .map(|i| (cloud.point(i).iter().map(|x| x * x).sum::<f64>() - 2.0 * n).powi(2))
        .collect();
    cloud_integral(cloud, 1.0, &vec![0.0; cloud.ambient_dim], Some(&g))
}

#[derive(Debug, Clone, Serialize)]
pub struct WillmoreGap {
    pub n: usize,
    pub lambda: f64,
    pub w: f64,
    /// `n λ - 2 W`.
    pub gap: f64,
    /// `sup | |x|² - 2n |` over the cloud.
    pub sphere_deviation: f64,
    pub equality: bool,
    /// The equality flag agrees with `gap < 1e-6`.
    pub consistent: bool,
    /// `16 W` and `8 n F - (4π)^{-n/2} ∫ (|x|² - 2n)² e^{-f}`.
    pub identity_lhs: f64,
    pub identity_rhs: f64,
}

impl WillmoreGap {
    pub fn identity_relative_residual(&self) -> f64 {
        (self.identity_lhs - self.identity_rhs).abs() / self.identity_lhs.abs().max(self.identity_rhs.abs()).max(1e-300)
    }
}

/// `n λ(Σ) - 2 W(Σ)` for a closed shrinker, where `λ = F`.
pub fn willmore_entropy_gap(surface: Surface<'_>) -> Result<WillmoreGap> {
    let residual = surface.shrinker_residual_sup()?;
    if residual > 1e-4 {
        return Err(Error::NotAShrinker { residual });
    }
    let lambda = gaussian_area(surface)?;
    let w = gaussian_willmore(surface)?;
    let cloud = surface.cloud()?;
    let n = cloud.intrinsic_dim;
    let deviation = (0..cloud.len())
        .map(|i| (cloud.point(i).iter().map(|x| x * x).sum::<f64>() - 2.0 * n as f64).abs())
        .fold(0.0, f64::max);
    let gap = n as f64 * lambda - 2.0 * w;
    let equality = deviation < 1e-6;
    Ok(WillmoreGap {
        n,
        lambda,
        w,
        gap,
        sphere_deviation: deviation,
        equality,
        consistent: equality == (gap < 1e-6),
        identity_lhs: 16.0 * w,
        identity_rhs: 8.0 * n as f64 * lambda - sphere_deviation_integral(&cloud),
    })
}

/// `h(r) = r² e^{-r²/4}`.
pub fn maxh_profile(r: f64) -> f64 {
    r * r * (-r * r / 4.0).exp()
}

/// Numerical argmax and max of [`maxh_profile`] on `(0, ∞)`.
pub fn maxh_argmax() -> (f64, f64) {
    let (r, v) = brent_minimize(|r| -maxh_profile(r), 0.0, 10.0, 1e-12);
    (r, -v)
}

#[derive(Debug, Clone, Serialize)]
pub struct AreaGrowth {
    pub m: u32,
    pub r: f64,
    /// Radius in the `z` plane where the graph leaves the ball.
    pub rho_star: f64,
    pub area: f64,
    /// `area / (m r²)`.
    pub ratio: f64,
}

/// Area of `B_r ∩ {(z, z^m)}` in `C² = R⁴`, by Gauss–Legendre in the radial variable.
pub fn euclidean_area_growth(m: u32, r: f64) -> AreaGrowth {
    if r <= 0.0 {
        return AreaGrowth {
            m,
            r,
            rho_star: 0.0,
            area: 0.0,
            ratio: 0.0,
        };
    }
    let mf = m as f64;
    let rho_star = brent_root(|rho| rho * rho + rho.powf(2.0 * mf) - r * r, 0.0, r, 1e-15, 200).unwrap_or(0.0);
    let area: f64 = gauss_legendre(64, 0.0, rho_star)
        .iter()
        .map(|&(rho, w)| w * 2.0 * PI * rho * (1.0 + mf * mf * rho.powf(2.0 * mf - 2.0)))
        .sum();
    AreaGrowth {
        m,
        r,
        rho_star,
        area,
        ratio: area / (mf * r * r),
    }
}

/// Smallest `area / (m r²)` over the given degrees and radii `r ≥ 1`.
pub fn area_growth_constant(ms: &[u32], radii: &[f64]) -> f64 {
    ms.iter()
        .flat_map(|&m| radii.iter().filter(|&&r| r >= 1.0).map(move |&r| euclidean_area_growth(m, r).ratio))
        .fold(f64::INFINITY, f64::min)
}
