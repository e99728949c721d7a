//! Closed planar shrinking curves (the Abresch–Langer family) and their spectra.
//!
//! A unit-speed curve with tangent `(cos θ, sin θ)` shrinks self-similarly
//! when `θ' = k = (x sin θ - y cos θ) / 2`. Curves start at `(2k₀, 0)`
//! heading along `+e₂`, where they cross the axis normally.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::{Read, Write};
use std::sync::Arc;

use ode_solvers::{Dop853, OutputType, System, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use crate::discrete::DiscreteSurface;
use crate::error::{Error, Result};
use crate::immersion::fixtures::FourierCurve;
use crate::immersion::{AnalyticImmersion, Chart};
use crate::linalg::EigenResult;
use crate::optimize::brent_root;
use crate::spectra::{assemble_drift, drift_spectrum, Weight};
use crate::stability::{scalar_stability_spectrum, ScalarStability};

pub const CIRCLE_K0: f64 = FRAC_1_SQRT_2;
const FOURIER_FLOOR: f64 = 1e-12;
const K_RANGE: (f64, f64) = (1e-6, 1e6);

#[derive(Debug, Clone, Copy)]
pub struct CurveConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Uniform arclength samples kept on accepted curves.
    pub samples: usize,
    /// Bracket scanned for `k₀` when shooting.
    pub k0_bracket: (f64, f64),
    pub scan_points: usize,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-12,
            samples: 4096,
            k0_bracket: (1e-3, CIRCLE_K0 - 1e-6),
            scan_points: 32,
        }
    }
}

type State = Vector3<f64>;

fn curvature(y: &State) -> f64 {
    0.5 * (y[0] * y[2].sin() - y[1] * y[2].cos())
}

/// `<x, T>`: vanishes where the curve crosses a line through the origin normally.
fn radial(y: &State) -> f64 {
    y[0] * y[2].cos() + y[1] * y[2].sin()
}

struct ShrinkerOde {
    stop_after: usize,
    crossings: usize,
    last_sign: f64,
    blowup: Option<f64>,
}

impl ShrinkerOde {
    fn new(stop_after: usize) -> Self {
        Self {
            stop_after,
            crossings: 0,
            last_sign: 0.0,
            blowup: None,
        }
    }
}

impl System<f64, State> for ShrinkerOde {
    fn system(&self, _s: f64, y: &State, dy: &mut State) {
        dy[0] = y[2].cos();
        dy[1] = y[2].sin();
        dy[2] = curvature(y);
    }

    fn solout(&mut self, _s: f64, y: &State, _dy: &State) -> bool {
        let k = curvature(y);
        if !(K_RANGE.0..=K_RANGE.1).contains(&k) {
            self.blowup = Some(k);
            return true;
        }
        if self.stop_after == 0 {
            return false;
        }
        let g = radial(y);
        if g != 0.0 {
            let sign = g.signum();
            if self.last_sign != 0.0 && sign != self.last_sign {
                self.crossings += 1;
            }
            self.last_sign = sign;
        }
        self.crossings >= self.stop_after
    }
}

fn solver_error(e: impl std::fmt::Display) -> Error {
    Error::SolverFailure(format!("curve integration: {e}"))
}

/// State at arclength `s1` starting from `y0` at `s0`.
fn advance(y0: State, s0: f64, s1: f64, cfg: &CurveConfig) -> Result<State> {
    if s1 == s0 {
        return Ok(y0);
    }
    let mut ode = Dop853::new(ShrinkerOde::new(0), s0, s1, s1 - s0, y0, cfg.rtol, cfg.atol);
    ode.set_output(OutputType::Sparse);
    ode.integrate().map_err(solver_error)?;
    let last = *ode.y_out().last().ok_or_else(|| solver_error("no output"))?;
    check_k(&last)?;
    Ok(last)
}

fn check_k(y: &State) -> Result<()> {
    let k = curvature(y);
    if (K_RANGE.0..=K_RANGE.1).contains(&k) {
        Ok(())
    } else {
        Err(Error::BlowUp(k))
    }
}

fn initial_state(k0: f64) -> State {
    State::new(2.0 * k0, 0.0, PI / 2.0)
}

/// One period of the trajectory from the initial normal crossing.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub k0: f64,
    /// Accepted integrator steps `(s, x, y, θ)`.
    pub steps: Vec<[f64; 4]>,
    /// Arclength until the second return to a normal crossing (one loop for the circle).
    pub period: f64,
    /// Turning of the tangent over one period.
    pub delta_theta: f64,
    pub circle: bool,
}

impl Trajectory {
    pub fn ratio(&self) -> f64 {
        self.delta_theta / (2.0 * PI)
    }
}

/// Integrates from `(2k₀, 0)` until the second zero of `<x, T>`.
pub fn integrate_curve(k0: f64, cfg: &CurveConfig) -> Result<Trajectory> {
    if !(k0 > 0.0) {
        return Err(Error::NonPositiveCurvature(k0));
    }
    let y0 = initial_state(k0);
    check_k(&y0)?;
    let circle = (k0 - CIRCLE_K0).abs() < 1e-9;
    let horizon = if circle { 2.0 * PI / k0 } else { 1e4 };
    let mut ode = Dop853::new(
        ShrinkerOde::new(if circle { 0 } else { 2 }),
        0.0,
        horizon,
        horizon,
        y0,
        cfg.rtol,
        cfg.atol,
    );
    ode.set_output(OutputType::Sparse);
    ode.integrate().map_err(solver_error)?;
    let xs = ode.x_out().clone();
    let ys = ode.y_out().clone();
    let mut steps: Vec<[f64; 4]> = xs.iter().zip(&ys).map(|(s, y)| [*s, y[0], y[1], y[2]]).collect();
    if let Some(k) = ys.iter().map(curvature).find(|k| !(K_RANGE.0..=K_RANGE.1).contains(k)) {
        return Err(Error::BlowUp(k));
    }
    let (period, end) = if circle {
        (horizon, *ys.last().ok_or_else(|| solver_error("no output"))?)
    } else {
        let n = ys.len();
        if n < 2 || radial(&ys[n - 2]).signum() == radial(&ys[n - 1]).signum() {
            return Err(solver_error(format!("no return to the axis within arclength {horizon}")));
        }
        let (sa, ya) = (xs[n - 2], ys[n - 2]);
        let mut failure = None;
        let root = brent_root(
            |s| match advance(ya, sa, s, cfg) {
                Ok(y) => radial(&y),
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            sa,
            xs[n - 1],
            1e-15,
            200,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let s = root.ok_or_else(|| solver_error("crossing refinement failed"))?;
        let y = advance(ya, sa, s, cfg)?;
        steps.truncate(n - 1);
        steps.push([s, y[0], y[1], y[2]]);
        (s, y)
    };
    Ok(Trajectory {
        k0,
        steps,
        period,
        delta_theta: end[2] - PI / 2.0,
        circle,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurveSample {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub k: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveShrinker {
    pub name: String,
    pub p: usize,
    pub q: usize,
    pub k0: f64,
    pub length: f64,
    #[serde(skip)]
    pub samples: Vec<CurveSample>,
    pub rotation_index: i64,
    pub gauss_degree: i64,
    pub closure_error: f64,
    pub convex: bool,
    pub k_min: f64,
    pub k_max: f64,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Closed curve turning `p` times over `q` curvature periods.
pub fn shoot_closed(p: usize, q: usize, cfg: &CurveConfig) -> Result<CurveShrinker> {
    if p == 0 || q == 0 {
        return Err(Error::BadDimensions(format!("(p, q) = ({p}, {q}) must be positive")));
    }
    if gcd(p, q) != 1 {
        return Err(Error::BadDimensions(format!("(p, q) = ({p}, {q}) must be coprime")));
    }
    if (p, q) == (1, 1) {
        return closed_curve(CIRCLE_K0, 1, 1, 2.0 * PI * 2f64.sqrt(), cfg);
    }
    let target = p as f64 / q as f64;
    let (lo, hi) = cfg.k0_bracket;
    let m = cfg.scan_points.max(2);
    let grid: Vec<f64> = (0..m)
        .map(|i| lo * (hi / lo).powf(i as f64 / (m - 1) as f64))
        .collect();
    let ratios: Vec<Option<f64>> = grid
        .par_iter()
        .map(|&k0| integrate_curve(k0, cfg).ok().map(|t| t.ratio() - target))
        .collect();
    let brackets: Vec<(f64, f64)> = (0..m - 1)
        .filter_map(|i| match (ratios[i], ratios[i + 1]) {
            (Some(a), Some(b)) if a * b <= 0.0 => Some((grid[i], grid[i + 1])),
            _ => None,
        })
        .collect();
    let roots: Vec<f64> = brackets
        .par_iter()
        .filter_map(|&(a, b)| {
            brent_root(
                |k0| integrate_curve(k0, cfg).map_or(f64::NAN, |t| t.ratio() - target),
                a,
                b,
                1e-15,
                200,
            )
        })
        .collect();
    let k0 = roots
        .into_iter()
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.min(r))))
        .ok_or(Error::NoRoot { p, q })?;
    let period = integrate_curve(k0, cfg)?.period;
    closed_curve(k0, p, q, q as f64 * period, cfg)
}

fn closed_curve(k0: f64, p: usize, q: usize, length: f64, cfg: &CurveConfig) -> Result<CurveShrinker> {
    let n = cfg.samples.max(8);
    let ds = length / n as f64;
    let mut ode = Dop853::new(ShrinkerOde::new(0), 0.0, length, ds, initial_state(k0), cfg.rtol, cfg.atol);
    ode.integrate().map_err(solver_error)?;
    let ys = ode.y_out();
    if ys.len() < n {
        return Err(solver_error(format!("dense output has {} of {n} samples", ys.len())));
    }
    let samples: Vec<CurveSample> = (0..n)
        .map(|i| {
            let y = ys[i];
            CurveSample {
                s: i as f64 * ds,
                x: y[0],
                y: y[1],
                theta: y[2],
                k: curvature(&y),
            }
        })
        .collect();
    let end = advance(initial_state(k0), 0.0, length, cfg)?;
    let start = initial_state(k0);
    let turning = end[2] - start[2];
    let rotation_index = (turning / (2.0 * PI)).round() as i64;
    let closure_error = ((end[0] - start[0]).powi(2) + (end[1] - start[1]).powi(2)).sqrt()
        + (turning - 2.0 * PI * p as f64).abs();
    if closure_error > 1e-8 {
        return Err(Error::SolverFailure(format!(
            "curve ({p}, {q}) failed to close: error {closure_error:.3e}"
        )));
    }
    let k_min = samples.iter().map(|c| c.k).fold(f64::INFINITY, f64::min);
    let k_max = samples.iter().map(|c| c.k).fold(f64::NEG_INFINITY, f64::max);
    let name = if (p, q) == (1, 1) {
        "circle".to_string()
    } else {
        format!("abresch-langer-{p}-{q}")
    };
    Ok(CurveShrinker {
        name,
        p,
        q,
        k0,
        length,
        gauss_degree: gauss_degree(&samples, end[2]),
        samples,
        rotation_index,
        closure_error,
        convex: k_min > 0.0,
        k_min,
        k_max,
    })
}

/// Net number of times the tangent angle passes a multiple of `2π` going around once.
fn gauss_degree(samples: &[CurveSample], theta_end: f64) -> i64 {
    let mut count = 0i64;
    let thetas: Vec<f64> = samples.iter().map(|c| c.theta).chain(std::iter::once(theta_end)).collect();
    for w in thetas.windows(2) {
        let (a, b) = ((w[0] / (2.0 * PI)).floor() as i64, (w[1] / (2.0 * PI)).floor() as i64);
        count += b - a;
    }
    count
}

impl CurveShrinker {
    pub fn points(&self) -> Vec<[f64; 2]> {
        self.samples.iter().map(|c| [c.x, c.y]).collect()
    }

    /// Interpolant with harmonics at the integration noise floor removed.
    pub fn fourier(&self, dim: usize) -> FourierCurve {
        FourierCurve::from_samples_filtered(&self.points(), self.length, dim, FOURIER_FLOOR)
    }

    /// Trigonometric interpolant of the samples as an immersion in `R^dim`.
    pub fn immersion(&self, dim: usize) -> AnalyticImmersion {
        let chart = Chart::new(vec![0.0], vec![self.length], vec![true], Arc::new(self.fourier(dim)));
        AnalyticImmersion::new(&self.name, chart)
    }

    /// Polyline through the samples with geometry from the interpolant.
    pub fn discrete(&self, dim: usize) -> Result<DiscreteSurface> {
        DiscreteSurface::from_immersion(&self.immersion(dim), self.samples.len())
    }

    /// Sup of `|k - <x, ν>/2|` re-evaluated spectrally on `refine` times as many points.
    pub fn shrinker_residual(&self, refine: usize) -> f64 {
        let fc = self.fourier(2);
        let m = self.samples.len() * refine.max(1);
        (0..m)
            .into_par_iter()
            .map(|i| {
                let s = self.length * i as f64 / m as f64;
                let x = fc.derivative(s, 0);
                let t = fc.derivative(s, 1);
                let a = fc.derivative(s, 2);
                let speed = (t[0] * t[0] + t[1] * t[1]).sqrt();
                let k = (t[0] * a[1] - t[1] * a[0]) / speed.powi(3);
                let outward = [t[1] / speed, -t[0] / speed];
                (k - 0.5 * (x[0] * outward[0] + x[1] * outward[1])).abs()
            })
            .reduce(|| 0.0, f64::max)
    }

    /// CSV with columns `s,x,y,theta,k` and `#` comment lines.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = w;
        writeln!(w, "# curve {} (p = {}, q = {})", self.name, self.p, self.q)?;
        writeln!(w, "# k0 = {:.17e}, length = {:.17e}", self.k0, self.length)?;
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["s", "x", "y", "theta", "k"])
            .map_err(|e| Error::Parse(e.to_string()))?;
        for c in &self.samples {
            out.write_record([c.s, c.x, c.y, c.theta, c.k].iter().map(|v| format!("{v:.17e}")))
                .map_err(|e| Error::Parse(e.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads uniform arclength samples written by [`write_csv`](Self::write_csv)
    /// and recomputes the derived data.
    pub fn read_csv<R: Read>(r: R, name: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
        let mut samples = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            if rec.len() != 5 {
                return Err(Error::Parse(format!("expected 5 columns, found {}", rec.len())));
            }
            let v: Vec<f64> = rec
                .iter()
                .map(|f| f.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{f:?}: {e}"))))
                .collect::<Result<_>>()?;
            samples.push(CurveSample {
                s: v[0],
                x: v[1],
                y: v[2],
                theta: v[3],
                k: v[4],
            });
        }
        if samples.len() < 8 {
            return Err(Error::Parse("a curve needs at least 8 samples".into()));
        }
        let n = samples.len();
        let ds = samples[1].s - samples[0].s;
        let length = ds * n as f64;
        let (first, last) = (samples[0], samples[n - 1]);
        // Extrapolate one step to close the loop.
        let next_theta = last.theta + ds * last.k;
        let turning = next_theta - first.theta;
        let rotation_index = (turning / (2.0 * PI)).round() as i64;
        let theta_end = first.theta + 2.0 * PI * rotation_index as f64;
        let gap = ((last.x + ds * last.theta.cos() - first.x).powi(2) + (last.y + ds * last.theta.sin() - first.y).powi(2))
            .sqrt();
        let k_min = samples.iter().map(|c| c.k).fold(f64::INFINITY, f64::min);
        let k_max = samples.iter().map(|c| c.k).fold(f64::NEG_INFINITY, f64::max);
        let p = rotation_index.max(0) as usize;
        Ok(Self {
            name: name.to_string(),
            p,
            q: 0,
            k0: first.k,
            length,
            gauss_degree: gauss_degree(&samples, theta_end),
            samples,
            rotation_index,
            closure_error: gap,
            convex: k_min > 0.0,
            k_min,
            k_max,
        })
    }
}

/// `ℒ` on the curve, `ℒu + μu = 0` convention.
pub fn curve_drift_spectrum(curve: &CurveShrinker, count: usize) -> Result<EigenResult> {
    drift_spectrum(&assemble_drift(&curve.discrete(2)?, Weight::Unit)?, count)
}

/// `L = ℒ + 1/2 + k²`, `L u = c u` convention.
pub fn curve_stability_spectrum(curve: &CurveShrinker, count: usize) -> Result<ScalarStability> {
    scalar_stability_spectrum(&curve.discrete(2)?, count)
}

/// Sign-change intervals of a sampled closed-curve function, ignoring values
/// below `1e-6 max|u|`.
pub fn nodal_domains(u: &[f64]) -> usize {
    let peak = u.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let thr = 1e-6 * peak;
    let signs: Vec<f64> = u.iter().filter(|v| v.abs() > thr).map(|v| v.signum()).collect();
    if signs.is_empty() {
        return 1;
    }
    let changes = (0..signs.len())
        .filter(|&i| signs[i] != signs[(i + 1) % signs.len()])
        .count();
    changes.max(1)
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveVerdict {
    pub name: String,
    pub values: Vec<f64>,
    /// Eigenvalue found in `(1/2, 1)`, which certifies F-instability.
    pub offending: Option<f64>,
    pub flagged: bool,
}

/// Flags every curve with an `L` eigenvalue strictly between `1/2` and `1`.
pub fn classify_stable_curves(candidates: &[CurveShrinker]) -> Result<Vec<CurveVerdict>> {
    candidates
        .iter()
        .map(|c| {
            let spec = curve_stability_spectrum(c, 6)?;
            let offending = spec.values.iter().copied().find(|&v| v > 0.5 + 1e-3 && v < 1.0 - 1e-3);
            Ok(CurveVerdict {
                name: c.name.clone(),
                values: spec.values,
                offending,
                flagged: offending.is_some(),
            })
        })
        .collect()
}
