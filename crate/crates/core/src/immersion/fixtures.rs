//! Concrete chart maps and the analytic fixtures built from them.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::chart::{Chart, ChartMap, Jet};
use super::AnalyticImmersion;

/// One factor of a separable term, a function of a single parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Factor {
    One,
    Cos(f64),
    Sin(f64),
    Lin,
}

impl Factor {
    fn derivative(self, k: usize, u: f64) -> f64 {
        match self {
            Factor::One => {
                if k == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            Factor::Cos(w) => w.powi(k as i32) * (w * u + k as f64 * FRAC_PI_2).cos(),
            Factor::Sin(w) => w.powi(k as i32) * (w * u + k as f64 * FRAC_PI_2).sin(),
            Factor::Lin => match k {
                0 => u,
                1 => 1.0,
                _ => 0.0,
            },
        }
    }
}

/// `coef * Π_d factors[d](u_d)`.
#[derive(Debug, Clone)]
pub struct Term {
    pub coef: f64,
    pub factors: Vec<Factor>,
}

impl Term {
    pub fn new(coef: f64, factors: &[Factor]) -> Self {
        Self {
            coef,
            factors: factors.to_vec(),
        }
    }
}

/// A map whose coordinates are sums of separable trigonometric terms.
/// Derivatives of every order are available in closed form.
#[derive(Debug, Clone)]
pub struct TrigMap {
    n: usize,
    coords: Vec<Vec<Term>>,
}

impl TrigMap {
    pub fn new(n: usize, coords: Vec<Vec<Term>>) -> Self {
        Self { n, coords }
    }

    fn partial(&self, u: &[f64], alpha: &[usize]) -> DVector<f64> {
        DVector::from_iterator(
            self.coords.len(),
            self.coords.iter().map(|terms| {
                terms
                    .iter()
                    .map(|t| {
                        t.coef
                            * t.factors
                                .iter()
                                .zip(alpha.iter().zip(u))
                                .map(|(f, (&k, &x))| f.derivative(k, x))
                                .product::<f64>()
                    })
                    .sum()
            }),
        )
    }
}

pub(crate) fn jet_from_partials(n: usize, order: usize, partial: impl Fn(&[usize]) -> DVector<f64>) -> Jet {
    let alpha = |idx: &[usize]| {
        let mut a = vec![0usize; n];
        for &i in idx {
            a[i] += 1;
        }
        a
    };
    let mut jet = Jet {
        n,
        order,
        x: partial(&vec![0; n]),
        d1: Vec::new(),
        d2: Vec::new(),
        d3: Vec::new(),
    };
    if order >= 1 {
        jet.d1 = (0..n).map(|a| partial(&alpha(&[a]))).collect();
    }
    if order >= 2 {
        for a in 0..n {
            for b in 0..n {
                jet.d2.push(partial(&alpha(&[a, b])));
            }
        }
    }
    if order >= 3 {
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    jet.d3.push(partial(&alpha(&[a, b, c])));
                }
            }
        }
    }
    jet
}

impl ChartMap for TrigMap {
    fn ambient_dim(&self) -> usize {
        self.coords.len()
    }

    fn intrinsic_dim(&self) -> usize {
        self.n
    }

    fn position(&self, u: &[f64]) -> DVector<f64> {
        self.partial(u, &vec![0; self.n])
    }

    fn closed_form_order(&self) -> usize {
        3
    }

    fn closed_form_jet(&self, u: &[f64], order: usize) -> Option<Jet> {
        Some(jet_from_partials(self.n, order, |a| self.partial(u, a)))
    }
}

/// `y = Q x + offset` applied to another chart map.
pub struct AffineImage {
    pub inner: Arc<dyn ChartMap>,
    pub q: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl ChartMap for AffineImage {
    fn ambient_dim(&self) -> usize {
        self.q.nrows()
    }

    fn intrinsic_dim(&self) -> usize {
        self.inner.intrinsic_dim()
    }

    fn position(&self, u: &[f64]) -> DVector<f64> {
        &self.q * self.inner.position(u) + &self.offset
    }

    fn closed_form_order(&self) -> usize {
        self.inner.closed_form_order()
    }

    fn closed_form_jet(&self, u: &[f64], order: usize) -> Option<Jet> {
        self.inner
            .closed_form_jet(u, order)
            .map(|j| j.map_linear(&self.q, &self.offset))
    }
}

type PositionFn = dyn Fn(&[f64]) -> DVector<f64> + Send + Sync;

/// A map given only by its position; derivatives come from finite differences.
pub struct FnMap {
    pub n: usize,
    pub dim: usize,
    pub f: Arc<PositionFn>,
}

impl ChartMap for FnMap {
    fn ambient_dim(&self) -> usize {
        self.dim
    }

    fn intrinsic_dim(&self) -> usize {
        self.n
    }

    fn position(&self, u: &[f64]) -> DVector<f64> {
        (self.f)(u)
    }
}

/// Closed planar curve given by a truncated Fourier series in arclength,
/// placed in the first two coordinates of `R^dim`.
#[derive(Debug, Clone)]
pub struct FourierCurve {
    pub period: f64,
    pub dim: usize,
    /// Mean position.
    pub mean: [f64; 2],
    /// Per harmonic `k >= 1`: cosine and sine coefficients of x and y.
    pub cos: Vec<[f64; 2]>,
    pub sin: Vec<[f64; 2]>,
}

impl FourierCurve {
    /// Trigonometric interpolant of equispaced samples over one period.
    pub fn from_samples(points: &[[f64; 2]], period: f64, dim: usize) -> Self {
        Self::from_samples_filtered(points, period, dim, 1e-15)
    }

    /// As [`from_samples`](Self::from_samples), dropping every harmonic whose
    /// amplitude is below `rel_tol` times the largest one.
    pub fn from_samples_filtered(points: &[[f64; 2]], period: f64, dim: usize, rel_tol: f64) -> Self {
        use rustfft::{num_complex::Complex, FftPlanner};
        let m = points.len();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        let mut coeffs = [Vec::new(), Vec::new()];
        for (c, out) in coeffs.iter_mut().enumerate() {
            let mut buf: Vec<Complex<f64>> = points.iter().map(|p| Complex::new(p[c], 0.0)).collect();
            fft.process(&mut buf);
            *out = buf;
        }
        let mean = [coeffs[0][0].re / m as f64, coeffs[1][0].re / m as f64];
        let half = (m - 1) / 2;
        let peak = (1..=half)
            .map(|k| coeffs[0][k].norm().max(coeffs[1][k].norm()))
            .fold(0.0, f64::max);
        let mut cos = Vec::new();
        let mut sin = Vec::new();
        let mut last = 0;
        for k in 1..=half {
            let a = [2.0 * coeffs[0][k].re / m as f64, 2.0 * coeffs[1][k].re / m as f64];
            let b = [-2.0 * coeffs[0][k].im / m as f64, -2.0 * coeffs[1][k].im / m as f64];
            if coeffs[0][k].norm().max(coeffs[1][k].norm()) > rel_tol * peak {
                last = k;
                cos.push(a);
                sin.push(b);
            } else {
                cos.push([0.0; 2]);
                sin.push([0.0; 2]);
            }
        }
        cos.truncate(last);
        sin.truncate(last);
        Self {
            period,
            dim,
            mean,
            cos,
            sin,
        }
    }

    pub fn harmonics(&self) -> usize {
        self.cos.len()
    }

    /// `d^k/ds^k` of the curve at `s`.
    pub fn derivative(&self, s: f64, k: usize) -> [f64; 2] {
        let w = 2.0 * PI / self.period;
        let (s1, c1) = (w * s).sin_cos();
        let (mut sk, mut ck) = (0.0f64, 1.0f64);
        let mut out = if k == 0 { self.mean } else { [0.0, 0.0] };
        // Rotating the phase by k quarter turns differentiates k times.
        let phase = k % 4;
        for (j, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let (ns, nc) = (sk * c1 + ck * s1, ck * c1 - sk * s1);
            sk = ns;
            ck = nc;
            let scale = (w * (j + 1) as f64).powi(k as i32);
            let (cv, sv) = match phase {
                0 => (ck, sk),
                1 => (-sk, ck),
                2 => (-ck, -sk),
                _ => (sk, -ck),
            };
            for c in 0..2 {
                out[c] += scale * (a[c] * cv + b[c] * sv);
            }
        }
        out
    }

    fn lift(&self, p: [f64; 2]) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim);
        v[0] = p[0];
        v[1] = p[1];
        v
    }
}

impl ChartMap for FourierCurve {
    fn ambient_dim(&self) -> usize {
        self.dim
    }

    fn intrinsic_dim(&self) -> usize {
        1
    }

    fn position(&self, u: &[f64]) -> DVector<f64> {
        self.lift(self.derivative(u[0], 0))
    }

    fn closed_form_order(&self) -> usize {
        3
    }

    fn closed_form_jet(&self, u: &[f64], order: usize) -> Option<Jet> {
        Some(jet_from_partials(1, order, |a| self.lift(self.derivative(u[0], a[0]))))
    }
}

fn pad(coords: Vec<Vec<Term>>, dim: usize) -> Vec<Vec<Term>> {
    let mut coords = coords;
    coords.resize(dim, Vec::new());
    coords
}

use Factor::{Cos, Lin, One, Sin};

/// Round sphere of radius `r` in the first three coordinates of `R^dim`,
/// polar axis along `e_1`: `r (cos θ, sin θ cos φ, sin θ sin φ)`.
pub fn sphere(r: f64, dim: usize) -> AnalyticImmersion {
    let map = TrigMap::new(
        2,
        pad(
            vec![
                vec![Term::new(r, &[Cos(1.0), One])],
                vec![Term::new(r, &[Sin(1.0), Cos(1.0)])],
                vec![Term::new(r, &[Sin(1.0), Sin(1.0)])],
            ],
            dim,
        ),
    );
    let chart = Chart::new(vec![0.0, 0.0], vec![PI, 2.0 * PI], vec![false, true], Arc::new(map));
    AnalyticImmersion::new(&format!("sphere-r{r}"), chart)
        .with_genus(0)
        .with_length_scale(r)
}

/// Ellipsoid `(a cos θ, b sin θ cos φ, c sin θ sin φ)` in `R^3`.
pub fn ellipsoid(a: f64, b: f64, c: f64) -> AnalyticImmersion {
    let map = TrigMap::new(
        2,
        vec![
            vec![Term::new(a, &[Cos(1.0), One])],
            vec![Term::new(b, &[Sin(1.0), Cos(1.0)])],
            vec![Term::new(c, &[Sin(1.0), Sin(1.0)])],
        ],
    );
    let chart = Chart::new(vec![0.0, 0.0], vec![PI, 2.0 * PI], vec![false, true], Arc::new(map));
    AnalyticImmersion::new("ellipsoid", chart)
        .with_genus(0)
        .with_length_scale(a.max(b).max(c))
}

/// Circle of radius `r` in `R^dim`, parametrized by arclength.
pub fn circle(r: f64, dim: usize) -> AnalyticImmersion {
    let w = 1.0 / r;
    let map = TrigMap::new(
        1,
        pad(
            vec![vec![Term::new(r, &[Cos(w)])], vec![Term::new(r, &[Sin(w)])]],
            dim,
        ),
    );
    let chart = Chart::new(vec![0.0], vec![2.0 * PI * r], vec![true], Arc::new(map)).with_scale(r);
    AnalyticImmersion::new(&format!("circle-r{r}"), chart).with_length_scale(r)
}

/// `S^1(a) x S^1(b) ⊂ R^4`.
pub fn product_torus(a: f64, b: f64) -> AnalyticImmersion {
    let map = TrigMap::new(
        2,
        vec![
            vec![Term::new(a, &[Cos(1.0), One])],
            vec![Term::new(a, &[Sin(1.0), One])],
            vec![Term::new(b, &[One, Cos(1.0)])],
            vec![Term::new(b, &[One, Sin(1.0)])],
        ],
    );
    let chart = Chart::new(vec![0.0, 0.0], vec![2.0 * PI, 2.0 * PI], vec![true, true], Arc::new(map));
    AnalyticImmersion::new("product-torus", chart)
        .with_genus(1)
        .with_length_scale(a.max(b))
}

/// The Clifford torus `S^1(√2) x S^1(√2)`, minimal in the sphere of radius 2.
pub fn clifford() -> AnalyticImmersion {
    let mut t = product_torus(SQRT_2, SQRT_2);
    t.name = "clifford".into();
    t
}

/// Torus of revolution with tube radius `r` about a circle of radius `big_r` in `R^3`.
pub fn torus_of_revolution(big_r: f64, r: f64) -> AnalyticImmersion {
    let map = TrigMap::new(
        2,
        vec![
            vec![Term::new(big_r, &[Cos(1.0), One]), Term::new(r, &[Cos(1.0), Cos(1.0)])],
            vec![Term::new(big_r, &[Sin(1.0), One]), Term::new(r, &[Sin(1.0), Cos(1.0)])],
            vec![Term::new(r, &[One, Sin(1.0)])],
        ],
    );
    let chart = Chart::new(vec![0.0, 0.0], vec![2.0 * PI, 2.0 * PI], vec![true, true], Arc::new(map));
    AnalyticImmersion::new("torus-of-revolution", chart)
        .with_genus(1)
        .with_length_scale(big_r + r)
}

/// The plane spanned by `e_1, e_2` in `R^dim`, truncated to `[-12, 12]^2`.
pub fn plane(dim: usize) -> AnalyticImmersion {
    let map = TrigMap::new(
        2,
        pad(
            vec![vec![Term::new(1.0, &[Lin, One])], vec![Term::new(1.0, &[One, Lin])]],
            dim,
        ),
    );
    let chart = Chart::new(vec![-12.0, -12.0], vec![12.0, 12.0], vec![false, false], Arc::new(map)).with_scale(4.0);
    AnalyticImmersion::new("plane", chart).open()
}

/// Image of every chart under `y = Q x + offset`.
pub fn affine_image(imm: &AnalyticImmersion, q: DMatrix<f64>, offset: DVector<f64>) -> AnalyticImmersion {
    let scale = q.norm() / (q.ncols() as f64).sqrt();
    let charts = imm
        .charts
        .iter()
        .map(|c| {
            let mut c = c.clone();
            c.map = Arc::new(AffineImage {
                inner: c.map.clone(),
                q: q.clone(),
                offset: offset.clone(),
            });
            c
        })
        .collect();
    AnalyticImmersion {
        name: format!("{}-affine", imm.name),
        charts,
        genus: imm.genus,
        closed: imm.closed,
        nodes_per_axis: imm.nodes_per_axis,
        length_scale: imm.length_scale * scale.max(1e-3) + offset.norm(),
    }
}

/// Dilation by `c` followed by translation by `x0`.
pub fn dilate_translate(imm: &AnalyticImmersion, c: f64, x0: &DVector<f64>) -> AnalyticImmersion {
    let n = imm.ambient_dim();
    affine_image(imm, DMatrix::identity(n, n) * c, x0.clone())
}

/// Isometric embedding into `R^dim` by a matrix with orthonormal columns.
pub fn embed(imm: &AnalyticImmersion, q: DMatrix<f64>) -> AnalyticImmersion {
    let dim = q.nrows();
    let mut out = affine_image(imm, q, DVector::zeros(dim));
    out.length_scale = imm.length_scale;
    out
}

/// Orthonormal `dim x k` matrix from a seeded Gaussian matrix.
pub fn random_isometry(dim: usize, k: usize, seed: u64) -> DMatrix<f64> {
    use rand::{RngExt, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let m = DMatrix::from_fn(dim, k, |_, _| rng.random_range(-1.0..1.0));
    let qr = m.qr();
    qr.q().columns(0, k).into_owned()
}

/// The radius-2 sphere in `R^4` pushed off its hyperplane along `e_4`
/// by `eps x_1 x_2`: a codimension-two surface that is not a shrinker.
pub fn perturbed_sphere(eps: f64) -> AnalyticImmersion {
    let base = Arc::new(TrigMap::new(
        2,
        vec![
            vec![Term::new(2.0, &[Cos(1.0), One])],
            vec![Term::new(2.0, &[Sin(1.0), Cos(1.0)])],
            vec![Term::new(2.0, &[Sin(1.0), Sin(1.0)])],
        ],
    ));
    let f = move |u: &[f64]| {
        let p = base.position(u);
        DVector::from_vec(vec![p[0], p[1], p[2], eps * p[0] * p[1]])
    };
    let map = FnMap {
        n: 2,
        dim: 4,
        f: Arc::new(f),
    };
    let chart = Chart::new(vec![0.0, 0.0], vec![PI, 2.0 * PI], vec![false, true], Arc::new(map));
    AnalyticImmersion::new("perturbed-sphere", chart)
        .with_genus(0)
        .with_length_scale(2.0)
}

/// Graph of `z ↦ z^m` in `C^2 = R^4` over the disk `|z| ≤ rho_max`, in polar coordinates.
pub fn graph_zm(m: u32, rho_max: f64) -> AnalyticImmersion {
    let f = move |u: &[f64]| {
        let (rho, phi) = (u[0], u[1]);
        let rm = rho.powi(m as i32);
        let mphi = m as f64 * phi;
        DVector::from_vec(vec![rho * phi.cos(), rho * phi.sin(), rm * mphi.cos(), rm * mphi.sin()])
    };
    let map = FnMap {
        n: 2,
        dim: 4,
        f: Arc::new(f),
    };
    let chart = Chart::new(vec![0.0, 0.0], vec![rho_max, 2.0 * PI], vec![false, true], Arc::new(map));
    AnalyticImmersion::new(&format!("graph-z{m}"), chart).open()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::immersion::DerivativeMode;

    #[test]
    fn fourier_curve_reproduces_a_circle() {
        let r = 1.5;
        let l = 2.0 * PI * r;
        let pts: Vec<[f64; 2]> = (0..64)
            .map(|i| {
                let t = i as f64 / 64.0 * 2.0 * PI;
                [r * t.cos(), r * t.sin()]
            })
            .collect();
        let c = FourierCurve::from_samples(&pts, l, 3);
        assert_eq!(c.harmonics(), 1);
        let s = 0.37;
        let d2 = c.derivative(s, 2);
        let expect = [-(s / r).cos() / r, -(s / r).sin() / r];
        assert!((d2[0] - expect[0]).abs() < 1e-12 && (d2[1] - expect[1]).abs() < 1e-12);
        let d3 = c.derivative(s, 3);
        assert!((d3[0] - (s / r).sin() / (r * r)).abs() < 1e-12);
    }

    #[test]
    fn closed_form_and_difference_jets_agree() {
        let t = torus_of_revolution(2.0, 0.7);
        let chart = &t.charts[0];
        let u = [0.3, 1.1];
        let a = chart.jet(&u, 3, DerivativeMode::Auto).unwrap();
        let b = chart.jet(&u, 3, DerivativeMode::FiniteDifference).unwrap();
        for (x, y) in a.d1.iter().zip(&b.d1) {
            assert!((x - y).norm() < 1e-9);
        }
        for (x, y) in a.d2.iter().zip(&b.d2) {
            assert!((x - y).norm() < 1e-8);
        }
        for (x, y) in a.d3.iter().zip(&b.d3) {
            assert!((x - y).norm() < 1e-6);
        }
    }
}
