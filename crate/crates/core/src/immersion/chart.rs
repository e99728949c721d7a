//! Chart maps and their derivative jets.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Position and partial derivatives of a chart map up to some order.
///
/// Mixed partials are stored with row-major multi-indices:
/// `d2[a * n + b]`, `d3[(a * n + b) * n + c]`.
#[derive(Debug, Clone)]
pub struct Jet {
    pub n: usize,
    pub order: usize,
    pub x: DVector<f64>,
    pub d1: Vec<DVector<f64>>,
    pub d2: Vec<DVector<f64>>,
    pub d3: Vec<DVector<f64>>,
}

impl Jet {
    pub fn dx(&self, a: usize) -> &DVector<f64> {
        &self.d1[a]
    }

    pub fn dxx(&self, a: usize, b: usize) -> &DVector<f64> {
        &self.d2[a * self.n + b]
    }

    pub fn dxxx(&self, a: usize, b: usize, c: usize) -> &DVector<f64> {
        &self.d3[(a * self.n + b) * self.n + c]
    }

    /// Applies a linear map `y = Q x + offset` to every entry.
    pub fn map_linear(&self, q: &nalgebra::DMatrix<f64>, offset: &DVector<f64>) -> Jet {
        let lin = |v: &DVector<f64>| q * v;
        Jet {
            n: self.n,
            order: self.order,
            x: q * &self.x + offset,
            d1: self.d1.iter().map(lin).collect(),
            d2: self.d2.iter().map(lin).collect(),
            d3: self.d3.iter().map(lin).collect(),
        }
    }
}

/// A smooth map from a parameter domain in `R^n` to `R^N`.
pub trait ChartMap: Send + Sync {
    fn ambient_dim(&self) -> usize;
    fn intrinsic_dim(&self) -> usize;
    fn position(&self, u: &[f64]) -> DVector<f64>;

    /// Highest derivative order available in closed form.
    fn closed_form_order(&self) -> usize {
        0
    }

    /// Closed-form jet; only called with `order <= closed_form_order()`.
    fn closed_form_jet(&self, _u: &[f64], _order: usize) -> Option<Jet> {
        None
    }
}

/// Whether to use closed-form derivatives when the chart supplies them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeMode {
    Auto,
    FiniteDifference,
}

/// A chart: parameter rectangle, periodicity flags and the map itself.
#[derive(Clone)]
pub struct Chart {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub periodic: Vec<bool>,
    pub map: Arc<dyn ChartMap>,
    /// Typical parameter length, used to size finite-difference steps.
    pub scale: f64,
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Chart")
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("periodic", &self.periodic)
            .field("closed_form_order", &self.map.closed_form_order())
            .finish()
    }
}

// 4th-order central stencils as (offset, coefficient) pairs, scaled by h^-k.
const STENCIL_1: [(f64, f64); 4] = [(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)];
const STENCIL_2: [(f64, f64); 5] = [
    (-2.0, -1.0 / 12.0),
    (-1.0, 16.0 / 12.0),
    (0.0, -30.0 / 12.0),
    (1.0, 16.0 / 12.0),
    (2.0, -1.0 / 12.0),
];
const STENCIL_3: [(f64, f64); 6] = [
    (-3.0, 1.0 / 8.0),
    (-2.0, -1.0),
    (-1.0, 13.0 / 8.0),
    (1.0, -13.0 / 8.0),
    (2.0, 1.0),
    (3.0, -1.0 / 8.0),
];

fn stencil(order: usize) -> &'static [(f64, f64)] {
    match order {
        0 => &[(0.0, 1.0)],
        1 => &STENCIL_1,
        2 => &STENCIL_2,
        _ => &STENCIL_3,
    }
}

/// Step for a derivative of total order `k`: `eps^(1/(4+k))` times the scale.
pub fn fd_step(k: usize, scale: f64) -> f64 {
    f64::EPSILON.powf(1.0 / (4.0 + k as f64)) * scale
}

impl Chart {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, periodic: Vec<bool>, map: Arc<dyn ChartMap>) -> Self {
        Self {
            lower,
            upper,
            periodic,
            map,
            scale: 1.0,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.map.intrinsic_dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.map.ambient_dim()
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.lower.len()
            && u.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| *x >= lo - 1e-12 && *x <= hi + 1e-12)
    }

    /// Mixed partial `∂^alpha x` by tensor-product finite differences.
    fn fd_partial(&self, u: &[f64], alpha: &[usize]) -> DVector<f64> {
        let k: usize = alpha.iter().sum();
        let h = fd_step(k, self.scale);
        let n = u.len();
        let mut acc = DVector::zeros(self.ambient_dim());
        let mut point = u.to_vec();
        let stencils: Vec<&[(f64, f64)]> = alpha.iter().map(|&o| stencil(o)).collect();
        let mut idx = vec![0usize; n];
        loop {
            let mut coef = 1.0;
            for d in 0..n {
                let (off, c) = stencils[d][idx[d]];
                point[d] = u[d] + off * h;
                coef *= c;
            }
            acc.axpy(coef, &self.map.position(&point), 1.0);
            let mut d = 0;
            while d < n {
                idx[d] += 1;
                if idx[d] < stencils[d].len() {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == n {
                break;
            }
        }
        acc / h.powi(k as i32)
    }

    fn fd_jet(&self, u: &[f64], order: usize) -> Jet {
        let n = self.intrinsic_dim();
        let partial = |indices: &[usize]| {
            let mut alpha = vec![0usize; n];
            for &i in indices {
                alpha[i] += 1;
            }
            self.fd_partial(u, &alpha)
        };
        let mut jet = Jet {
            n,
            order,
            x: self.map.position(u),
            d1: Vec::new(),
            d2: Vec::new(),
            d3: Vec::new(),
        };
        if order >= 1 {
            jet.d1 = (0..n).map(|a| partial(&[a])).collect();
        }
        if order >= 2 {
            for a in 0..n {
                for b in 0..n {
                    jet.d2.push(partial(&[a, b]));
                }
            }
        }
        if order >= 3 {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        jet.d3.push(partial(&[a, b, c]));
                    }
                }
            }
        }
        jet
    }

    /// Jet of the requested order, closed-form when possible.
    ///
    /// The point is not range-checked: maps extend smoothly past their
    /// rectangles, which nested finite differences rely on.
    pub fn jet(&self, u: &[f64], order: usize, mode: DerivativeMode) -> Result<Jet> {
        if order > 3 {
            return Err(Error::DerivativeOrderUnavailable { needed: order, available: 3 });
        }
        if mode == DerivativeMode::Auto && self.map.closed_form_order() >= order {
            if let Some(jet) = self.map.closed_form_jet(u, order) {
                return Ok(jet);
            }
        }
        Ok(self.fd_jet(u, order))
    }
}
