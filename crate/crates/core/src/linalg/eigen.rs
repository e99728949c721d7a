//! Generalized symmetric eigenproblems `K u = mu M u` with `M` positive
//! definite: a dense Cholesky-reduction route for small systems and a
//! shift-invert block subspace iteration for FEM-sized ones.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::envelope::EnvelopeCholesky;
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    Dense,
    ShiftInvertSubspace,
}

#[derive(Debug, Clone)]
pub struct EigenOptions {
    /// Number of eigenpairs wanted, counting from the smallest.
    pub count: usize,
    /// Shift `sigma` with `K - sigma M` positive definite.
    pub shift: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Systems up to this size go through the dense route.
    pub dense_limit: usize,
    pub seed: u64,
}

impl EigenOptions {
    pub fn new(count: usize) -> Self {
        Self {
            count,
            shift: -0.1,
            tol: 1e-10,
            max_iter: 400,
            dense_limit: 320,
            seed: 0x5eed,
        }
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }
}

/// A group of consecutive eigenvalues closer than the cluster tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    pub start: usize,
    pub multiplicity: usize,
    pub mean: f64,
}

/// Sorted eigenpairs with `M`-orthonormal eigenvectors.
#[derive(Debug, Clone, Serialize)]
pub struct EigenResult {
    pub values: Vec<f64>,
    #[serde(skip)]
    pub vectors: Vec<Vec<f64>>,
    /// `|K u - mu M u| / |M u|` per pair.
    pub residuals: Vec<f64>,
    pub cluster_tol: f64,
    pub clusters: Vec<Cluster>,
    pub method: SolverMethod,
    pub iterations: usize,
}

impl EigenResult {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// Re-groups the eigenvalues with a new tolerance.
    pub fn recluster(&mut self, tol: f64) {
        self.cluster_tol = tol;
        self.clusters = cluster(&self.values, tol);
    }

    /// Cluster containing index `k`.
    pub fn cluster_of(&self, k: usize) -> Option<&Cluster> {
        self.clusters
            .iter()
            .find(|c| (c.start..c.start + c.multiplicity).contains(&k))
    }

    /// Largest `|u_i^T M u_j - delta_ij|`.
    pub fn orthonormality_defect(&self, m: &CsrMatrix) -> f64 {
        let mv: Vec<Vec<f64>> = self.vectors.iter().map(|v| m.mul_vec(v)).collect();
        let mut worst = 0.0f64;
        for (i, u) in self.vectors.iter().enumerate() {
            for (j, w) in mv.iter().enumerate() {
                let d = dot(u, w) - if i == j { 1.0 } else { 0.0 };
                worst = worst.max(d.abs());
            }
        }
        worst
    }
}

/// Default clustering tolerance: `20 * max(gap_estimate, 1e-3)`.
pub fn default_cluster_tol(gap_estimate: f64) -> f64 {
    20.0 * gap_estimate.max(1e-3)
}

pub fn cluster(values: &[f64], tol: f64) -> Vec<Cluster> {
    let mut out: Vec<Cluster> = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > tol {
            let slice = &values[start..i];
            if !slice.is_empty() {
                out.push(Cluster {
                    start,
                    multiplicity: slice.len(),
                    mean: slice.iter().sum::<f64>() / slice.len() as f64,
                });
            }
            start = i;
        }
    }
    out
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn residual(k: &CsrMatrix, m: &CsrMatrix, mu: f64, u: &[f64]) -> f64 {
    let ku = k.mul_vec(u);
    let mu_vec = m.mul_vec(u);
    let r: Vec<f64> = ku.iter().zip(&mu_vec).map(|(a, b)| a - mu * b).collect();
    let denom = norm(&mu_vec);
    if denom == 0.0 {
        f64::INFINITY
    } else {
        norm(&r) / denom
    }
}

/// Sign convention: the entry of largest magnitude is positive.
fn fix_sign(v: &mut [f64]) {
    let (mut best, mut idx) = (0.0f64, 0);
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best + 1e-12 * best {
            best = x.abs();
            idx = i;
        }
    }
    if v.get(idx).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Dense generalized eigensolver: all pairs of `K u = mu M u`.
pub fn dense_generalized(k: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = k.nrows();
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SolverFailure("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv_k = l
        .solve_lower_triangular(k)
        .ok_or_else(|| Error::SolverFailure("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&linv_k.transpose())
        .ok_or_else(|| Error::SolverFailure("singular Cholesky factor".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lt = l.transpose();
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for &j in &order {
        let y = eig.eigenvectors.column(j).into_owned();
        let v = lt
            .solve_upper_triangular(&y)
            .ok_or_else(|| Error::SolverFailure("singular Cholesky factor".into()))?;
        let mut v: Vec<f64> = v.iter().copied().collect();
        fix_sign(&mut v);
        values.push(eig.eigenvalues[j]);
        vectors.push(v);
    }
    Ok((values, vectors))
}

/// Smallest `opts.count` eigenpairs of the pencil `(K, M)`.
pub fn smallest_generalized(k: &CsrMatrix, m: &CsrMatrix, opts: &EigenOptions) -> Result<EigenResult> {
    let n = k.dim();
    if m.dim() != n {
        return Err(Error::BadDimensions(format!("K is {n}, M is {}", m.dim())));
    }
    if opts.count == 0 || opts.count > n {
        return Err(Error::BadDimensions(format!(
            "requested {} eigenpairs of a dimension-{n} problem",
            opts.count
        )));
    }
    let (values, vectors, method, iterations) = if n <= opts.dense_limit {
        let (vals, vecs) = dense_generalized(&k.to_dense(), &m.to_dense())?;
        (
            vals[..opts.count].to_vec(),
            vecs[..opts.count].to_vec(),
            SolverMethod::Dense,
            1,
        )
    } else {
        let (vals, vecs, it) = subspace_iteration(k, m, opts)?;
        (vals, vecs, SolverMethod::ShiftInvertSubspace, it)
    };
    let residuals: Vec<f64> = values
        .iter()
        .zip(&vectors)
        .map(|(&mu, u)| residual(k, m, mu, u))
        .collect();
    let tol = default_cluster_tol(0.0);
    Ok(EigenResult {
        clusters: cluster(&values, tol),
        cluster_tol: tol,
        values,
        vectors,
        residuals,
        method,
        iterations,
    })
}

fn m_orthonormalize(m: &CsrMatrix, block: &mut Vec<Vec<f64>>, rng: &mut ChaCha8Rng) {
    let n = m.dim();
    for j in 0..block.len() {
        for _attempt in 0..3 {
            for _pass in 0..2 {
                let mv = m.mul_vec(&block[j]);
                for i in 0..j {
                    let c = dot(&block[i], &mv);
                    let (done, rest) = block.split_at_mut(j);
                    for (x, y) in rest[0].iter_mut().zip(&done[i]) {
                        *x -= c * y;
                    }
                }
            }
            let mv = m.mul_vec(&block[j]);
            let nrm = dot(&block[j], &mv).sqrt();
            if nrm > 1e-300 && nrm.is_finite() {
                block[j].iter_mut().for_each(|x| *x /= nrm);
                break;
            }
            block[j] = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        }
    }
}

fn subspace_iteration(
    k: &CsrMatrix,
    m: &CsrMatrix,
    opts: &EigenOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>, usize)> {
    let n = k.dim();
    let want = opts.count;
    let p = (2 * want).max(want + 8).min(n);
    let shifted = k.add_scaled(-opts.shift, m);
    let chol = EnvelopeCholesky::factor(&shifted)?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut block: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            if j == 0 {
                vec![1.0; n]
            } else {
                (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
            }
        })
        .collect();
    m_orthonormalize(m, &mut block, &mut rng);

    let mut last_worst = f64::INFINITY;
    let mut best_worst = f64::INFINITY;
    let mut stalled = 0;
    for it in 1..=opts.max_iter {
        let mut next: Vec<Vec<f64>> = block.par_iter().map(|x| chol.solve(&m.mul_vec(x))).collect();
        m_orthonormalize(m, &mut next, &mut rng);

        let kv: Vec<Vec<f64>> = next.par_iter().map(|v| k.mul_vec(v)).collect();
        let mut kr = DMatrix::zeros(p, p);
        for i in 0..p {
            for j in 0..=i {
                let v = 0.5 * (dot(&next[i], &kv[j]) + dot(&next[j], &kv[i]));
                kr[(i, j)] = v;
                kr[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(kr);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let ritz: Vec<Vec<f64>> = order
            .par_iter()
            .map(|&c| {
                let q: DVector<f64> = eig.eigenvectors.column(c).into_owned();
                let mut v = vec![0.0; n];
                for (i, yi) in next.iter().enumerate() {
                    let qi = q[i];
                    for (a, b) in v.iter_mut().zip(yi) {
                        *a += qi * b;
                    }
                }
                v
            })
            .collect();
        let values: Vec<f64> = order.iter().map(|&c| eig.eigenvalues[c]).collect();
        block = ritz;

        let worst = (0..want)
            .map(|j| residual(k, m, values[j], &block[j]))
            .fold(0.0, f64::max);
        last_worst = worst;
        if worst < 0.5 * best_worst {
            best_worst = worst;
            stalled = 0;
        } else {
            stalled += 1;
        }
        // Below 1e-8 a residual that has stopped improving sits at the round-off floor.
        if worst < opts.tol || (worst < 1e-8 && stalled >= 10) {
            let mut vectors: Vec<Vec<f64>> = block.into_iter().take(want).collect();
            vectors.iter_mut().for_each(|v| fix_sign(v));
            return Ok((values[..want].to_vec(), vectors, it));
        }
    }
    let (lo, hi) = chol.pivot_range();
    Err(Error::SolverFailure(format!(
        "subspace iteration did not converge in {} iterations (worst residual {last_worst:.3e}, \
         pivot range [{lo:.3e}, {hi:.3e}], shift {})",
        opts.max_iter, opts.shift
    )))
}
