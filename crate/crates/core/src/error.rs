//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate immersion at parameter {param:?}: det g = {det:.3e}")]
    DegenerateImmersion { param: Vec<f64>, det: f64 },

    #[error("parameter {0:?} lies outside every chart")]
    OutsideChart(Vec<f64>),

    #[error("mesh validation failed: {}", .0.join("; "))]
    MeshValidation(Vec<String>),

    #[error("quadrature under-resolved: refinement levels differ by {rel:.3e} (relative)")]
    QuadratureUnderResolved { rel: f64 },

    #[error("optimizer stalled: no start converged after {iterations} iterations")]
    OptimizerStalled { iterations: usize },

    #[error("input is not a shrinker: sup |H - x^perp/2| = {residual:.3e}")]
    NotAShrinker { residual: f64 },

    #[error("weight |H|^2 vanishes: min = {min:.3e}")]
    VanishingWeight { min: f64 },

    #[error("eigensolver failure: {0}")]
    SolverFailure(String),

    #[error("surface is not contained in a proper linear subspace (smallest singular value {0:.3e})")]
    NotInSubspace(f64),

    #[error("eigenbasis too small: need index {needed}, have {available}")]
    InsufficientEigenbasis { needed: usize, available: usize },

    #[error("operation requires codimension one (got intrinsic {intrinsic}, ambient {ambient})")]
    WrongCodimension { intrinsic: usize, ambient: usize },

    #[error("initial curvature {0} must be positive")]
    NonPositiveCurvature(f64),

    #[error("curvature left the admissible range: k = {0:.3e}")]
    BlowUp(f64),

    #[error("no closed curve with rotation index {p} and {q} lobes in the scanned bracket")]
    NoRoot { p: usize, q: usize },

    #[error("closed-form derivatives of order {needed} unavailable (chart provides {available})")]
    DerivativeOrderUnavailable { needed: usize, available: usize },

    #[error("surface does not lie on a sphere of radius sqrt(2n) about the origin: deviation {0:.3e}")]
    NotSpherical(f64),

    #[error("mean curvature vanishes: |H| = {0:.3e}")]
    VanishingH(f64),

    #[error("mu_|H|^2 = {0} is not within the borderline window around 1/2")]
    NotBorderline(f64),

    #[error("bad dimensions: {0}")]
    BadDimensions(String),

    #[error("not an eigenfunction: {0}")]
    NotAnEigenfunction(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
