//! Quadrature rules: Gauss–Legendre on intervals, simplex rules for P1 elements.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

/// Gauss–Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(count: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let count = NonZeroUsize::new(count.max(1)).expect("count is at least one");
    let rule = GaussLegendre::new(count);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut pairs: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .into_iter()
        .map(|(x, w)| (mid + half * x, half * w))
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    pairs
}

/// A rule on the reference simplex: barycentric points and weights summing to one.
#[derive(Debug, Clone)]
pub struct SimplexRule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SimplexRule {
    /// Interior 3-point rule on the triangle, exact for quadratics.
    pub fn triangle3() -> Self {
        let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
        Self {
            points: vec![vec![a, b, b], vec![b, a, b], vec![b, b, a]],
            weights: vec![1.0 / 3.0; 3],
        }
    }

    /// Strang–Fix 6-point rule on the triangle, exact for quartics.
    pub fn triangle6() -> Self {
        let (a1, w1) = (0.445_948_490_915_965, 0.223_381_589_678_011);
        let (a2, w2) = (0.091_576_213_509_771, 0.109_951_743_655_322);
        let (b1, b2) = (1.0 - 2.0 * a1, 1.0 - 2.0 * a2);
        Self {
            points: vec![
                vec![b1, a1, a1],
                vec![a1, b1, a1],
                vec![a1, a1, b1],
                vec![b2, a2, a2],
                vec![a2, b2, a2],
                vec![a2, a2, b2],
            ],
            weights: vec![w1, w1, w1, w2, w2, w2],
        }
    }

    /// Gauss–Legendre rule on the segment in barycentric form.
    pub fn segment(count: usize) -> Self {
        let pairs = gauss_legendre(count, 0.0, 1.0);
        Self {
            points: pairs.iter().map(|&(t, _)| vec![1.0 - t, t]).collect(),
            weights: pairs.iter().map(|&(_, w)| w).collect(),
        }
    }

    /// Default element rule: 3 points, for segments or triangles.
    pub fn standard(intrinsic_dim: usize) -> Self {
        match intrinsic_dim {
            1 => Self::segment(3),
            _ => Self::triangle3(),
        }
    }

    /// Higher-order companion rule for refinement checks.
    pub fn refined(intrinsic_dim: usize) -> Self {
        match intrinsic_dim {
            1 => Self::segment(6),
            _ => Self::triangle6(),
        }
    }
}
