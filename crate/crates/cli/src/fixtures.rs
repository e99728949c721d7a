//! Built-in analytic fixtures and their known values.

use std::f64::consts::{E, PI, SQRT_2};
use std::sync::OnceLock;

use shrinklab_core::curves::{shoot_closed, CurveConfig, CurveShrinker};
use shrinklab_core::discrete::DiscreteSurface;
use shrinklab_core::immersion::{fixtures, AnalyticImmersion};
use shrinklab_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureId {
    Plane,
    Sphere2,
    Sphere3,
    Circle,
    Clifford,
    AlCurve,
    GraphZm,
}

#[derive(Debug)]
pub struct Fixture {
    pub id: FixtureId,
    pub name: &'static str,
    pub description: &'static str,
}

pub const FIXTURES: [Fixture; 7] = [
    Fixture {
        id: FixtureId::Plane,
        name: "plane",
        description: "flat plane through the origin in R^3",
    },
    Fixture {
        id: FixtureId::Sphere2,
        name: "sphere2",
        description: "round sphere of radius 2 in R^3",
    },
    Fixture {
        id: FixtureId::Sphere3,
        name: "sphere3",
        description: "round sphere of radius 3 in R^3 (not a shrinker)",
    },
    Fixture {
        id: FixtureId::Circle,
        name: "circle",
        description: "circle of radius sqrt(2) in R^2",
    },
    Fixture {
        id: FixtureId::Clifford,
        name: "clifford",
        description: "Clifford torus S^1(sqrt 2) x S^1(sqrt 2) in R^4",
    },
    Fixture {
        id: FixtureId::AlCurve,
        name: "al-curve",
        description: "Abresch-Langer curve with rotation index 2 and three lobes",
    },
    Fixture {
        id: FixtureId::GraphZm,
        name: "graph-zm",
        description: "graph of z^2 over the unit disk in C^2 (complex curve)",
    },
];

pub const GRAPH_DEGREE: u32 = 2;

pub fn lookup(name: &str) -> Option<&'static Fixture> {
    FIXTURES.iter().find(|f| f.name == name)
}

/// The first non-circular closed curve, solved once per process.
pub fn al_curve() -> Result<&'static CurveShrinker> {
    static CURVE: OnceLock<std::result::Result<CurveShrinker, String>> = OnceLock::new();
    CURVE
        .get_or_init(|| shoot_closed(2, 3, &CurveConfig::default()).map_err(|e| e.to_string()))
        .as_ref()
        .map_err(|e| Error::SolverFailure(e.clone()))
}

pub fn circle_curve() -> Result<&'static CurveShrinker> {
    static CURVE: OnceLock<std::result::Result<CurveShrinker, String>> = OnceLock::new();
    CURVE
        .get_or_init(|| shoot_closed(1, 1, &CurveConfig::default()).map_err(|e| e.to_string()))
        .as_ref()
        .map_err(|e| Error::SolverFailure(e.clone()))
}

/// `(value, multiplicity)` levels of the drift Laplacian.
pub type Levels = Vec<(f64, usize)>;

impl Fixture {
    pub fn immersion(&self) -> Result<AnalyticImmersion> {
        Ok(match self.id {
            FixtureId::Plane => fixtures::plane(3),
            FixtureId::Sphere2 => fixtures::sphere(2.0, 3),
            FixtureId::Sphere3 => fixtures::sphere(3.0, 3),
            FixtureId::Circle => fixtures::circle(SQRT_2, 2),
            FixtureId::Clifford => fixtures::clifford(),
            FixtureId::AlCurve => al_curve()?.immersion(2),
            FixtureId::GraphZm => fixtures::graph_zm(GRAPH_DEGREE, 1.0),
        })
    }

    pub fn is_curve(&self) -> bool {
        matches!(self.id, FixtureId::Circle | FixtureId::AlCurve)
    }

    /// Closed fixtures have a mesh or polyline discretization.
    pub fn closed(&self) -> bool {
        !matches!(self.id, FixtureId::Plane | FixtureId::GraphZm)
    }

    pub fn shrinker(&self) -> bool {
        !matches!(self.id, FixtureId::Sphere3 | FixtureId::GraphZm)
    }

    /// Mesh at `resolution`; the curve keeps its own arclength samples.
    pub fn discrete(&self, resolution: usize) -> Result<DiscreteSurface> {
        match self.id {
            FixtureId::AlCurve => al_curve()?.discrete(2),
            _ if !self.closed() => Err(Error::BadDimensions(format!("{} has no closed discretization", self.name))),
            _ => DiscreteSurface::from_immersion(&self.immersion()?, resolution),
        }
    }

    pub fn entropy(&self) -> Option<f64> {
        match self.id {
            FixtureId::Plane => Some(1.0),
            FixtureId::Sphere2 | FixtureId::Sphere3 => Some(4.0 / E),
            FixtureId::Circle => Some((2.0 * PI / E).sqrt()),
            FixtureId::Clifford => Some(2.0 * PI / E),
            _ => None,
        }
    }

    /// Dilation factor at which the entropy is attained.
    pub fn entropy_scale(&self) -> Option<f64> {
        match self.id {
            FixtureId::Sphere3 => Some(2.0 / 3.0),
            FixtureId::GraphZm => None,
            _ => Some(1.0),
        }
    }

    /// `W = ∫ |H|² e^{-f}` normalized; `|H|² = |x|²/4` on the round shrinkers.
    pub fn willmore(&self) -> Option<f64> {
        match self.id {
            FixtureId::Plane | FixtureId::GraphZm => Some(0.0),
            FixtureId::Sphere2 => Some(4.0 / E),
            FixtureId::Circle => Some(0.5 * (2.0 * PI / E).sqrt()),
            FixtureId::Clifford => Some(2.0 * PI / E),
            _ => None,
        }
    }

    /// `n λ - 2 W`: zero on closed spherical shrinkers, `n` on the plane.
    pub fn willmore_gap(&self) -> Option<f64> {
        match self.id {
            FixtureId::Plane => Some(2.0),
            FixtureId::Sphere2 | FixtureId::Circle | FixtureId::Clifford => Some(0.0),
            _ => None,
        }
    }

    /// `sup |H - x^⊥/2|`.
    pub fn shrinker_residual(&self) -> f64 {
        match self.id {
            // |2/r - r/2| at r = 3.
            FixtureId::Sphere3 => 5.0 / 6.0,
            _ => 0.0,
        }
    }

    pub fn spectrum(&self) -> Option<Levels> {
        match self.id {
            FixtureId::Sphere2 => Some(vec![(0.0, 1), (0.5, 3), (1.5, 5), (3.0, 7)]),
            FixtureId::Circle => Some(vec![(0.0, 1), (0.5, 2), (2.0, 2)]),
            FixtureId::Clifford => Some(vec![(0.0, 1), (0.5, 4), (1.0, 4), (2.0, 4)]),
            _ => None,
        }
    }
}

/// Expected `μ_0..μ_count` unrolled from the levels, if known that far.
pub fn unrolled(levels: &Levels, count: usize) -> Vec<f64> {
    levels
        .iter()
        .flat_map(|&(v, m)| std::iter::repeat_n(v, m))
        .take(count + 1)
        .collect()
}
