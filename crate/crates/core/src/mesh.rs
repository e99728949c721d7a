//! Closed triangle meshes with vertices in `R^N`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::immersion::{AnalyticImmersion, ParamPoint};

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMeshN {
    pub ambient_dim: usize,
    pub vertices: Vec<Vec<f64>>,
    pub triangles: Vec<[usize; 3]>,
}

/// Where a mesh vertex came from on its parent immersion.
#[derive(Debug, Clone)]
pub struct VertexParam {
    pub point: ParamPoint,
    /// Vertex sits where the chart collapses (a pole).
    pub pole: bool,
}

impl TriangleMeshN {
    pub fn vertex(&self, i: usize) -> DVector<f64> {
        DVector::from_column_slice(&self.vertices[i])
    }

    /// Edges with the number of triangles using each.
    pub fn edge_use(&self) -> BTreeMap<(usize, usize), usize> {
        let mut edges = BTreeMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        edges
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_use().len() as i64 + self.triangles.len() as i64
    }

    /// `1 - χ/2`; meaningful only for valid closed meshes.
    pub fn genus(&self) -> i64 {
        1 - self.euler_characteristic() / 2
    }

    pub fn triangle_area(&self, t: &[usize; 3]) -> f64 {
        let p = |i: usize| self.vertex(t[i]);
        let (e1, e2) = (p(1) - p(0), p(2) - p(0));
        let g = e1.dot(&e1) * e2.dot(&e2) - e1.dot(&e2).powi(2);
        0.5 * g.max(0.0).sqrt()
    }

    pub fn area(&self) -> f64 {
        self.triangles.iter().map(|t| self.triangle_area(t)).sum()
    }

    /// Every violated invariant, in a deterministic order.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let nv = self.vertices.len();
        for (i, v) in self.vertices.iter().enumerate() {
            if v.len() != self.ambient_dim {
                out.push(format!("vertex {i} has {} coordinates, expected {}", v.len(), self.ambient_dim));
            } else if v.iter().any(|x| !x.is_finite()) {
                out.push(format!("vertex {i} has a non-finite coordinate"));
            }
        }
        if !out.is_empty() {
            return out;
        }
        let mut indices_ok = true;
        for (k, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&i| i >= nv) {
                out.push(format!("triangle {k} references a vertex out of range"));
                indices_ok = false;
            } else if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                out.push(format!("triangle {k} repeats a vertex"));
                indices_ok = false;
            }
        }
        if !indices_ok {
            return out;
        }
        for (&(a, b), &count) in &self.edge_use() {
            if count != 2 {
                out.push(format!("edge ({a}, {b}) is shared by {count} triangle(s), expected 2"));
            }
        }
        for (k, t) in self.triangles.iter().enumerate() {
            let longest = (0..3)
                .map(|i| (self.vertex(t[i]) - self.vertex(t[(i + 1) % 3])).norm_squared())
                .fold(0.0, f64::max);
            let area = self.triangle_area(t);
            if area < 1e-14 * longest {
                out.push(format!("triangle {k} is degenerate (area {area:.3e})"));
            }
        }
        if self.euler_characteristic() % 2 != 0 {
            out.push(format!("Euler characteristic {} is odd", self.euler_characteristic()));
        } else if self.genus() < 0 {
            out.push(format!("Euler characteristic {} gives negative genus", self.euler_characteristic()));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::MeshValidation(v.into_iter().take(10).collect()))
        }
    }
}

/// Structured triangulation of a closed 2-dimensional immersion.
///
/// Axis 0 gets `resolution` intervals; a periodic axis 1 paired with a
/// non-periodic axis 0 gets twice as many. Rows where the chart collapses
/// to a point become single vertices.
pub fn build_mesh_with_params(imm: &AnalyticImmersion, resolution: usize) -> Result<(TriangleMeshN, Vec<VertexParam>)> {
    if imm.intrinsic_dim() != 2 || !imm.closed {
        return Err(Error::MeshValidation(vec![format!(
            "{} is not a closed surface",
            imm.name
        )]));
    }
    let res = resolution.max(2);
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut params = Vec::new();
    let mut triangles = Vec::new();
    for (ci, chart) in imm.charts.iter().enumerate() {
        let (pu, pv) = (chart.periodic[0], chart.periodic[1]);
        if !pv {
            return Err(Error::MeshValidation(vec![format!(
                "chart {ci} of {} has no periodic axis to close the mesh",
                imm.name
            )]));
        }
        let nu = res;
        let nv = if pu { res } else { 2 * res };
        let rows = if pu { nu } else { nu + 1 };
        let du = (chart.upper[0] - chart.lower[0]) / nu as f64;
        let dv = (chart.upper[1] - chart.lower[1]) / nv as f64;
        let mut row_base = Vec::with_capacity(rows);
        let mut row_pole = Vec::with_capacity(rows);
        for i in 0..rows {
            let u = chart.lower[0] + i as f64 * du;
            let pts: Vec<DVector<f64>> = (0..nv)
                .map(|j| chart.map.position(&[u, chart.lower[1] + j as f64 * dv]))
                .collect();
            let spread = pts.iter().map(|p| (p - &pts[0]).norm()).fold(0.0, f64::max);
            row_base.push(vertices.len());
            if spread < 1e-12 * imm.length_scale {
                row_pole.push(true);
                vertices.push(pts[0].iter().copied().collect());
                params.push(VertexParam {
                    point: ParamPoint::new(ci, &[u, chart.lower[1]]),
                    pole: true,
                });
            } else {
                row_pole.push(false);
                for (j, p) in pts.iter().enumerate() {
                    vertices.push(p.iter().copied().collect());
                    params.push(VertexParam {
                        point: ParamPoint::new(ci, &[u, chart.lower[1] + j as f64 * dv]),
                        pole: false,
                    });
                }
            }
        }
        let idx = |i: usize, j: usize| {
            let i = i % rows;
            if row_pole[i] {
                row_base[i]
            } else {
                row_base[i] + j % nv
            }
        };
        let bands = if pu { rows } else { rows - 1 };
        for i in 0..bands {
            for j in 0..nv {
                let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                for t in [[a, b, c], [a, c, d]] {
                    if t[0] != t[1] && t[1] != t[2] && t[0] != t[2] {
                        triangles.push(t);
                    }
                }
            }
        }
    }
    let mesh = TriangleMeshN {
        ambient_dim: imm.ambient_dim(),
        vertices,
        triangles,
    };
    mesh.validate()?;
    if let Some(g) = imm.genus {
        if mesh.genus() != g as i64 {
            return Err(Error::MeshValidation(vec![format!(
                "mesh genus {} differs from declared genus {g}",
                mesh.genus()
            )]));
        }
    }
    Ok((mesh, params))
}

pub fn build_mesh(imm: &AnalyticImmersion, resolution: usize) -> Result<TriangleMeshN> {
    build_mesh_with_params(imm, resolution).map(|(m, _)| m)
}

#[derive(Serialize, Deserialize)]
struct Header {
    ambient_dim: usize,
    genus: i64,
}

#[derive(Deserialize)]
struct MeshFile {
    header: Header,
    vertices: Vec<Vec<f64>>,
    triangles: Vec<[usize; 3]>,
}

#[derive(Serialize)]
struct MeshFileOut<'a> {
    header: Header,
    vertices: Vec<Vec<Box<RawValue>>>,
    triangles: &'a [[usize; 3]],
}

/// Float rendered with 17 significant digits.
pub fn raw_float(x: f64) -> Box<RawValue> {
    let s = if x.is_finite() { format!("{x:.16e}") } else { "null".to_string() };
    RawValue::from_string(s).expect("formatted float is valid JSON")
}

impl TriangleMeshN {
    pub fn to_json(&self) -> String {
        let out = MeshFileOut {
            header: Header {
                ambient_dim: self.ambient_dim,
                genus: self.genus(),
            },
            vertices: self
                .vertices
                .iter()
                .map(|v| v.iter().map(|&x| raw_float(x)).collect())
                .collect(),
            triangles: &self.triangles,
        };
        serde_json::to_string(&out).expect("mesh serializes")
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_json().as_bytes())?;
        Ok(())
    }

    /// Parses and validates; the header genus must match the Euler characteristic.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: MeshFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mesh = TriangleMeshN {
            ambient_dim: file.header.ambient_dim,
            vertices: file.vertices,
            triangles: file.triangles,
        };
        let mut violations = mesh.violations();
        if violations.is_empty() && mesh.genus() != file.header.genus {
            violations.push(format!(
                "header genus {} disagrees with Euler-characteristic genus {}",
                file.header.genus,
                mesh.genus()
            ));
        }
        if violations.is_empty() {
            Ok(mesh)
        } else {
            Err(Error::MeshValidation(violations.into_iter().take(10).collect()))
        }
    }

    pub fn read_json<R: Read>(mut r: R) -> Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn octahedron() -> TriangleMeshN {
        let vertices = vec![
            vec![1.0, 0.0, 0.0],
            vec![-1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, -1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.0, -1.0],
        ];
        let triangles = vec![
            [0, 2, 4],
            [2, 1, 4],
            [1, 3, 4],
            [3, 0, 4],
            [2, 0, 5],
            [1, 2, 5],
            [3, 1, 5],
            [0, 3, 5],
        ];
        TriangleMeshN {
            ambient_dim: 3,
            vertices,
            triangles,
        }
    }

    #[test]
    fn octahedron_is_a_sphere() {
        let m = octahedron();
        assert!(m.violations().is_empty());
        assert_eq!(m.genus(), 0);
    }

    #[test]
    fn open_edge_is_named() {
        let mut m = octahedron();
        m.triangles.pop();
        let v = m.violations();
        assert!(v.iter().any(|s| s.contains("edge (0, 3)")), "{v:?}");
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut m = octahedron();
        m.vertices[0][1] = 0.1 + 0.2;
        let text = m.to_json();
        let back = TriangleMeshN::from_json(&text).unwrap();
        assert_eq!(back, m);
    }
}
