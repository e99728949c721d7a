//! Simplicial discretizations (closed polylines and triangle meshes) with
//! per-vertex geometry, and weighted point clouds for Gaussian integrals.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::immersion::{fundamental, AnalyticImmersion, DerivativeMode, ParamPoint};
use crate::mesh::{build_mesh_with_params, TriangleMeshN, VertexParam};
use crate::quadrature::SimplexRule;

/// Frame-invariant geometry at a vertex.
#[derive(Debug, Clone)]
pub struct VertexGeometry {
    pub proj_tan: DMatrix<f64>,
    pub h: DVector<f64>,
    /// Unavailable when estimated from a bare mesh.
    pub a_norm_sq: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct DiscreteSurface {
    pub name: String,
    pub intrinsic_dim: usize,
    pub ambient_dim: usize,
    pub vertices: Vec<DVector<f64>>,
    /// Simplices with `intrinsic_dim + 1` vertices each.
    pub cells: Vec<Vec<usize>>,
    pub genus: Option<usize>,
    pub geometry: Vec<VertexGeometry>,
    /// Geometry evaluated on the parent immersion rather than estimated.
    pub exact_geometry: bool,
    pub resolution: usize,
}

/// Measure and gradient inner products `∇φ_a · ∇φ_b` of one P1 simplex.
#[derive(Debug, Clone)]
pub struct CellGeometry {
    pub measure: f64,
    pub grad: DMatrix<f64>,
}

pub fn cell_geometry(points: &[&DVector<f64>]) -> CellGeometry {
    let n = points.len() - 1;
    let edges: Vec<DVector<f64>> = (1..=n).map(|k| points[k] - points[0]).collect();
    let gram = DMatrix::from_fn(n, n, |i, j| edges[i].dot(&edges[j]));
    let det = gram.determinant().max(0.0);
    let factorial = (1..=n).product::<usize>() as f64;
    let measure = det.sqrt() / factorial;
    let ginv = gram.try_inverse().unwrap_or_else(|| DMatrix::zeros(n, n));
    let d = DMatrix::from_fn(n + 1, n, |a, k| if a == 0 { -1.0 } else if a == k + 1 { 1.0 } else { 0.0 });
    CellGeometry {
        measure,
        grad: &d * ginv * d.transpose(),
    }
}

fn ring_average(imm: &AnalyticImmersion, vp: &VertexParam) -> Result<VertexGeometry> {
    let chart = imm.chart(&vp.point)?;
    let span = chart.upper[0] - chart.lower[0];
    let delta = 1e-5 * span;
    let u0 = if (vp.point.u[0] - chart.lower[0]).abs() < (vp.point.u[0] - chart.upper[0]).abs() {
        vp.point.u[0] + delta
    } else {
        vp.point.u[0] - delta
    };
    let samples = 8;
    let dim = imm.ambient_dim();
    let mut p = DMatrix::zeros(dim, dim);
    let mut h = DVector::zeros(dim);
    let mut a2 = 0.0;
    for k in 0..samples {
        let v = chart.lower[1] + (chart.upper[1] - chart.lower[1]) * k as f64 / samples as f64;
        let fd = fundamental::fundamental_data_with(imm, &ParamPoint::new(vp.point.chart, &[u0, v]), DerivativeMode::Auto)?;
        p += &fd.proj_tan;
        h += &fd.h;
        a2 += fd.a_norm_sq;
    }
    let s = samples as f64;
    Ok(VertexGeometry {
        proj_tan: p / s,
        h: h / s,
        a_norm_sq: Some(a2 / s),
    })
}

fn vertex_geometry(imm: &AnalyticImmersion, vp: &VertexParam) -> Result<VertexGeometry> {
    if vp.pole {
        return ring_average(imm, vp);
    }
    let fd = fundamental::fundamental_data_with(imm, &vp.point, DerivativeMode::Auto)?;
    Ok(VertexGeometry {
        proj_tan: fd.proj_tan,
        h: fd.h,
        a_norm_sq: Some(fd.a_norm_sq),
    })
}

impl DiscreteSurface {
    /// Triangle mesh (surfaces) or uniform closed polyline (curves) of an
    /// analytic immersion, with geometry evaluated on the immersion.
    pub fn from_immersion(imm: &AnalyticImmersion, resolution: usize) -> Result<Self> {
        let (vertices, cells, params) = match imm.intrinsic_dim() {
            2 => {
                let (mesh, params) = build_mesh_with_params(imm, resolution)?;
                let vertices = (0..mesh.vertices.len()).map(|i| mesh.vertex(i)).collect();
                let cells = mesh.triangles.iter().map(|t| t.to_vec()).collect();
                (vertices, cells, params)
            }
            _ => {
                let chart = &imm.charts[0];
                if !imm.closed || !chart.periodic[0] {
                    return Err(Error::BadDimensions(format!("{} is not a closed curve", imm.name)));
                }
                let m = resolution.max(3);
                let params: Vec<VertexParam> = (0..m)
                    .map(|i| VertexParam {
                        point: ParamPoint::new(
                            0,
                            &[chart.lower[0] + (chart.upper[0] - chart.lower[0]) * i as f64 / m as f64],
                        ),
                        pole: false,
                    })
                    .collect();
                let vertices = params.iter().map(|p| chart.map.position(&p.point.u)).collect();
                let cells = (0..m).map(|i| vec![i, (i + 1) % m]).collect();
                (vertices, cells, params)
            }
        };
        let geometry = params
            .par_iter()
            .map(|vp| vertex_geometry(imm, vp))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            name: imm.name.clone(),
            intrinsic_dim: imm.intrinsic_dim(),
            ambient_dim: imm.ambient_dim(),
            vertices,
            cells,
            genus: imm.genus,
            geometry,
            exact_geometry: true,
            resolution,
        })
    }

    /// Bare mesh: `H` from the discrete Laplacian of the position, tangent
    /// planes from the one-ring, `|A|²` unavailable.
    pub fn from_mesh(mesh: &TriangleMeshN, name: &str) -> Result<Self> {
        mesh.validate()?;
        let nv = mesh.vertices.len();
        let dim = mesh.ambient_dim;
        let vertices: Vec<DVector<f64>> = (0..nv).map(|i| mesh.vertex(i)).collect();
        let mut kx = vec![DVector::zeros(dim); nv];
        let mut lumped = vec![0.0; nv];
        let mut ring: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for t in &mesh.triangles {
            let pts: Vec<&DVector<f64>> = t.iter().map(|&i| &vertices[i]).collect();
            let cg = cell_geometry(&pts);
            for a in 0..3 {
                lumped[t[a]] += cg.measure / 3.0;
                for b in 0..3 {
                    kx[t[a]].axpy(cg.measure * cg.grad[(a, b)], &vertices[t[b]], 1.0);
                    if a != b && !ring[t[a]].contains(&t[b]) {
                        ring[t[a]].push(t[b]);
                    }
                }
            }
        }
        let geometry = (0..nv)
            .map(|i| {
                let diffs = DMatrix::from_columns(
                    &ring[i].iter().map(|&j| &vertices[j] - &vertices[i]).collect::<Vec<_>>(),
                );
                let svd = diffs.svd(true, false);
                let u = svd.u.expect("left singular vectors requested");
                let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
                order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
                let mut p = DMatrix::zeros(dim, dim);
                for &k in order.iter().take(2) {
                    let c = u.column(k);
                    p += c * c.transpose();
                }
                VertexGeometry {
                    proj_tan: p,
                    h: &kx[i] / lumped[i],
                    a_norm_sq: None,
                }
            })
            .collect();
        Ok(Self {
            name: name.to_string(),
            intrinsic_dim: 2,
            ambient_dim: dim,
            vertices,
            cells: mesh.triangles.iter().map(|t| t.to_vec()).collect(),
            genus: usize::try_from(mesh.genus()).ok(),
            geometry,
            exact_geometry: false,
            resolution: 0,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn cell_points(&self, c: usize) -> Vec<&DVector<f64>> {
        self.cells[c].iter().map(|&i| &self.vertices[i]).collect()
    }

    pub fn cell_geometry(&self, c: usize) -> CellGeometry {
        cell_geometry(&self.cell_points(c))
    }

    pub fn h_norm_sq(&self) -> Vec<f64> {
        self.geometry.iter().map(|g| g.h.norm_squared()).collect()
    }

    pub fn a_norm_sq(&self) -> Option<Vec<f64>> {
        self.geometry.iter().map(|g| g.a_norm_sq).collect()
    }

    /// Total measure (length or area).
    pub fn measure(&self) -> f64 {
        (0..self.cells.len()).map(|c| self.cell_geometry(c).measure).sum()
    }

    /// Vertex coordinate `d` as a nodal vector.
    pub fn coordinate(&self, d: usize) -> Vec<f64> {
        self.vertices.iter().map(|v| v[d]).collect()
    }

    /// Smallest singular value of the centered vertex matrix, normalized by `sqrt(#vertices)`.
    pub fn hyperplane_residual(&self) -> f64 {
        centered_singular_values(&self.vertices).last().copied().unwrap_or(0.0)
    }
}

/// Singular values (descending) of centered points, normalized by `sqrt(count)`.
pub fn centered_singular_values(points: &[DVector<f64>]) -> Vec<f64> {
    let m = points.len() as f64;
    let mean = points.iter().fold(DVector::zeros(points[0].len()), |acc, p| acc + p) / m;
    let centered = DMatrix::from_columns(&points.iter().map(|p| p - &mean).collect::<Vec<_>>());
    let mut sv: Vec<f64> = centered.svd(false, false).singular_values.iter().map(|s| s / m.sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Weighted point cloud approximating `∫ F(x) dA` as `Σ w_i F(x_i)`.
#[derive(Debug, Clone)]
pub struct Cloud {
    pub intrinsic_dim: usize,
    pub ambient_dim: usize,
    /// Flat coordinates, stride `ambient_dim`.
    pub coords: Vec<f64>,
    pub weights: Vec<f64>,
    /// `|H|²` at each point when known.
    pub h2: Option<Vec<f64>>,
}

impl Cloud {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.ambient_dim..(i + 1) * self.ambient_dim]
    }

    /// Interpolates positions and `|H|²` with the given simplex rule.
    pub fn from_discrete(ds: &DiscreteSurface, rule: &SimplexRule) -> Self {
        let dim = ds.ambient_dim;
        let h2v = ds.h_norm_sq();
        let mut coords = Vec::with_capacity(ds.cells.len() * rule.weights.len() * dim);
        let mut weights = Vec::new();
        let mut h2 = Vec::new();
        for (c, cell) in ds.cells.iter().enumerate() {
            let measure = ds.cell_geometry(c).measure;
            for (bary, w) in rule.points.iter().zip(&rule.weights) {
                for d in 0..dim {
                    coords.push(cell.iter().zip(bary).map(|(&v, b)| b * ds.vertices[v][d]).sum());
                }
                weights.push(measure * w);
                h2.push(cell.iter().zip(bary).map(|(&v, b)| b * h2v[v]).sum());
            }
        }
        Self {
            intrinsic_dim: ds.intrinsic_dim,
            ambient_dim: dim,
            coords,
            weights,
            h2: Some(h2),
        }
    }

    /// Tensor Gauss–Legendre nodes of an analytic immersion.
    pub fn from_immersion(imm: &AnalyticImmersion, per_axis: usize) -> Result<Self> {
        let samples = imm.sample(per_axis, DerivativeMode::Auto)?;
        let dim = imm.ambient_dim();
        let mut coords = Vec::with_capacity(samples.len() * dim);
        let mut weights = Vec::with_capacity(samples.len());
        let mut h2 = Vec::with_capacity(samples.len());
        for (node, fd) in &samples {
            coords.extend(fd.frame.x.iter());
            weights.push(node.weight * fd.area_element);
            h2.push(fd.h.norm_squared());
        }
        Ok(Self {
            intrinsic_dim: imm.intrinsic_dim(),
            ambient_dim: dim,
            coords,
            weights,
            h2: Some(h2),
        })
    }

    /// Weighted centroid.
    pub fn centroid(&self) -> Vec<f64> {
        let total: f64 = self.weights.iter().sum();
        let mut c = vec![0.0; self.ambient_dim];
        for i in 0..self.len() {
            for (d, x) in self.point(i).iter().enumerate() {
                c[d] += self.weights[i] * x;
            }
        }
        c.iter_mut().for_each(|x| *x /= total);
        c
    }
}
