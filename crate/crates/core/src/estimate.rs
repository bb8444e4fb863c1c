//! Residual-based a posteriori error estimators for
//! `-∇·(A∇u) + b u = q`, in the energy norm and in the maximum norm.

use crate::error::{Error, Result};
use crate::fem::{gauss_edge, FeFunction, Quadrature};
use crate::mesh::{Mesh, Point, NO_CELL};

/// Coefficient data of the residual. All callbacks take a cell and a
/// barycentric point on that cell.
pub struct ResidualData<'a> {
    /// Diffusion value and its spatial gradient.
    pub diffusion: &'a dyn Fn(usize, [f64; 3]) -> (f64, [f64; 2]),
    pub reaction: &'a dyn Fn(usize, [f64; 3]) -> f64,
    pub source: &'a dyn Fn(usize, [f64; 3]) -> f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorNorm {
    Energy,
    Max,
}

#[derive(Clone, Debug)]
pub struct EstimatorBreakdown {
    pub norm: EstimatorNorm,
    /// Energy: squared local indicators `ξ_T²` (edge terms split evenly between
    /// neighbours). Max: largest local term touching each cell.
    pub cells: Vec<f64>,
    /// Volume, interior-jump and Neumann contributions. Energy totals are
    /// square roots of sums of squares; max totals are maxima.
    pub terms: [f64; 3],
    /// `|log h_max|²` for the max norm, 1 for the energy norm.
    pub log_factor: f64,
    pub total: f64,
}

impl EstimatorBreakdown {
    /// Squared per-cell indicators suitable for bulk marking.
    pub fn marking_indicators(&self) -> Vec<f64> {
        match self.norm {
            EstimatorNorm::Energy => self.cells.clone(),
            EstimatorNorm::Max => self.cells.iter().map(|v| (self.log_factor * v).powi(2)).collect(),
        }
    }
}

/// Per-cell sum of the marking indicators of two breakdowns.
pub fn combined_indicator(state: &EstimatorBreakdown, adjoint: Option<&EstimatorBreakdown>) -> Result<Vec<f64>> {
    let mut s = state.marking_indicators();
    if let Some(a) = adjoint {
        if a.cells.len() != s.len() {
            return Err(Error::MeshMismatch);
        }
        for (x, y) in s.iter_mut().zip(a.marking_indicators()) {
            *x += y;
        }
    }
    Ok(s)
}

fn residual(u: &FeFunction, data: &ResidualData<'_>, cell: usize, l: [f64; 3]) -> f64 {
    let (a, grad_a) = (data.diffusion)(cell, l);
    let g = u.gradient(cell, l);
    (data.source)(cell, l) + a * u.laplacian(cell) + grad_a[0] * g[0] + grad_a[1] * g[1]
        - (data.reaction)(cell, l) * u.eval(cell, l)
}

fn flux(u: &FeFunction, data: &ResidualData<'_>, cell: usize, x: Point, n: [f64; 2]) -> f64 {
    let l = u.space().barycentric(cell, x);
    let (a, _) = (data.diffusion)(cell, l);
    let g = u.gradient(cell, l);
    a * (g[0] * n[0] + g[1] * n[1])
}

/// Unit normal of edge `e`, pointing out of its first cell.
fn outward_normal(mesh: &Mesh, e: usize) -> [f64; 2] {
    let edge = &mesh.edges()[e];
    let [a, b] = edge.vertices;
    let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
    let len = mesh.edge_length(e);
    let mut n = [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len];
    let c = mesh.centroid(edge.cells[0]);
    if (c[0] - pa[0]) * n[0] + (c[1] - pa[1]) * n[1] > 0.0 {
        n = [-n[0], -n[1]];
    }
    n
}

/// Jump samples of the normal flux on an edge, at the given parameters.
fn edge_jumps(u: &FeFunction, data: &ResidualData<'_>, e: usize, params: &[f64], natural: bool) -> Option<Vec<f64>> {
    let mesh = u.space().mesh();
    let edge = &mesh.edges()[e];
    if edge.is_boundary() && !natural {
        return None;
    }
    let n = outward_normal(mesh, e);
    let (pa, pb) = (mesh.vertices()[edge.vertices[0]], mesh.vertices()[edge.vertices[1]]);
    Some(
        params
            .iter()
            .map(|&s| {
                let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                let f0 = flux(u, data, edge.cells[0], x, n);
                if edge.cells[1] == NO_CELL {
                    f0
                } else {
                    f0 - flux(u, data, edge.cells[1], x, n)
                }
            })
            .collect(),
    )
}

/// Energy-norm estimator. Boundary edges whose tag is not Dirichlet for
/// `u`'s space contribute Neumann terms (homogeneous data).
pub fn energy_estimator(u: &FeFunction, data: &ResidualData<'_>) -> EstimatorBreakdown {
    let space = u.space();
    let mesh = space.mesh();
    let quad = Quadrature::order5();
    let mut cells = vec![0.0; mesh.num_cells()];
    let mut sq = [0.0; 3];
    for (c, slot) in cells.iter_mut().enumerate() {
        let h = mesh.diameter(c);
        let int: f64 =
            quad.points.iter().zip(&quad.weights).map(|(&l, w)| w * residual(u, data, c, l).powi(2)).sum::<f64>()
                * mesh.areas()[c];
        *slot = h * h * int;
        sq[0] += *slot;
    }
    let gauss = gauss_edge();
    let params: Vec<f64> = gauss.iter().map(|g| g.0).collect();
    for (e, edge) in mesh.edges().iter().enumerate() {
        let natural = edge.is_boundary() && !space.is_dirichlet_tag(edge.tag);
        let Some(j) = edge_jumps(u, data, e, &params, natural) else {
            continue;
        };
        let he = mesh.edge_length(e);
        let term = he * he * j.iter().zip(&gauss).map(|(v, g)| g.1 * v * v).sum::<f64>();
        if edge.is_boundary() {
            sq[2] += term;
            cells[edge.cells[0]] += term;
        } else {
            sq[1] += term;
            cells[edge.cells[0]] += 0.5 * term;
            cells[edge.cells[1]] += 0.5 * term;
        }
    }
    EstimatorBreakdown {
        norm: EstimatorNorm::Energy,
        cells,
        terms: [sq[0].sqrt(), sq[1].sqrt(), sq[2].sqrt()],
        log_factor: 1.0,
        total: (sq[0] + sq[1] + sq[2]).sqrt(),
    }
}

/// Maximum-norm estimator. Norms are sampled at quadrature points and
/// vertices (cells) or Gauss points and endpoints (edges). The total carries
/// the factor `|log h_max|²`.
pub fn linf_estimator(u: &FeFunction, data: &ResidualData<'_>) -> EstimatorBreakdown {
    let space = u.space();
    let mesh = space.mesh();
    let mut samples = Quadrature::order5().points;
    samples.extend([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    let mut cells = vec![0.0f64; mesh.num_cells()];
    let mut terms = [0.0f64; 3];
    for (c, slot) in cells.iter_mut().enumerate() {
        let h = mesh.diameter(c);
        let m = samples.iter().map(|&l| residual(u, data, c, l).abs()).fold(0.0, f64::max);
        *slot = h * h * m;
        terms[0] = terms[0].max(*slot);
    }
    let mut params: Vec<f64> = gauss_edge().iter().map(|g| g.0).collect();
    params.extend([0.0, 1.0]);
    for (e, edge) in mesh.edges().iter().enumerate() {
        let natural = edge.is_boundary() && !space.is_dirichlet_tag(edge.tag);
        let Some(j) = edge_jumps(u, data, e, &params, natural) else {
            continue;
        };
        let term = mesh.edge_length(e) * j.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let slot = if edge.is_boundary() { 2 } else { 1 };
        terms[slot] = terms[slot].max(term);
        for &c in &edge.cells {
            if c != NO_CELL {
                cells[c] = cells[c].max(term);
            }
        }
    }
    let h_max = mesh.stats().h_max.max(f64::EPSILON);
    let log_factor = h_max.ln().powi(2);
    EstimatorBreakdown {
        norm: EstimatorNorm::Max,
        cells,
        terms,
        log_factor,
        total: log_factor * (terms[0] + terms[1] + terms[2]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::build_space;
    use crate::mesh::{create_rect_mesh, BoundaryTag, RectGrid};
    use std::sync::Arc;

    fn unit_data<'a>(q: &'a dyn Fn(usize, [f64; 3]) -> f64) -> ResidualData<'a> {
        ResidualData { diffusion: &|_, _| (1.0, [0.0, 0.0]), reaction: &|_, _| 0.0, source: q }
    }

    fn triangle() -> Arc<Mesh> {
        Arc::new(
            Mesh::from_triangles(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[1, 2, 0]], &|_, _| {
                BoundaryTag::Dirichlet
            })
            .unwrap(),
        )
    }

    #[test]
    fn single_cell_hand_values() {
        let s = Arc::new(build_space(&triangle(), 1, &[BoundaryTag::Dirichlet]).unwrap());
        let u = FeFunction::zeros(s);
        let one = |_: usize, _: [f64; 3]| 1.0;
        let e = energy_estimator(&u, &unit_data(&one));
        assert!((e.terms[0] - 1.0).abs() < 1e-14);
        assert_eq!(e.terms[1], 0.0);
        assert_eq!(e.terms[2], 0.0);
        let m = linf_estimator(&u, &unit_data(&one));
        assert!((m.terms[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn zero_data_zero_estimate() {
        let mesh = Arc::new(create_rect_mesh(&RectGrid::unit(3, 3), None, &|_, _| BoundaryTag::Neumann).unwrap());
        let s = Arc::new(build_space(&mesh, 2, &[]).unwrap());
        let u = FeFunction::zeros(s);
        let zero = |_: usize, _: [f64; 3]| 0.0;
        assert_eq!(energy_estimator(&u, &unit_data(&zero)).total, 0.0);
        assert_eq!(linf_estimator(&u, &unit_data(&zero)).total, 0.0);
    }

    #[test]
    fn per_cell_indicators_recombine() {
        let mesh = Arc::new(
            create_rect_mesh(&RectGrid::unit(4, 3), None, &|a: Point, b: Point| {
                if a[0] == 0.0 && b[0] == 0.0 {
                    BoundaryTag::Dirichlet
                } else {
                    BoundaryTag::Neumann
                }
            })
            .unwrap(),
        );
        let s = Arc::new(build_space(&mesh, 2, &[BoundaryTag::Dirichlet]).unwrap());
        let u = FeFunction::interpolate(s, |p| (3.0 * p[0]).sin() * p[1] * p[1]);
        let q = |_: usize, _: [f64; 3]| 1.0;
        let e = energy_estimator(&u, &unit_data(&q));
        let sum: f64 = e.cells.iter().sum();
        let terms: f64 = e.terms.iter().map(|t| t * t).sum();
        assert!((sum - terms).abs() <= 1e-12 * terms);
        assert!(e.terms[2] > 0.0);
    }

    #[test]
    fn linear_p1_has_no_jumps() {
        let mesh = Arc::new(create_rect_mesh(&RectGrid::unit(3, 3), None, &|_, _| BoundaryTag::Dirichlet).unwrap());
        let s = Arc::new(build_space(&mesh, 1, &[BoundaryTag::Dirichlet]).unwrap());
        let u = FeFunction::interpolate(s, |p| 2.0 * p[0] - p[1]);
        let zero = |_: usize, _: [f64; 3]| 0.0;
        let e = energy_estimator(&u, &unit_data(&zero));
        assert!(e.total < 1e-12);
    }

    #[test]
    fn max_estimator_is_homogeneous() {
        let mesh = Arc::new(create_rect_mesh(&RectGrid::unit(3, 3), None, &|_, _| BoundaryTag::Neumann).unwrap());
        let s = Arc::new(build_space(&mesh, 1, &[]).unwrap());
        let u = FeFunction::interpolate(Arc::clone(&s), |p| p[0] * p[1]);
        let u2 = FeFunction::interpolate(s, |p| 2.0 * p[0] * p[1]);
        let q1 = |c: usize, _: [f64; 3]| c as f64 * 0.1;
        let q2 = |c: usize, _: [f64; 3]| c as f64 * 0.2;
        let diffusion = |_: usize, _: [f64; 3]| (0.5, [0.0, 0.0]);
        let reaction = |_: usize, _: [f64; 3]| 1.0;
        let d1 = ResidualData { diffusion: &diffusion, reaction: &reaction, source: &q1 };
        let d2 = ResidualData { diffusion: &diffusion, reaction: &reaction, source: &q2 };
        let a = linf_estimator(&u, &d1);
        let b = linf_estimator(&u2, &d2);
        for i in 0..3 {
            assert!((2.0 * a.terms[i] - b.terms[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn combined_indicator_sums() {
        let b = EstimatorBreakdown {
            norm: EstimatorNorm::Energy,
            cells: vec![1.0, 2.5],
            terms: [0.0; 3],
            log_factor: 1.0,
            total: 0.0,
        };
        assert_eq!(combined_indicator(&b, None).unwrap(), vec![1.0, 2.5]);
        assert_eq!(combined_indicator(&b, Some(&b)).unwrap(), vec![2.0, 5.0]);
        let mut c = b.clone();
        c.cells.push(0.0);
        assert!(combined_indicator(&b, Some(&c)).is_err());
    }
}
