use std::sync::Arc;

use super::quadrature::Quadrature;
use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Mesh, Point};

/// Continuous Lagrange space of degree 1 or 2.
///
/// Dofs are numbered vertices first, then (for degree 2) one per edge in edge
/// order. Local dofs of a cell are its three vertices followed by the edges
/// `(v0, v1)`, `(v1, v2)`, `(v2, v0)`.
#[derive(Debug)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    degree: usize,
    cell_dofs: Vec<[usize; 6]>,
    n_dofs: usize,
    dirichlet: Vec<bool>,
    dirichlet_tags: Vec<BoundaryTag>,
    grads: Vec<[[f64; 2]; 3]>,
    quadrature: Quadrature,
}

pub fn build_space(mesh: &Arc<Mesh>, degree: usize, dirichlet_tags: &[BoundaryTag]) -> Result<FeSpace> {
    if degree != 1 && degree != 2 {
        return Err(Error::UnsupportedDegree(degree));
    }
    let nv = mesh.num_vertices();
    let n_dofs = if degree == 1 { nv } else { nv + mesh.edges().len() };
    let cell_dofs = mesh
        .cells()
        .iter()
        .zip(mesh.cell_edges())
        .map(|(c, e)| {
            if degree == 1 {
                [c[0], c[1], c[2], 0, 0, 0]
            } else {
                [c[0], c[1], c[2], nv + e[2], nv + e[0], nv + e[1]]
            }
        })
        .collect();
    let mut dirichlet = vec![false; n_dofs];
    for (ei, e) in mesh.edges().iter().enumerate() {
        if let Some(tag) = e.tag {
            if dirichlet_tags.contains(&tag) {
                dirichlet[e.vertices[0]] = true;
                dirichlet[e.vertices[1]] = true;
                if degree == 2 {
                    dirichlet[nv + ei] = true;
                }
            }
        }
    }
    let grads = (0..mesh.num_cells()).map(|c| barycentric_gradients(mesh, c)).collect();
    let quadrature = if degree == 1 { Quadrature::order2() } else { Quadrature::order5() };
    Ok(FeSpace {
        mesh: Arc::clone(mesh),
        degree,
        cell_dofs,
        n_dofs,
        dirichlet,
        dirichlet_tags: dirichlet_tags.to_vec(),
        grads,
        quadrature,
    })
}

fn barycentric_gradients(mesh: &Mesh, cell: usize) -> [[f64; 2]; 3] {
    let p = mesh.cell_points(cell);
    let two_a = 2.0 * mesh.areas()[cell];
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let (b, c) = (p[(i + 1) % 3], p[(i + 2) % 3]);
        g[i] = [(b[1] - c[1]) / two_a, (c[0] - b[0]) / two_a];
    }
    g
}

impl FeSpace {
    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }
    pub fn degree(&self) -> usize {
        self.degree
    }
    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }
    pub fn local_dofs(&self) -> usize {
        if self.degree == 1 {
            3
        } else {
            6
        }
    }
    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        &self.cell_dofs[cell][..self.local_dofs()]
    }
    pub fn dirichlet(&self) -> &[bool] {
        &self.dirichlet
    }
    pub fn dirichlet_tags(&self) -> &[BoundaryTag] {
        &self.dirichlet_tags
    }
    pub fn is_dirichlet_tag(&self, tag: Option<BoundaryTag>) -> bool {
        tag.is_some_and(|t| self.dirichlet_tags.contains(&t))
    }
    /// Default quadrature: order 2 for P1, order 5 for P2.
    pub fn quadrature(&self) -> &Quadrature {
        &self.quadrature
    }
    /// Gradients of the barycentric coordinates on `cell`.
    pub fn bary_grads(&self, cell: usize) -> &[[f64; 2]; 3] {
        &self.grads[cell]
    }

    /// Coordinates of every dof (vertex or edge midpoint).
    pub fn dof_points(&self) -> Vec<Point> {
        let mut pts = self.mesh.vertices().to_vec();
        if self.degree == 2 {
            for e in self.mesh.edges() {
                let (a, b) = (self.mesh.vertices()[e.vertices[0]], self.mesh.vertices()[e.vertices[1]]);
                pts.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
            }
        }
        pts
    }

    /// Basis values at barycentric point `l`; only the first `local_dofs` are meaningful.
    pub fn basis(&self, l: [f64; 3]) -> [f64; 6] {
        if self.degree == 1 {
            [l[0], l[1], l[2], 0.0, 0.0, 0.0]
        } else {
            [
                l[0] * (2.0 * l[0] - 1.0),
                l[1] * (2.0 * l[1] - 1.0),
                l[2] * (2.0 * l[2] - 1.0),
                4.0 * l[0] * l[1],
                4.0 * l[1] * l[2],
                4.0 * l[2] * l[0],
            ]
        }
    }

    /// Physical basis gradients on `cell` at barycentric point `l`.
    pub fn basis_grads(&self, cell: usize, l: [f64; 3]) -> [[f64; 2]; 6] {
        let g = &self.grads[cell];
        let mut out = [[0.0; 2]; 6];
        if self.degree == 1 {
            out[..3].copy_from_slice(g);
            return out;
        }
        for i in 0..3 {
            let s = 4.0 * l[i] - 1.0;
            out[i] = [s * g[i][0], s * g[i][1]];
        }
        for (k, (i, j)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
            out[3 + k] = [4.0 * (l[i] * g[j][0] + l[j] * g[i][0]), 4.0 * (l[i] * g[j][1] + l[j] * g[i][1])];
        }
        out
    }

    /// Laplacians of the basis functions on `cell` (zero for P1).
    pub fn basis_laplacians(&self, cell: usize) -> [f64; 6] {
        let mut out = [0.0; 6];
        if self.degree == 1 {
            return out;
        }
        let g = &self.grads[cell];
        let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
        for i in 0..3 {
            out[i] = 4.0 * dot(g[i], g[i]);
        }
        for (k, (i, j)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
            out[3 + k] = 8.0 * dot(g[i], g[j]);
        }
        out
    }

    /// Physical point of barycentric coordinates `l` on `cell`.
    pub fn point(&self, cell: usize, l: [f64; 3]) -> Point {
        let p = self.mesh.cell_points(cell);
        [l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0], l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1]]
    }

    /// Barycentric coordinates of physical point `x` with respect to `cell`.
    pub fn barycentric(&self, cell: usize, x: Point) -> [f64; 3] {
        let p = self.mesh.cell_points(cell);
        let g = &self.grads[cell];
        let l1 = g[1][0] * (x[0] - p[0][0]) + g[1][1] * (x[1] - p[0][1]);
        let l2 = g[2][0] * (x[0] - p[0][0]) + g[2][1] * (x[1] - p[0][1]);
        [1.0 - l1 - l2, l1, l2]
    }
}

/// Coefficient vector on a space.
#[derive(Clone, Debug)]
pub struct FeFunction {
    space: Arc<FeSpace>,
    coeffs: Vec<f64>,
}

impl FeFunction {
    pub fn new(space: Arc<FeSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.n_dofs() {
            return Err(Error::MeshMismatch);
        }
        Ok(Self { space, coeffs })
    }

    pub fn zeros(space: Arc<FeSpace>) -> Self {
        let coeffs = vec![0.0; space.n_dofs()];
        Self { space, coeffs }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(space: Arc<FeSpace>, f: impl Fn(Point) -> f64) -> Self {
        let coeffs = space.dof_points().into_iter().map(f).collect();
        Self { space, coeffs }
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn eval(&self, cell: usize, l: [f64; 3]) -> f64 {
        let phi = self.space.basis(l);
        self.space.cell_dofs(cell).iter().zip(phi).map(|(&d, p)| self.coeffs[d] * p).sum()
    }

    pub fn gradient(&self, cell: usize, l: [f64; 3]) -> [f64; 2] {
        let g = self.space.basis_grads(cell, l);
        let mut out = [0.0; 2];
        for (&d, gi) in self.space.cell_dofs(cell).iter().zip(g) {
            out[0] += self.coeffs[d] * gi[0];
            out[1] += self.coeffs[d] * gi[1];
        }
        out
    }

    /// Cellwise Laplacian (constant on each cell for degree at most 2).
    pub fn laplacian(&self, cell: usize) -> f64 {
        let lap = self.space.basis_laplacians(cell);
        self.space.cell_dofs(cell).iter().zip(lap).map(|(&d, v)| self.coeffs[d] * v).sum()
    }

    /// Gradients at the quadrature points of the space, per cell.
    pub fn cell_gradients(&self) -> Vec<Vec<[f64; 2]>> {
        let q = self.space.quadrature();
        (0..self.space.mesh().num_cells()).map(|c| q.points.iter().map(|&l| self.gradient(c, l)).collect()).collect()
    }

    /// Values at mesh vertices.
    pub fn vertex_values(&self) -> Vec<f64> {
        self.coeffs[..self.space.mesh().num_vertices()].to_vec()
    }

    /// Mean value on each cell.
    pub fn cell_averages(&self) -> Vec<f64> {
        let q = self.space.quadrature();
        (0..self.space.mesh().num_cells())
            .map(|c| q.points.iter().zip(&q.weights).map(|(&l, w)| w * self.eval(c, l)).sum())
            .collect()
    }
}
