//! Assembly of stiffness, mass and load terms, and discrete dual norms.

use super::space::FeSpace;
use super::sparse::{dot, CsrMatrix, SpdSolver};
use crate::error::{Error, Result};
use crate::mesh::Point;

/// Scalar coefficient of a bilinear form.
#[derive(Clone, Copy)]
pub enum Coefficient<'a> {
    Constant(f64),
    PerCell(&'a [f64]),
    /// Value at `(cell, quadrature point index)` of the space's rule.
    PerPoint(&'a dyn Fn(usize, usize) -> f64),
}

impl Coefficient<'_> {
    fn at(&self, cell: usize, q: usize) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::PerCell(v) => v[cell],
            Coefficient::PerPoint(f) => f(cell, q),
        }
    }
}

/// `∫ coeff ∇φ_i·∇φ_j`. Every sampled coefficient must be positive.
pub fn assemble_diffusion(space: &FeSpace, coeff: Coefficient<'_>) -> Result<CsrMatrix> {
    let quad = space.quadrature();
    let nl = space.local_dofs();
    let mesh = space.mesh();
    let mut trip = Vec::with_capacity(mesh.num_cells() * nl * nl);
    for cell in 0..mesh.num_cells() {
        let area = mesh.areas()[cell];
        let mut local = [[0.0; 6]; 6];
        for (q, (&l, &w)) in quad.points.iter().zip(&quad.weights).enumerate() {
            let k = coeff.at(cell, q);
            if !(k > 0.0) {
                return Err(Error::NonPositiveCoefficient { cell, value: k });
            }
            let g = space.basis_grads(cell, l);
            let s = k * w * area;
            for i in 0..nl {
                for j in 0..nl {
                    local[i][j] += s * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                }
            }
        }
        push_local(&mut trip, space.cell_dofs(cell), &local);
    }
    Ok(CsrMatrix::from_triplets(space.n_dofs(), trip))
}

/// `∫ coeff φ_i φ_j`, or its row-sum diagonal when `lumped`.
pub fn assemble_mass(space: &FeSpace, coeff: Coefficient<'_>, lumped: bool) -> Result<CsrMatrix> {
    let quad = space.quadrature();
    let nl = space.local_dofs();
    let mesh = space.mesh();
    let mut trip = Vec::with_capacity(mesh.num_cells() * nl * nl);
    for cell in 0..mesh.num_cells() {
        let area = mesh.areas()[cell];
        let mut local = [[0.0; 6]; 6];
        for (q, (&l, &w)) in quad.points.iter().zip(&quad.weights).enumerate() {
            let k = coeff.at(cell, q);
            if k < 0.0 {
                return Err(Error::NonPositiveCoefficient { cell, value: k });
            }
            let phi = space.basis(l);
            let s = k * w * area;
            for i in 0..nl {
                for j in 0..nl {
                    local[i][j] += s * phi[i] * phi[j];
                }
            }
        }
        push_local(&mut trip, space.cell_dofs(cell), &local);
    }
    let m = CsrMatrix::from_triplets(space.n_dofs(), trip);
    Ok(if lumped { CsrMatrix::diagonal(&m.row_sums()) } else { m })
}

fn push_local(trip: &mut Vec<(usize, usize, f64)>, dofs: &[usize], local: &[[f64; 6]; 6]) {
    for (i, &di) in dofs.iter().enumerate() {
        for (j, &dj) in dofs.iter().enumerate() {
            trip.push((di, dj, local[i][j]));
        }
    }
}

/// Right-hand side source.
#[derive(Clone, Copy)]
pub enum Source<'a> {
    /// Piecewise constant, one value per cell.
    Cells(&'a [f64]),
    Function(&'a dyn Fn(Point) -> f64),
}

/// `b_i = ∫ f φ_i`, with Dirichlet rows zeroed.
pub fn assemble_load(space: &FeSpace, source: Source<'_>) -> Vec<f64> {
    match source {
        Source::Cells(v) => assemble_load_points(space, &|c, _| v[c]),
        Source::Function(f) => assemble_load_points(space, &|c, l| f(space.point(c, l))),
    }
}

/// `b_i = ∫ f φ_i` with `f` sampled at `(cell, barycentric point)` of the
/// space's quadrature rule; Dirichlet rows zeroed.
pub fn assemble_load_points(space: &FeSpace, f: &dyn Fn(usize, [f64; 3]) -> f64) -> Vec<f64> {
    let mut b = assemble_load_raw(space, f);
    zero_dirichlet(space, &mut b);
    b
}

/// Like [`assemble_load_points`] but leaves Dirichlet rows untouched.
pub fn assemble_load_raw(space: &FeSpace, f: &dyn Fn(usize, [f64; 3]) -> f64) -> Vec<f64> {
    let quad = space.quadrature();
    let mesh = space.mesh();
    let mut b = vec![0.0; space.n_dofs()];
    for cell in 0..mesh.num_cells() {
        let area = mesh.areas()[cell];
        let dofs = space.cell_dofs(cell);
        for (&l, &w) in quad.points.iter().zip(&quad.weights) {
            let v = f(cell, l) * w * area;
            if v == 0.0 {
                continue;
            }
            let phi = space.basis(l);
            for (i, &d) in dofs.iter().enumerate() {
                b[d] += v * phi[i];
            }
        }
    }
    b
}

pub fn zero_dirichlet(space: &FeSpace, v: &mut [f64]) {
    for (x, &d) in v.iter_mut().zip(space.dirichlet()) {
        if d {
            *x = 0.0;
        }
    }
}

/// H¹ Riesz map (stiffness plus mass) on the Dirichlet-free dofs, used to
/// measure residual functionals in the discrete dual norm.
#[derive(Clone, Debug)]
pub struct RieszMap {
    solver: SpdSolver,
    dirichlet: Vec<bool>,
}

/// Relative solver tolerance used for dual norm evaluation.
pub const DUAL_NORM_TOL: f64 = 1e-10;

impl RieszMap {
    pub fn new(space: &FeSpace) -> Result<Self> {
        let k = assemble_diffusion(space, Coefficient::Constant(1.0))?;
        let m = assemble_mass(space, Coefficient::Constant(1.0), false)?;
        let r = k.add_scaled(&m, 1.0).constrain(space.dirichlet());
        Ok(Self { solver: SpdSolver::new(r), dirichlet: space.dirichlet().to_vec() })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.solver.matrix
    }

    /// `sqrt(rᵀ R⁻¹ r)` over the free dofs.
    pub fn dual_norm(&self, residual: &[f64]) -> Result<f64> {
        let mut r = residual.to_vec();
        for (x, &d) in r.iter_mut().zip(&self.dirichlet) {
            if d {
                *x = 0.0;
            }
        }
        let (x, _) = self.solver.solve(&r, DUAL_NORM_TOL)?;
        Ok(dot(&r, &x).max(0.0).sqrt())
    }
}

pub fn dual_norm(space: &FeSpace, residual: &[f64]) -> Result<f64> {
    RieszMap::new(space)?.dual_norm(residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::build_space;
    use crate::mesh::{create_rect_mesh, BoundaryTag, Mesh, RectGrid};
    use std::sync::Arc;

    fn triangle() -> Arc<Mesh> {
        let m = Mesh::from_triangles(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[1, 2, 0]], &|_, _| {
            BoundaryTag::Neumann
        })
        .unwrap();
        Arc::new(m)
    }

    #[test]
    fn p1_reference_stiffness() {
        let s = build_space(&triangle(), 1, &[]).unwrap();
        let k = assemble_diffusion(&s, Coefficient::Constant(1.0)).unwrap();
        // Local order is [v1, v2, v0]; map back to vertex ids.
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for (i, row) in expect.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                assert!((k.get(i, j) - e).abs() < 1e-15);
            }
        }
        let k2 = assemble_diffusion(&s, Coefficient::Constant(2.0)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(k2.get(i, j), 2.0 * k.get(i, j));
            }
        }
        assert!(matches!(
            assemble_diffusion(&s, Coefficient::Constant(0.0)),
            Err(Error::NonPositiveCoefficient { .. })
        ));
    }

    #[test]
    fn lumped_mass_of_reference_triangle() {
        let s = build_space(&triangle(), 1, &[]).unwrap();
        let m = assemble_mass(&s, Coefficient::Constant(1.0), true).unwrap();
        for i in 0..3 {
            assert!((m.get(i, i) - 1.0 / 6.0).abs() < 1e-15);
        }
        let c = assemble_mass(&s, Coefficient::Constant(1.0), false).unwrap();
        for (r, d) in c.row_sums().iter().zip(m.diag()) {
            assert!((r - d).abs() < 1e-15);
        }
        let z = assemble_mass(&s, Coefficient::Constant(0.0), false).unwrap();
        assert!(z.to_dense().iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn load_partition_of_unity() {
        let m = Arc::new(create_rect_mesh(&RectGrid::unit(3, 2), None, &|_, _| BoundaryTag::Dirichlet).unwrap());
        for deg in [1, 2] {
            let s = build_space(&m, deg, &[]).unwrap();
            let b = assemble_load(&s, Source::Function(&|_| 1.0));
            assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
        let s = build_space(&m, 1, &[BoundaryTag::Dirichlet]).unwrap();
        let zero = vec![0.0; m.num_cells()];
        assert!(assemble_load(&s, Source::Cells(&zero)).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cellwise_load_weights_per_cell() {
        let m = Arc::new(create_rect_mesh(&RectGrid::unit(1, 1), None, &|_, _| BoundaryTag::Neumann).unwrap());
        let s = build_space(&m, 1, &[]).unwrap();
        let b = assemble_load(&s, Source::Cells(&[1.0, 2.0]));
        // Each vertex gets area/3 times the value of each incident cell.
        let per = 0.5 / 3.0;
        let mut expect = vec![0.0; 4];
        for (c, v) in [(0, 1.0), (1, 2.0)] {
            for &d in s.cell_dofs(c) {
                expect[d] += per * v;
            }
        }
        for (x, y) in b.iter().zip(expect) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!((b.iter().sum::<f64>() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn dual_norm_identities() {
        let m = Arc::new(create_rect_mesh(&RectGrid::unit(3, 3), None, &|_, _| BoundaryTag::Dirichlet).unwrap());
        let s = build_space(&m, 2, &[BoundaryTag::Dirichlet]).unwrap();
        let riesz = RieszMap::new(&s).unwrap();
        assert_eq!(riesz.dual_norm(&vec![0.0; s.n_dofs()]).unwrap(), 0.0);
        let free = s.dirichlet().iter().position(|&d| !d).unwrap();
        let mut e = vec![0.0; s.n_dofs()];
        e[free] = 1.0;
        let r = riesz.matrix().apply(&e);
        let n = riesz.dual_norm(&r).unwrap();
        assert!((n - riesz.matrix().get(free, free).sqrt()).abs() < 1e-8 * n);
        let r2: Vec<f64> = r.iter().map(|v| 2.0 * v).collect();
        assert!((riesz.dual_norm(&r2).unwrap() - 2.0 * n).abs() < 1e-8 * n);
    }
}
