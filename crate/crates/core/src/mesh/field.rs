use std::sync::Arc;

use super::Mesh;
use crate::error::{Error, Result};

/// Piecewise-constant function on a mesh. Inner products and norms use cell
/// areas as weights.
#[derive(Clone, Debug)]
pub struct CellField {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

impl CellField {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_cells() {
            return Err(Error::MeshMismatch);
        }
        Ok(Self { mesh, values })
    }

    pub fn constant(mesh: Arc<Mesh>, value: f64) -> Self {
        let values = vec![value; mesh.num_cells()];
        Self { mesh, values }
    }

    pub fn from_fn(mesh: Arc<Mesh>, f: impl Fn(super::Point) -> f64) -> Self {
        let values = (0..mesh.num_cells()).map(|c| f(mesh.centroid(c))).collect();
        Self { mesh, values }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn areas(&self) -> &[f64] {
        self.mesh.areas()
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().zip(self.areas()).map(|(v, a)| v * a).sum()
    }

    pub fn dot(&self, other: &CellField) -> f64 {
        self.values.iter().zip(&other.values).zip(self.areas()).map(|((x, y), a)| a * x * y).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Same mesh, new values. Panics if the length does not match.
    pub fn with_values_unchecked(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.values.len());
        Self { mesh: Arc::clone(&self.mesh), values }
    }

    pub fn same_mesh(&self, other: &CellField) -> bool {
        self.mesh.id() == other.mesh.id()
    }
}

/// Transfers `field` to a descendant mesh: every target cell takes the value
/// of its ancestor cell on the field's mesh.
pub fn prolong_cellfield(field: &CellField, target: &Arc<Mesh>) -> Result<CellField> {
    let source_id = field.mesh.id();
    let mut chain: Vec<&Mesh> = Vec::new();
    let mut m: &Mesh = target;
    while m.id() != source_id {
        chain.push(m);
        m = m.previous().ok_or(Error::HierarchyMismatch)?;
    }
    let mut ancestor: Vec<usize> = (0..target.num_cells()).collect();
    for level in &chain {
        let parent = level.parent();
        for a in ancestor.iter_mut() {
            *a = parent[*a];
        }
    }
    let values = ancestor.iter().map(|&a| field.values[a]).collect();
    Ok(CellField { mesh: Arc::clone(target), values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{bisect, create_rect_mesh, refine_uniform, BoundaryTag, RectGrid};

    fn square(n: usize) -> Arc<Mesh> {
        Arc::new(create_rect_mesh(&RectGrid::unit(n, n), None, &|_, _| BoundaryTag::Dirichlet).unwrap())
    }

    #[test]
    fn identity_on_same_mesh() {
        let m = square(2);
        let f = CellField::from_fn(Arc::clone(&m), |p| p[0] + 2.0 * p[1]);
        let g = prolong_cellfield(&f, &m).unwrap();
        assert_eq!(f.values(), g.values());
    }

    #[test]
    fn hand_prolongation() {
        let m = square(1);
        let f = CellField::new(Arc::clone(&m), vec![1.0, 2.0]).unwrap();
        let r = bisect(&m, &[0]).unwrap();
        let g = prolong_cellfield(&f, &r).unwrap();
        assert_eq!(g.values(), &[1.0, 1.0, 2.0, 2.0]);
        assert!((g.integral() - f.integral()).abs() < 1e-15);
    }

    #[test]
    fn constants_and_integral_over_several_levels() {
        let m = square(2);
        let f = CellField::from_fn(Arc::clone(&m), |p| p[0] * p[0] - p[1]);
        let mut r = Arc::clone(&m);
        for k in 0..4 {
            r = bisect(&r, &[k, 2 * k + 1]).unwrap();
        }
        r = refine_uniform(&r).unwrap();
        let g = prolong_cellfield(&f, &r).unwrap();
        assert!((g.integral() - f.integral()).abs() < 1e-14);
        let c = prolong_cellfield(&CellField::constant(Arc::clone(&m), 3.5), &r).unwrap();
        assert!(c.values().iter().all(|&v| v == 3.5));
    }

    #[test]
    fn unrelated_meshes_are_rejected() {
        let f = CellField::constant(square(1), 1.0);
        assert!(matches!(prolong_cellfield(&f, &square(1)), Err(Error::HierarchyMismatch)));
    }

    #[test]
    fn wrong_length_is_rejected() {
        assert!(CellField::new(square(1), vec![1.0]).is_err());
    }
}
