//! Finite-difference checks of the reduced gradients on fixed meshes.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::poisson::PoissonControl;
use super::topology::TopologyProblem;
use crate::error::{Error, Result};
use crate::mesh::CellField;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// One directional-derivative comparison.
#[derive(Clone, Copy, Debug)]
pub struct FdSample {
    pub analytic: f64,
    pub finite_difference: f64,
    pub relative_error: f64,
}

/// Compares `⟨g, d⟩` against `(f(z + h d) - f(z - h d)) / 2h`.
pub fn directional_check(
    f: impl Fn(&CellField) -> Result<f64>,
    z: &CellField,
    g: &CellField,
    d: &CellField,
    h: f64,
) -> Result<FdSample> {
    let shifted = |s: f64| z.with_values_unchecked(z.values().iter().zip(d.values()).map(|(z, d)| z + s * d).collect());
    let fd = (f(&shifted(h))? - f(&shifted(-h))?) / (2.0 * h);
    let analytic = g.dot(d);
    let scale = analytic.abs().max(fd.abs()).max(f64::MIN_POSITIVE);
    Ok(FdSample { analytic, finite_difference: fd, relative_error: (analytic - fd).abs() / scale })
}

fn random_field(rng: &mut ChaCha8Rng, mesh: &Arc<crate::mesh::Mesh>, lo: f64, hi: f64) -> CellField {
    let v = (0..mesh.num_cells()).map(|_| rng.gen_range(lo..hi)).collect();
    CellField::new(Arc::clone(mesh), v).expect("length matches")
}

/// Checks the Poisson gradient at `n` random controls.
pub fn check_poisson(problem: &PoissonControl, n: usize, seed: u64) -> Result<Vec<FdSample>> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one check point".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let z = random_field(&mut rng, problem.mesh(), -10.0, 10.0);
            let d = random_field(&mut rng, problem.mesh(), -1.0, 1.0);
            let g = problem.gradient_here(&z)?;
            directional_check(|x| problem.objective(x), &z, &g, &d, FD_STEP)
        })
        .collect()
}

/// Checks the compliance gradient at `n` random feasible designs.
pub fn check_topology(problem: &TopologyProblem, n: usize, seed: u64) -> Result<Vec<FdSample>> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one check point".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prox = problem.prox();
    (0..n)
        .map(|_| {
            let raw = random_field(&mut rng, problem.mesh(), 0.0, 1.0);
            let z = raw.with_values_unchecked(prox.apply(raw.values(), raw.areas(), 1.0)?);
            let d = random_field(&mut rng, problem.mesh(), -1.0, 1.0);
            let (_, g) = problem.objective_and_gradient(&z)?;
            directional_check(|x| problem.objective(x), &z, &g, &d, FD_STEP)
        })
        .collect()
}

/// Largest relative error of a batch.
pub fn max_error(samples: &[FdSample]) -> f64 {
    samples.iter().map(|s| s.relative_error).fold(0.0, f64::max)
}
