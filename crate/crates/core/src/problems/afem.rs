//! Pieces shared by the adaptive oracles.

use std::sync::Arc;

use crate::error::Result;
use crate::mesh::{bisect, dorfler_mark, Mesh};

/// Outcome of one solve/estimate/mark/refine loop.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LoopStats {
    /// Number of solve passes.
    pub passes: usize,
    /// The dof budget stopped refinement before the tolerance was met.
    pub capped: bool,
}

/// Marks by bulk criterion and bisects. Returns `None` when nothing was marked.
pub fn mark_and_refine(mesh: &Arc<Mesh>, indicators: &[f64], theta: f64) -> Result<Option<Arc<Mesh>>> {
    let marked = dorfler_mark(indicators, theta);
    if marked.is_empty() {
        return Ok(None);
    }
    bisect(mesh, &marked).map(Some)
}

/// Runs the adaptive loop on a context `ctx`: `solve` evaluates on the
/// current mesh and returns `(estimate, indicators, output)`; `refine` marks
/// and replaces the mesh, returning `false` if nothing changed. Stops when
/// the estimate is at most `tol`, when the budget is spent or when refinement
/// is impossible.
pub fn adaptive_loop<T, S>(
    ctx: &mut T,
    tol: f64,
    max_dofs: usize,
    dofs: impl Fn(&T) -> usize,
    mut solve: impl FnMut(&mut T) -> Result<(f64, Vec<f64>, S)>,
    mut refine: impl FnMut(&mut T, &[f64]) -> Result<bool>,
) -> Result<(S, LoopStats)> {
    let mut stats = LoopStats::default();
    loop {
        let (est, ind, out) = solve(ctx)?;
        stats.passes += 1;
        if est <= tol {
            return Ok((out, stats));
        }
        if dofs(ctx) >= max_dofs || !refine(ctx, &ind)? {
            stats.capped = true;
            return Ok((out, stats));
        }
    }
}
