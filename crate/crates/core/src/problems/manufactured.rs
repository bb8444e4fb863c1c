//! Convergence study for `-Δu = f` on the unit square with the smooth
//! solution `u = sin(πx) sin(πy)`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::estimate::{energy_estimator, ResidualData};
use crate::fem::{
    assemble_diffusion, assemble_load, build_space, Coefficient, FeFunction, Quadrature, Source, SpdSolver,
};
use crate::mesh::{create_rect_mesh, refine_uniform, BoundaryTag, Mesh, Point, RectGrid};

pub fn exact_solution(p: Point) -> f64 {
    (PI * p[0]).sin() * (PI * p[1]).sin()
}

pub fn exact_gradient(p: Point) -> [f64; 2] {
    [PI * (PI * p[0]).cos() * (PI * p[1]).sin(), PI * (PI * p[0]).sin() * (PI * p[1]).cos()]
}

pub fn exact_source(p: Point) -> f64 {
    2.0 * PI * PI * exact_solution(p)
}

#[derive(Clone, Copy, Debug)]
pub struct RatesConfig {
    pub degree: usize,
    /// Number of refinements after the initial grid; each halves `h`.
    pub refinements: usize,
    /// Cells per side of the initial grid.
    pub grid: usize,
    pub solver_tol: f64,
}

impl Default for RatesConfig {
    fn default() -> Self {
        Self { degree: 1, refinements: 4, grid: 4, solver_tol: 1e-12 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RateRow {
    pub dofs: usize,
    pub h: f64,
    /// `|u - u_h|_{H¹}`.
    pub error: f64,
    pub estimator: f64,
    /// Estimator over error.
    pub effectivity: f64,
    /// Observed order with respect to `h`; `None` on the first level.
    pub rate: Option<f64>,
    pub estimator_rate: Option<f64>,
}

/// Solves on the initial grid and after each refinement.
pub fn estimate_rates(cfg: &RatesConfig) -> Result<Vec<RateRow>> {
    if !(cfg.degree == 1 || cfg.degree == 2) {
        return Err(Error::UnsupportedDegree(cfg.degree));
    }
    let mut mesh =
        Arc::new(create_rect_mesh(&RectGrid::unit(cfg.grid, cfg.grid), None, &|_, _| BoundaryTag::Dirichlet)?);
    let mut rows: Vec<RateRow> = Vec::with_capacity(cfg.refinements + 1);
    for level in 0..=cfg.refinements {
        if level > 0 {
            // Two bisection sweeps halve every edge length.
            mesh = refine_uniform(&refine_uniform(&mesh)?)?;
        }
        let (error, estimator, dofs) = solve_level(&mesh, cfg)?;
        let h = mesh.stats().h_max;
        let order = |prev: f64, cur: f64, hp: f64| (prev / cur).ln() / (hp / h).ln();
        let (rate, estimator_rate) = match rows.last() {
            Some(p) => (Some(order(p.error, error, p.h)), Some(order(p.estimator, estimator, p.h))),
            None => (None, None),
        };
        rows.push(RateRow { dofs, h, error, estimator, effectivity: estimator / error, rate, estimator_rate });
    }
    Ok(rows)
}

fn solve_level(mesh: &Arc<Mesh>, cfg: &RatesConfig) -> Result<(f64, f64, usize)> {
    let space = Arc::new(build_space(mesh, cfg.degree, &[BoundaryTag::Dirichlet])?);
    let k = assemble_diffusion(&space, Coefficient::Constant(1.0))?.constrain(space.dirichlet());
    let b = assemble_load(&space, Source::Function(&exact_source));
    let (u, _) = SpdSolver::new(k).solve(&b, cfg.solver_tol)?;
    let u = FeFunction::new(Arc::clone(&space), u)?;

    let quad = Quadrature::order5();
    let mut err2 = 0.0;
    for c in 0..mesh.num_cells() {
        for (&l, &w) in quad.points.iter().zip(&quad.weights) {
            let x = space.point(c, l);
            let (ge, gh) = (exact_gradient(x), u.gradient(c, l));
            err2 += w * mesh.areas()[c] * ((ge[0] - gh[0]).powi(2) + (ge[1] - gh[1]).powi(2));
        }
    }
    let source = |c: usize, l: [f64; 3]| exact_source(space.point(c, l));
    let est = energy_estimator(
        &u,
        &ResidualData { diffusion: &|_, _| (1.0, [0.0, 0.0]), reaction: &|_, _| 0.0, source: &source },
    );
    Ok((err2.sqrt(), est.total, space.n_dofs()))
}

/// Plain-text table; undefined rates print as `-`.
pub fn format_rates(rows: &[RateRow]) -> String {
    let mut s = format!(
        "{:>5} {:>8} {:>10} {:>12} {:>12} {:>7} {:>7} {:>9}\n",
        "level", "dofs", "h", "error", "estimator", "rate", "est.rate", "eff."
    );
    let fmt = |r: Option<f64>| r.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
    for (i, r) in rows.iter().enumerate() {
        let _ = writeln!(
            s,
            "{:>5} {:>8} {:>10.4e} {:>12.5e} {:>12.5e} {:>7} {:>7} {:>9.3}",
            i,
            r.dofs,
            r.h,
            r.error,
            r.estimator,
            fmt(r.rate),
            fmt(r.estimator_rate),
            r.effectivity
        );
    }
    s
}
