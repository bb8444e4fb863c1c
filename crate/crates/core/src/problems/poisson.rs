//! Sparse optimal control of the Poisson equation on an L-shaped domain:
//! minimise `½||u - u_d||² + (α/2)||z||² + β||z||_L1` subject to
//! `-Δu = z`, `u = 0` on the boundary.

use std::sync::Arc;

use super::afem::{adaptive_loop, mark_and_refine, LoopStats};
use crate::error::{Error, Result};
use crate::estimate::{combined_indicator, energy_estimator, EstimatorBreakdown, ResidualData};
use crate::fem::{
    assemble_diffusion, assemble_load, assemble_load_raw, assemble_mass, build_space, zero_dirichlet, Coefficient,
    CsrMatrix, FeFunction, FeSpace, RieszMap, Source, SpdSolver,
};
use crate::mesh::{create_rect_mesh, prolong_cellfield, BoundaryTag, CellField, Mesh, Point, RectGrid};
use crate::prox::Prox;
use crate::tr::{GradientEval, Oracle, ValuePair};

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Tracking target `u_d`.
#[derive(Clone)]
pub struct Target {
    pub name: String,
    pub f: ScalarFn,
}

impl std::fmt::Debug for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Target({})", self.name)
    }
}

impl Target {
    /// Known targets: `sin1` = sin(πx)sin(πy) (default), `sin2` =
    /// sin(2πx)sin(2πy), `one` = 1. `sin2` vanishes on both re-entrant edges
    /// and changes sign across them, so it induces almost no corner
    /// singularity.
    pub fn by_name(name: &str) -> Result<Self> {
        use std::f64::consts::PI;
        let f: ScalarFn = match name {
            "sin2" => Arc::new(|p: Point| (2.0 * PI * p[0]).sin() * (2.0 * PI * p[1]).sin()),
            "sin1" => Arc::new(|p: Point| (PI * p[0]).sin() * (PI * p[1]).sin()),
            "one" => Arc::new(|_| 1.0),
            _ => return Err(Error::Config(format!("unknown target '{name}'"))),
        };
        Ok(Self { name: name.into(), f })
    }
}

#[derive(Clone, Debug)]
pub struct PoissonConfig {
    pub alpha: f64,
    pub beta: f64,
    /// Bulk marking fraction.
    pub theta: f64,
    pub max_dofs: usize,
    /// Cells per side of the square grid the L-shape is cut from.
    pub grid: usize,
    pub target: Target,
    /// Relative residual for linear solves.
    pub solver_tol: f64,
    /// Negates the adjoint; only useful to see a gradient check fail.
    pub flip_adjoint: bool,
}

impl Default for PoissonConfig {
    fn default() -> Self {
        Self {
            alpha: 1e-4,
            beta: 1e-2,
            theta: 0.05,
            max_dofs: 10_000,
            grid: 8,
            target: Target::by_name("sin1").expect("built-in target"),
            solver_tol: 1e-12,
            flip_adjoint: false,
        }
    }
}

impl PoissonConfig {
    pub fn prox(&self) -> Prox {
        Prox::L1 { beta: self.beta }
    }
}

/// Unit square minus its upper-right quadrant, on an `n x n` grid (n even).
/// All boundary edges are Dirichlet.
pub fn l_shape_mesh(n: usize) -> Result<Mesh> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidGrid { nx: n, ny: n });
    }
    let keep = |c: Point| !(c[0] > 0.5 && c[1] > 0.5);
    create_rect_mesh(&RectGrid::unit(n, n), Some(&keep), &|_, _| BoundaryTag::Dirichlet)
}

/// Discretisation data tied to one mesh.
struct Level {
    space: Arc<FeSpace>,
    stiffness: SpdSolver,
    mass: CsrMatrix,
    riesz: RieszMap,
    target_load: Vec<f64>,
    target_sq: f64,
}

impl Level {
    fn new(mesh: &Arc<Mesh>, target: &Target) -> Result<Self> {
        let space = Arc::new(build_space(mesh, 2, &[BoundaryTag::Dirichlet])?);
        let k = assemble_diffusion(&space, Coefficient::Constant(1.0))?;
        let stiffness = SpdSolver::new(k.constrain(space.dirichlet()));
        let mass = assemble_mass(&space, Coefficient::Constant(1.0), false)?;
        let riesz = RieszMap::new(&space)?;
        let f = &target.f;
        let target_load = assemble_load_raw(&space, &|c, l| f(space.point(c, l)));
        let q = space.quadrature();
        let mut target_sq = 0.0;
        for c in 0..mesh.num_cells() {
            for (&l, &w) in q.points.iter().zip(&q.weights) {
                target_sq += w * mesh.areas()[c] * f(space.point(c, l)).powi(2);
            }
        }
        Ok(Self { space, stiffness, mass, riesz, target_load, target_sq })
    }
}

/// State solution with its algebraic residual and error estimate.
#[derive(Clone, Debug)]
pub struct StateSolution {
    pub u: FeFunction,
    /// Dual norm of the algebraic residual.
    pub residual: f64,
    pub estimator: EstimatorBreakdown,
}

/// Adaptive oracle for the Poisson control problem.
pub struct PoissonControl {
    config: PoissonConfig,
    mesh: Arc<Mesh>,
    level: Level,
    /// Passes and budget hits of the most recent adaptive loop.
    pub last_loop: LoopStats,
}

impl PoissonControl {
    pub fn new(config: PoissonConfig) -> Result<Self> {
        if !(config.alpha > 0.0 && config.beta >= 0.0) {
            return Err(Error::InvalidParameter("need alpha > 0 and beta >= 0".into()));
        }
        let mesh = Arc::new(l_shape_mesh(config.grid)?);
        Self::with_mesh(config, mesh)
    }

    pub fn with_mesh(config: PoissonConfig, mesh: Arc<Mesh>) -> Result<Self> {
        let level = Level::new(&mesh, &config.target)?;
        Ok(Self { config, mesh, level, last_loop: LoopStats::default() })
    }

    pub fn config(&self) -> &PoissonConfig {
        &self.config
    }
    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }
    pub fn space(&self) -> &Arc<FeSpace> {
        &self.level.space
    }

    /// Initial control `z ≡ 0` on the current mesh.
    pub fn initial_control(&self) -> CellField {
        CellField::constant(Arc::clone(&self.mesh), 0.0)
    }

    fn set_mesh(&mut self, mesh: Arc<Mesh>) -> Result<()> {
        self.level = Level::new(&mesh, &self.config.target)?;
        self.mesh = mesh;
        Ok(())
    }

    fn check(&self, z: &CellField) -> Result<()> {
        if z.mesh().id() != self.mesh.id() {
            return Err(Error::MeshMismatch);
        }
        Ok(())
    }

    /// Solves `-Δu = z` and estimates the error.
    pub fn state(&self, z: &CellField) -> Result<StateSolution> {
        self.check(z)?;
        let lv = &self.level;
        let b = assemble_load(&lv.space, Source::Cells(z.values()));
        let (u, _) = lv.stiffness.solve(&b, self.config.solver_tol)?;
        let residual = self.residual_norm(&b, &u)?;
        let u = FeFunction::new(Arc::clone(&lv.space), u)?;
        let zv = z.values();
        let source = |c: usize, _: [f64; 3]| zv[c];
        let estimator = energy_estimator(&u, &unit_data(&source));
        Ok(StateSolution { u, residual, estimator })
    }

    fn residual_norm(&self, b: &[f64], x: &[f64]) -> Result<f64> {
        let ax = self.level.stiffness.matrix.apply(x);
        let r: Vec<f64> = b.iter().zip(ax).map(|(b, a)| b - a).collect();
        self.level.riesz.dual_norm(&r)
    }

    /// Solves `-Δλ = -(u - u_d)`.
    pub fn adjoint(&self, u: &FeFunction) -> Result<StateSolution> {
        let lv = &self.level;
        let mu = lv.mass.apply(u.coeffs());
        let mut rhs: Vec<f64> = mu.iter().zip(&lv.target_load).map(|(a, b)| b - a).collect();
        zero_dirichlet(&lv.space, &mut rhs);
        let (mut lam, _) = lv.stiffness.solve(&rhs, self.config.solver_tol)?;
        let residual = self.residual_norm(&rhs, &lam)?;
        if self.config.flip_adjoint {
            lam.iter_mut().for_each(|v| *v = -*v);
        }
        let lam = FeFunction::new(Arc::clone(&lv.space), lam)?;
        let f = &self.config.target.f;
        let space = &lv.space;
        let source = |c: usize, l: [f64; 3]| f(space.point(c, l)) - u.eval(c, l);
        let estimator = energy_estimator(&lam, &unit_data(&source));
        Ok(StateSolution { u: lam, residual, estimator })
    }

    /// `g = α z - (cell average of λ)`.
    pub fn gradient_field(&self, z: &CellField, lam: &FeFunction) -> CellField {
        let avg = lam.cell_averages();
        let g = z.values().iter().zip(avg).map(|(z, l)| self.config.alpha * z - l).collect();
        z.with_values_unchecked(g)
    }

    /// Smooth part `½||u - u_d||² + (α/2)||z||²`.
    pub fn smooth_value(&self, z: &CellField, u: &FeFunction) -> f64 {
        let lv = &self.level;
        let uc = u.coeffs();
        let mu = lv.mass.apply(uc);
        let misfit = crate::fem::dot(uc, &mu) - 2.0 * crate::fem::dot(uc, &lv.target_load) + lv.target_sq;
        0.5 * misfit.max(0.0) + 0.5 * self.config.alpha * z.dot(z)
    }

    /// Smooth objective at `z` on the current mesh (no refinement).
    pub fn objective(&self, z: &CellField) -> Result<f64> {
        let st = self.state(z)?;
        Ok(self.smooth_value(z, &st.u))
    }

    /// Gradient at `z` on the current mesh (no refinement).
    pub fn gradient_here(&self, z: &CellField) -> Result<CellField> {
        let st = self.state(z)?;
        let adj = self.adjoint(&st.u)?;
        Ok(self.gradient_field(z, &adj.u))
    }

    fn refine(&mut self, indicators: &[f64], fields: &mut [&mut CellField]) -> Result<bool> {
        match mark_and_refine(&self.mesh, indicators, self.config.theta)? {
            Some(m) => {
                for f in fields.iter_mut() {
                    **f = prolong_cellfield(f, &m)?;
                }
                self.set_mesh(m)?;
                Ok(true)
            }
            None => Ok(false),
        }
    }

    /// State at `z` and `z_trial` refined until both state estimators are at
    /// most `tol`. Returns both smooth values.
    pub fn afem_value(&mut self, z: &mut CellField, zt: &mut CellField, tol: f64) -> Result<(f64, f64, LoopStats)> {
        self.align_field(z)?;
        self.align_field(zt)?;
        let max = self.config.max_dofs;
        let mut ctx = (self, z, zt);
        let ((f, ft), stats) = adaptive_loop(
            &mut ctx,
            tol,
            max,
            |c| c.0.level.space.n_dofs(),
            |c| {
                let (p, z, zt) = (&*c.0, &*c.1, &*c.2);
                let s = p.state(z)?;
                let st = p.state(zt)?;
                let est = s.estimator.total.max(st.estimator.total);
                let ind = combined_indicator(&s.estimator, Some(&st.estimator))?;
                Ok((est, ind, (p.smooth_value(z, &s.u), p.smooth_value(zt, &st.u))))
            },
            |c, ind| {
                let (p, z, zt) = (&mut *c.0, &mut *c.1, &mut *c.2);
                p.refine(ind, &mut [z, zt])
            },
        )?;
        ctx.0.last_loop = stats;
        Ok((f, ft, stats))
    }

    /// Gradient at `z` with state and adjoint refined until the sum of their
    /// estimators is at most `tol`. Returns the gradient and the total
    /// estimator including algebraic residual norms.
    pub fn afem_gradient(&mut self, z: &mut CellField, tol: f64) -> Result<(CellField, f64, LoopStats)> {
        self.align_field(z)?;
        let max = self.config.max_dofs;
        let mut ctx = (self, z);
        let ((g, xi), stats) = adaptive_loop(
            &mut ctx,
            tol,
            max,
            |c| c.0.level.space.n_dofs(),
            |c| {
                let (p, z) = (&*c.0, &*c.1);
                let s = p.state(z)?;
                let a = p.adjoint(&s.u)?;
                let est = s.estimator.total + a.estimator.total;
                let ind = combined_indicator(&s.estimator, Some(&a.estimator))?;
                let xi = est + s.residual + a.residual;
                Ok((est, ind, (p.gradient_field(z, &a.u), xi)))
            },
            |c, ind| {
                let (p, z) = (&mut *c.0, &mut *c.1);
                p.refine(ind, &mut [z])
            },
        )?;
        ctx.0.last_loop = stats;
        Ok((g, xi, stats))
    }

    /// Reduced Hessian applied to `v`: `α v + (cell average of K⁻¹ M K⁻¹ B v)`.
    pub fn hessian(&self, v: &CellField) -> Result<CellField> {
        self.check(v)?;
        let lv = &self.level;
        let b = assemble_load(&lv.space, Source::Cells(v.values()));
        let (w, _) = lv.stiffness.solve(&b, self.config.solver_tol)?;
        let mut mw = lv.mass.apply(&w);
        zero_dirichlet(&lv.space, &mut mw);
        let (p, _) = lv.stiffness.solve(&mw, self.config.solver_tol)?;
        let p = FeFunction::new(Arc::clone(&lv.space), p)?;
        let avg = p.cell_averages();
        let h = v.values().iter().zip(avg).map(|(v, a)| self.config.alpha * v + a).collect();
        Ok(v.with_values_unchecked(h))
    }

    fn align_field(&self, f: &mut CellField) -> Result<()> {
        if f.mesh().id() != self.mesh.id() {
            *f = prolong_cellfield(f, &self.mesh)?;
        }
        Ok(())
    }
}

fn unit_data<'a>(source: &'a dyn Fn(usize, [f64; 3]) -> f64) -> ResidualData<'a> {
    ResidualData { diffusion: &|_, _| (1.0, [0.0, 0.0]), reaction: &|_, _| 0.0, source }
}

impl Oracle for PoissonControl {
    type Control = CellField;

    fn value_pair(&mut self, z: &mut CellField, z_trial: &mut CellField, tol: f64) -> Result<ValuePair> {
        let (current, trial, stats) = self.afem_value(z, z_trial, tol)?;
        Ok(ValuePair { current, trial, degraded: stats.capped })
    }

    fn gradient(&mut self, z: &mut CellField, tol: f64) -> Result<GradientEval<CellField>> {
        let (gradient, xi, stats) = self.afem_gradient(z, tol)?;
        Ok(GradientEval { gradient, xi, degraded: stats.capped })
    }

    fn hessian_apply(&mut self, z: &CellField, v: &CellField) -> Option<Result<CellField>> {
        if let Err(e) = self.check(z) {
            return Some(Err(e));
        }
        Some(self.hessian(v))
    }

    fn align(&mut self, field: &mut CellField) -> Result<()> {
        self.align_field(field)
    }

    fn dof_count(&self) -> usize {
        self.level.space.n_dofs()
    }
}
