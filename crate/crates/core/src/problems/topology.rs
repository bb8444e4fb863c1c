//! Heat-conduction topology optimisation: minimise the compliance `∫ q u`
//! subject to `-∇·(K(ρ)∇u) = q`, where `ρ` is the Helmholtz-filtered density
//! of the control `z`, `K(ρ) = K_min + (K_max - K_min) ρ³`, and `z` ranges over
//! `{0 ≤ z ≤ 1, ∫z = v₀|Ω|}`.
//!
//! Both examples are symmetric and are solved on half the domain, with a
//! natural condition on the symmetry line.

use std::sync::Arc;

use super::afem::{adaptive_loop, mark_and_refine, LoopStats};
use crate::error::{Error, Result};
use crate::estimate::{combined_indicator, energy_estimator, linf_estimator, EstimatorBreakdown, ResidualData};
use crate::fem::{
    assemble_diffusion, assemble_load, assemble_mass, build_space, dot, Coefficient, FeFunction, FeSpace, Quadrature,
    RieszMap, Source, SpdSolver,
};
use crate::mesh::{create_rect_mesh, prolong_cellfield, BoundaryTag, CellField, Diagonal, Mesh, Point, RectGrid};
use crate::prox::Prox;
use crate::tr::{GradientEval, Oracle, ValuePair};

/// Boundary layout of the two heat-sink examples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TopologyExample {
    /// Heat sink on the left and top sides, solved on `{x + y ≤ 1}`.
    LeftTop,
    /// Heat sink on `{0} × [0.4, 0.6]`, solved on `(0,1) × (0,0.5)`.
    LeftSlot,
}

impl TopologyExample {
    pub fn from_id(id: usize) -> Result<Self> {
        match id {
            1 => Ok(Self::LeftTop),
            2 => Ok(Self::LeftSlot),
            _ => Err(Error::UnknownExample(id)),
        }
    }

    pub fn id(self) -> usize {
        match self {
            Self::LeftTop => 1,
            Self::LeftSlot => 2,
        }
    }

    pub fn default_volume_fraction(self) -> f64 {
        match self {
            Self::LeftTop => 0.4,
            Self::LeftSlot => 0.1,
        }
    }

    /// Initial half-domain mesh cut from an `n x n` grid of the unit square.
    /// Edges on the heat sink are Dirichlet, all others Neumann.
    pub fn mesh(self, n: usize) -> Result<Mesh> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid { nx: n, ny: n });
        }
        let on_left = |a: Point, b: Point| a[0] == 0.0 && b[0] == 0.0;
        match self {
            Self::LeftTop => {
                let grid = RectGrid::unit(n, n).with_diagonal(Diagonal::Backward);
                let keep = |c: Point| c[0] + c[1] < 1.0;
                create_rect_mesh(&grid, Some(&keep), &|a, b| {
                    if on_left(a, b) {
                        BoundaryTag::Dirichlet
                    } else {
                        BoundaryTag::Neumann
                    }
                })
            }
            Self::LeftSlot => {
                let grid = RectGrid { nx: n, ny: n / 2, x: [0.0, 1.0], y: [0.0, 0.5], diagonal: Diagonal::Forward };
                create_rect_mesh(&grid, None, &|a, b| {
                    let mid = 0.5 * (a[1] + b[1]);
                    if on_left(a, b) && (0.4..=0.5).contains(&mid) {
                        BoundaryTag::Dirichlet
                    } else {
                        BoundaryTag::Neumann
                    }
                })
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct TopologyConfig {
    pub example: TopologyExample,
    /// Cells per side of the full-domain grid.
    pub grid: usize,
    pub volume_fraction: f64,
    pub k_min: f64,
    pub k_max: f64,
    /// Filter diffusion coefficient.
    pub radius: f64,
    /// Uniform heat source.
    pub source: f64,
    pub theta: f64,
    pub max_dofs: usize,
    pub solver_tol: f64,
}

impl TopologyConfig {
    pub fn new(example: TopologyExample) -> Self {
        Self {
            example,
            grid: 64,
            volume_fraction: example.default_volume_fraction(),
            k_min: 1e-3,
            k_max: 1.0,
            radius: 1e-2 / (2.0 * 3f64.sqrt()),
            source: 1e-2,
            theta: 0.05,
            max_dofs: 150_000,
            solver_tol: 1e-11,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_min > 0.0 && self.k_min < self.k_max) {
            return Err(Error::InvalidParameter("need 0 < k_min < k_max".into()));
        }
        if !(self.radius > 0.0) {
            return Err(Error::InvalidParameter("filter radius must be positive".into()));
        }
        if !(self.volume_fraction > 0.0 && self.volume_fraction < 1.0) {
            return Err(Error::InvalidParameter("volume fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// SIMP conductivity, density clamped to `[0, 1]`.
    pub fn conductivity(&self, rho: f64) -> f64 {
        self.k_min + (self.k_max - self.k_min) * rho.clamp(0.0, 1.0).powi(3)
    }

    /// Derivative of [`Self::conductivity`]; zero where the clamp is active.
    pub fn conductivity_derivative(&self, rho: f64) -> f64 {
        if rho > 0.0 && rho < 1.0 {
            3.0 * (self.k_max - self.k_min) * rho * rho
        } else {
            0.0
        }
    }
}

struct Level {
    filter_space: Arc<FeSpace>,
    state_space: Arc<FeSpace>,
    filter: SpdSolver,
    filter_riesz: RieszMap,
    state_riesz: RieszMap,
    load: Vec<f64>,
}

impl Level {
    fn new(mesh: &Arc<Mesh>, cfg: &TopologyConfig) -> Result<Self> {
        let filter_space = Arc::new(build_space(mesh, 1, &[])?);
        let state_space = Arc::new(build_space(mesh, 2, &[BoundaryTag::Dirichlet])?);
        let k = assemble_diffusion(&filter_space, Coefficient::Constant(cfg.radius))?;
        let m = assemble_mass(&filter_space, Coefficient::Constant(1.0), true)?;
        let filter = SpdSolver::new(k.add_scaled(&m, 1.0));
        let load = assemble_load(&state_space, Source::Cells(&vec![cfg.source; mesh.num_cells()]));
        Ok(Self {
            filter_riesz: RieszMap::new(&filter_space)?,
            state_riesz: RieszMap::new(&state_space)?,
            filter_space,
            state_space,
            filter,
            load,
        })
    }
}

/// Filtered density, temperature and their error measures at one control.
#[derive(Clone, Debug)]
pub struct TopologyState {
    pub rho: FeFunction,
    pub u: FeFunction,
    pub compliance: f64,
    pub filter_residual: f64,
    pub state_residual: f64,
    pub filter_estimator: EstimatorBreakdown,
    pub state_estimator: EstimatorBreakdown,
}

impl TopologyState {
    /// Max-norm filter estimator plus energy-norm state estimator.
    pub fn estimate(&self) -> f64 {
        self.filter_estimator.total + self.state_estimator.total
    }

    pub fn indicators(&self) -> Result<Vec<f64>> {
        combined_indicator(&self.state_estimator, Some(&self.filter_estimator))
    }
}

/// Adaptive oracle for the topology problem.
pub struct TopologyProblem {
    config: TopologyConfig,
    mesh: Arc<Mesh>,
    level: Level,
    pub last_loop: LoopStats,
}

impl TopologyProblem {
    pub fn new(config: TopologyConfig) -> Result<Self> {
        config.validate()?;
        let mesh = Arc::new(config.example.mesh(config.grid)?);
        Self::with_mesh(config, mesh)
    }

    pub fn with_mesh(config: TopologyConfig, mesh: Arc<Mesh>) -> Result<Self> {
        config.validate()?;
        let level = Level::new(&mesh, &config)?;
        Ok(Self { config, mesh, level, last_loop: LoopStats::default() })
    }

    pub fn config(&self) -> &TopologyConfig {
        &self.config
    }
    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }
    pub fn state_space(&self) -> &Arc<FeSpace> {
        &self.level.state_space
    }
    pub fn filter_space(&self) -> &Arc<FeSpace> {
        &self.level.filter_space
    }

    /// Box and volume constraint of the design.
    pub fn prox(&self) -> Prox {
        Prox::BoxVolume { lo: 0.0, hi: 1.0, volume: self.config.volume_fraction * self.mesh.total_area() }
    }

    /// Uniform design `z ≡ v₀`.
    pub fn initial_control(&self) -> CellField {
        CellField::constant(Arc::clone(&self.mesh), self.config.volume_fraction)
    }

    fn check(&self, z: &CellField) -> Result<()> {
        if z.mesh().id() != self.mesh.id() {
            return Err(Error::MeshMismatch);
        }
        Ok(())
    }

    /// Solves `-r Δρ + ρ = z` with natural boundary conditions.
    /// Returns `ρ` and the dual norm of the algebraic residual.
    pub fn filter_solve(&self, z: &CellField) -> Result<(FeFunction, f64)> {
        self.check(z)?;
        let lv = &self.level;
        let b = assemble_load(&lv.filter_space, Source::Cells(z.values()));
        let (rho, _) = lv.filter.solve(&b, self.config.solver_tol)?;
        let fr = lv.filter.matrix.apply(&rho);
        let r: Vec<f64> = b.iter().zip(fr).map(|(b, a)| b - a).collect();
        let res = lv.filter_riesz.dual_norm(&r)?;
        Ok((FeFunction::new(Arc::clone(&lv.filter_space), rho)?, res))
    }

    /// Solves the heat equation for a given filtered density. Returns `u`,
    /// the compliance and the residual dual norm.
    pub fn state_solve(&self, rho: &FeFunction) -> Result<(FeFunction, f64, f64)> {
        let lv = &self.level;
        let sp = &lv.state_space;
        let quad = sp.quadrature();
        let kq = |c: usize, q: usize| self.config.conductivity(rho.eval(c, quad.points[q]));
        let k = assemble_diffusion(sp, Coefficient::PerPoint(&kq))?.constrain(sp.dirichlet());
        let solver = SpdSolver::new(k);
        let (u, _) = solver.solve(&lv.load, self.config.solver_tol)?;
        let ku = solver.matrix.apply(&u);
        let r: Vec<f64> = lv.load.iter().zip(ku).map(|(b, a)| b - a).collect();
        let res = lv.state_riesz.dual_norm(&r)?;
        let compliance = dot(&lv.load, &u);
        Ok((FeFunction::new(Arc::clone(sp), u)?, compliance, res))
    }

    /// Filter, state and both estimators at `z`.
    pub fn state(&self, z: &CellField) -> Result<TopologyState> {
        let (rho, filter_residual) = self.filter_solve(z)?;
        let (u, compliance, state_residual) = self.state_solve(&rho)?;
        let cfg = &self.config;
        let zv = z.values();
        let r = cfg.radius;
        let filter_estimator = linf_estimator(
            &rho,
            &ResidualData { diffusion: &|_, _| (r, [0.0, 0.0]), reaction: &|_, _| 1.0, source: &|c, _| zv[c] },
        );
        let diffusion = |c: usize, l: [f64; 3]| {
            let p = rho.eval(c, l);
            let d = cfg.conductivity_derivative(p);
            let g = rho.gradient(c, l);
            (cfg.conductivity(p), [d * g[0], d * g[1]])
        };
        let q = cfg.source;
        let state_estimator =
            energy_estimator(&u, &ResidualData { diffusion: &diffusion, reaction: &|_, _| 0.0, source: &|_, _| q });
        Ok(TopologyState { rho, u, compliance, filter_residual, state_residual, filter_estimator, state_estimator })
    }

    /// Compliance gradient for a computed state. The adjoint is `-u`, so no
    /// extra PDE solve beyond one filter solve is needed.
    pub fn gradient_field(&self, z: &CellField, st: &TopologyState) -> Result<CellField> {
        self.check(z)?;
        let lv = &self.level;
        let sp = &lv.filter_space;
        let mesh = sp.mesh();
        let quad = Quadrature::order5();
        let mut omega = vec![0.0; sp.n_dofs()];
        for c in 0..mesh.num_cells() {
            let area = mesh.areas()[c];
            let dofs = sp.cell_dofs(c);
            for (&l, &w) in quad.points.iter().zip(&quad.weights) {
                let g = st.u.gradient(c, l);
                let s = -self.config.conductivity_derivative(st.rho.eval(c, l)) * (g[0] * g[0] + g[1] * g[1]);
                for (i, &d) in dofs.iter().enumerate() {
                    omega[d] += w * area * s * l[i];
                }
            }
        }
        let (wt, _) = lv.filter.solve(&omega, self.config.solver_tol)?;
        let wt = FeFunction::new(Arc::clone(sp), wt)?;
        Ok(z.with_values_unchecked(wt.cell_averages()))
    }

    /// Compliance and gradient on the current mesh (no refinement).
    pub fn objective_and_gradient(&self, z: &CellField) -> Result<(f64, CellField)> {
        let st = self.state(z)?;
        let g = self.gradient_field(z, &st)?;
        Ok((st.compliance, g))
    }

    /// Compliance on the current mesh (no refinement, no estimators).
    pub fn objective(&self, z: &CellField) -> Result<f64> {
        let (rho, _) = self.filter_solve(z)?;
        Ok(self.state_solve(&rho)?.1)
    }

    fn align_field(&self, f: &mut CellField) -> Result<()> {
        if f.mesh().id() != self.mesh.id() {
            *f = prolong_cellfield(f, &self.mesh)?;
        }
        Ok(())
    }

    fn refine(&mut self, indicators: &[f64], fields: &mut [&mut CellField]) -> Result<bool> {
        match mark_and_refine(&self.mesh, indicators, self.config.theta)? {
            Some(m) => {
                for f in fields.iter_mut() {
                    **f = prolong_cellfield(f, &m)?;
                }
                self.level = Level::new(&m, &self.config)?;
                self.mesh = m;
                Ok(true)
            }
            None => Ok(false),
        }
    }

    /// Compliance at `z` and `z_trial`, refined until both estimators are at
    /// most `tol`.
    pub fn afem_value(&mut self, z: &mut CellField, zt: &mut CellField, tol: f64) -> Result<(f64, f64, LoopStats)> {
        self.align_field(z)?;
        self.align_field(zt)?;
        let max = self.config.max_dofs;
        let mut ctx = (self, z, zt);
        let ((f, ft), stats) = adaptive_loop(
            &mut ctx,
            tol,
            max,
            |c| c.0.level.state_space.n_dofs(),
            |c| {
                let (p, z, zt) = (&*c.0, &*c.1, &*c.2);
                let s = p.state(z)?;
                let st = p.state(zt)?;
                let mut ind = s.indicators()?;
                for (a, b) in ind.iter_mut().zip(st.indicators()?) {
                    *a += b;
                }
                Ok((s.estimate().max(st.estimate()), ind, (s.compliance, st.compliance)))
            },
            |c, ind| {
                let (p, z, zt) = (&mut *c.0, &mut *c.1, &mut *c.2);
                p.refine(ind, &mut [z, zt])
            },
        )?;
        ctx.0.last_loop = stats;
        Ok((f, ft, stats))
    }

    /// Gradient at `z`, refined until the estimator is at most `tol`. The
    /// returned total adds the filter and state residual norms.
    pub fn afem_gradient(&mut self, z: &mut CellField, tol: f64) -> Result<(CellField, f64, LoopStats)> {
        self.align_field(z)?;
        let max = self.config.max_dofs;
        let mut ctx = (self, z);
        let ((g, xi), stats) = adaptive_loop(
            &mut ctx,
            tol,
            max,
            |c| c.0.level.state_space.n_dofs(),
            |c| {
                let (p, z) = (&*c.0, &*c.1);
                let s = p.state(z)?;
                let g = p.gradient_field(z, &s)?;
                let est = s.estimate();
                let xi = est + s.filter_residual + s.state_residual;
                Ok((est, s.indicators()?, (g, xi)))
            },
            |c, ind| {
                let (p, z) = (&mut *c.0, &mut *c.1);
                p.refine(ind, &mut [z])
            },
        )?;
        ctx.0.last_loop = stats;
        Ok((g, xi, stats))
    }
}

impl Oracle for TopologyProblem {
    type Control = CellField;

    fn value_pair(&mut self, z: &mut CellField, z_trial: &mut CellField, tol: f64) -> Result<ValuePair> {
        let (current, trial, stats) = self.afem_value(z, z_trial, tol)?;
        Ok(ValuePair { current, trial, degraded: stats.capped })
    }

    fn gradient(&mut self, z: &mut CellField, tol: f64) -> Result<GradientEval<CellField>> {
        let (gradient, xi, stats) = self.afem_gradient(z, tol)?;
        Ok(GradientEval { gradient, xi, degraded: stats.capped })
    }

    fn align(&mut self, field: &mut CellField) -> Result<()> {
        self.align_field(field)
    }

    fn dof_count(&self) -> usize {
        self.level.state_space.n_dofs()
    }
}
