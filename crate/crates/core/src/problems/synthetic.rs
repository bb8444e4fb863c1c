//! Closed-form test oracles for the trust-region driver.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::afem::{adaptive_loop, LoopStats};
use crate::error::Result;
use crate::tr::{Control, GradientEval, Oracle, ValuePair, WeightedVec};

/// `f(x) = ½ xᵀA x - bᵀx` in two variables, optionally with uniform noise of
/// half-width `noise * tol / 2` added to every value returned by
/// [`Oracle::value_pair`].
#[derive(Clone, Debug)]
pub struct NoisyQuadratic {
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
    /// Noise amplitude as a multiple of the requested value tolerance.
    pub noise: f64,
    rng: ChaCha8Rng,
}

impl NoisyQuadratic {
    /// SPD test matrix `[[3, 1], [1, 2]]`, `b = [1, -2]`; minimiser `(0.8, -1.4)`.
    pub fn standard(noise: f64, seed: u64) -> Self {
        Self { a: [[3.0, 1.0], [1.0, 2.0]], b: [1.0, -2.0], noise, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let ax = self.apply(x);
        0.5 * (x[0] * ax[0] + x[1] * ax[1]) - self.b[0] * x[0] - self.b[1] * x[1]
    }

    pub fn apply(&self, x: &[f64]) -> [f64; 2] {
        let a = &self.a;
        [a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]]
    }

    pub fn minimizer(&self) -> [f64; 2] {
        let a = &self.a;
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        [(a[1][1] * self.b[0] - a[0][1] * self.b[1]) / det, (a[0][0] * self.b[1] - a[1][0] * self.b[0]) / det]
    }

    pub fn start(&self, x: [f64; 2]) -> WeightedVec {
        WeightedVec::unweighted(x.to_vec())
    }

    fn noise(&mut self, tol: f64) -> f64 {
        let half = 0.5 * self.noise * tol;
        if half > 0.0 && half.is_finite() {
            self.rng.gen_range(-half..=half)
        } else {
            0.0
        }
    }
}

impl Oracle for NoisyQuadratic {
    type Control = WeightedVec;

    fn value_pair(&mut self, z: &mut WeightedVec, z_trial: &mut WeightedVec, tol: f64) -> Result<ValuePair> {
        let current = self.value(z.values()) + self.noise(tol);
        let trial = self.value(z_trial.values()) + self.noise(tol);
        Ok(ValuePair { current, trial, degraded: false })
    }

    fn gradient(&mut self, z: &mut WeightedVec, _tol: f64) -> Result<GradientEval<WeightedVec>> {
        let ax = self.apply(z.values());
        let g = vec![ax[0] - self.b[0], ax[1] - self.b[1]];
        Ok(GradientEval { gradient: z.with_values(g), xi: 0.0, degraded: false })
    }

    fn hessian_apply(&mut self, _z: &WeightedVec, v: &WeightedVec) -> Option<Result<WeightedVec>> {
        Some(Ok(v.with_values(self.apply(v.values()).to_vec())))
    }

    fn align(&mut self, _field: &mut WeightedVec) -> Result<()> {
        Ok(())
    }

    fn dof_count(&self) -> usize {
        2
    }
}

/// `f(x) = ½|x|²` whose gradient error estimate starts at `xi0` and halves
/// with every refinement. Each refinement doubles the dof count.
#[derive(Clone, Debug)]
pub struct HalvingOracle {
    pub xi0: f64,
    pub refinements: usize,
    pub base_dofs: usize,
    pub last_loop: LoopStats,
    weights: Arc<[f64]>,
}

impl HalvingOracle {
    pub fn new(xi0: f64, n: usize) -> Self {
        Self { xi0, refinements: 0, base_dofs: 4, last_loop: LoopStats::default(), weights: vec![1.0; n].into() }
    }

    pub fn xi(&self) -> f64 {
        self.xi0 * 0.5f64.powi(self.refinements as i32)
    }

    pub fn control(&self, values: Vec<f64>) -> WeightedVec {
        WeightedVec { values, weights: Arc::clone(&self.weights) }
    }
}

impl Oracle for HalvingOracle {
    type Control = WeightedVec;

    fn value_pair(&mut self, z: &mut WeightedVec, z_trial: &mut WeightedVec, _tol: f64) -> Result<ValuePair> {
        let f = |v: &WeightedVec| 0.5 * v.values().iter().map(|x| x * x).sum::<f64>();
        Ok(ValuePair { current: f(z), trial: f(z_trial), degraded: false })
    }

    fn gradient(&mut self, z: &mut WeightedVec, tol: f64) -> Result<GradientEval<WeightedVec>> {
        let (xi, stats) = adaptive_loop(
            self,
            tol,
            usize::MAX,
            |o| o.dof_count(),
            |o| Ok((o.xi(), vec![1.0], o.xi())),
            |o, _| {
                o.refinements += 1;
                Ok(true)
            },
        )?;
        self.last_loop = stats;
        Ok(GradientEval { gradient: z.clone(), xi, degraded: false })
    }

    fn align(&mut self, _field: &mut WeightedVec) -> Result<()> {
        Ok(())
    }

    fn dof_count(&self) -> usize {
        self.base_dofs << self.refinements.min(40)
    }
}
