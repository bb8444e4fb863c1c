//! Inexact proximal trust-region method.
//!
//! The smooth part of the objective is seen only through an [`Oracle`] that
//! returns values and gradients up to a requested tolerance (typically by
//! refining a mesh). The nonsmooth part is a [`Prox`] term handled exactly.

mod driver;
mod history;
mod model;
mod step;

pub use driver::{derivative_loop, run, run_with, DerivativeResult, RunReport, Status};
pub use history::{write_history_csv, Record, HISTORY_HEADER};
pub use model::{estimate_norm, Lbfgs, ModelKind};
pub use step::{
    accept_and_update, cauchy_point, model_value, solve_subproblem, stationarity, value_tolerance, CauchyStep,
    SubproblemStep,
};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::CellField;

/// Optimisation variable: values with fixed positive weights defining the
/// inner product `⟨a, b⟩ = Σ w_i a_i b_i`.
pub trait Control: Clone {
    fn values(&self) -> &[f64];
    fn values_mut(&mut self) -> &mut [f64];
    fn weights(&self) -> &[f64];
    /// Same geometry, new values.
    fn with_values(&self, values: Vec<f64>) -> Self;
}

impl Control for CellField {
    fn values(&self) -> &[f64] {
        CellField::values(self)
    }
    fn values_mut(&mut self) -> &mut [f64] {
        CellField::values_mut(self)
    }
    fn weights(&self) -> &[f64] {
        self.areas()
    }
    fn with_values(&self, values: Vec<f64>) -> Self {
        CellField::new(Arc::clone(self.mesh()), values).expect("length preserved")
    }
}

/// Plain weighted vector, used by mesh-free oracles.
#[derive(Clone, Debug)]
pub struct WeightedVec {
    pub values: Vec<f64>,
    pub weights: Arc<[f64]>,
}

impl WeightedVec {
    pub fn unweighted(values: Vec<f64>) -> Self {
        let weights: Arc<[f64]> = vec![1.0; values.len()].into();
        Self { values, weights }
    }
}

impl Control for WeightedVec {
    fn values(&self) -> &[f64] {
        &self.values
    }
    fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    fn weights(&self) -> &[f64] {
        &self.weights
    }
    fn with_values(&self, values: Vec<f64>) -> Self {
        Self { values, weights: Arc::clone(&self.weights) }
    }
}

pub fn wdot(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(b).zip(w).map(|((x, y), w)| w * x * y).sum()
}

pub fn wnorm(a: &[f64], w: &[f64]) -> f64 {
    wdot(a, a, w).max(0.0).sqrt()
}

/// Smooth values returned by [`Oracle::value_pair`].
#[derive(Clone, Copy, Debug)]
pub struct ValuePair {
    pub current: f64,
    pub trial: f64,
    /// The refinement budget stopped the loop before the tolerance was met.
    pub degraded: bool,
}

#[derive(Clone, Debug)]
pub struct GradientEval<C> {
    pub gradient: C,
    /// Total error estimator of the gradient.
    pub xi: f64,
    pub degraded: bool,
}

/// Inexact smooth objective.
///
/// Implementations may refine their discretisation inside any call; they
/// must then transfer the controls passed by `&mut` to the new mesh.
pub trait Oracle {
    type Control: Control;

    /// Smooth parts of the objective at both points, evaluated on one common
    /// discretisation whose estimators are below `tol`.
    fn value_pair(&mut self, z: &mut Self::Control, z_trial: &mut Self::Control, tol: f64) -> Result<ValuePair>;

    /// Gradient (Riesz representative) with estimator below `tol`.
    fn gradient(&mut self, z: &mut Self::Control, tol: f64) -> Result<GradientEval<Self::Control>>;

    /// Hessian-vector product of the smooth part at `z`, if available.
    fn hessian_apply(&mut self, _z: &Self::Control, _v: &Self::Control) -> Option<Result<Self::Control>> {
        None
    }

    /// Transfers a control from an older discretisation to the current one.
    fn align(&mut self, field: &mut Self::Control) -> Result<()>;

    fn dof_count(&self) -> usize;
}

/// Algorithm constants.
#[derive(Clone, Debug, PartialEq)]
pub struct TrParams {
    pub delta0: f64,
    /// Upper bound on the trust-region radius.
    pub delta_max: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    /// Bulk marking fraction used by adaptive oracles.
    pub theta: f64,
    pub kappa_val: f64,
    pub kappa_der: f64,
    pub tau_max_val: f64,
    pub tau_max_der: f64,
    /// Scale inside the value tolerance, must be below `min(eta1, 1 - eta2)`
    /// in theory.
    pub gamma: f64,
    /// `ε_k = eps0 * eps_decay^k`.
    pub eps0: f64,
    pub eps_decay: f64,
    /// Exponent `j` of the value tolerance.
    pub j: f64,
    pub psi_tol: f64,
    pub max_iter: usize,
    pub kappa_rad: f64,
    pub subproblem_iters: usize,
    /// Sufficient decrease constant of the Cauchy point search.
    pub mu_c: f64,
    pub model: ModelKind,
}

impl Default for TrParams {
    fn default() -> Self {
        Self {
            delta0: 50.0,
            delta_max: 1e10,
            eta1: 0.05,
            eta2: 0.9,
            gamma1: 0.25,
            gamma2: 1.0,
            gamma3: 2.5,
            theta: 0.05,
            kappa_val: 1e6,
            kappa_der: 1e6,
            tau_max_val: 1.0,
            tau_max_der: 1.0,
            gamma: 1.0 - 1e-3,
            eps0: 1.0 - 1e-3,
            eps_decay: 1.0,
            j: 0.9,
            psi_tol: 1e-6,
            max_iter: 500,
            kappa_rad: 1.0,
            subproblem_iters: 50,
            mu_c: 1e-4,
            model: ModelKind::Zero,
        }
    }
}

impl TrParams {
    /// Rejects out-of-range constants and returns warnings for orderings
    /// that are tolerated.
    pub fn validate(&self) -> Result<Vec<String>> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.delta0 > 0.0) {
            return bad(format!("delta0 = {} must be positive", self.delta0));
        }
        if !(self.delta_max >= self.delta0) {
            return bad(format!("delta_max = {} is below delta0", self.delta_max));
        }
        if !(0.0 < self.eta1 && self.eta1 < self.eta2 && self.eta2 < 1.0) {
            return bad(format!("need 0 < eta1 < eta2 < 1, got {} and {}", self.eta1, self.eta2));
        }
        if !(0.0 < self.gamma1 && self.gamma1 <= self.gamma2 && self.gamma2 <= 1.0 && self.gamma3 >= 1.0) {
            return bad(format!(
                "need 0 < gamma1 <= gamma2 <= 1 <= gamma3, got {}, {}, {}",
                self.gamma1, self.gamma2, self.gamma3
            ));
        }
        if !(0.0 < self.theta && self.theta < 1.0) {
            return bad(format!("theta = {} must lie in (0, 1)", self.theta));
        }
        if !(0.0 < self.j && self.j < 1.0) {
            return bad(format!("j = {} must lie in (0, 1)", self.j));
        }
        if !(self.kappa_val >= 0.0 && self.kappa_der > 0.0) {
            return bad("tolerance constants must be positive".into());
        }
        if !(self.tau_max_val > 0.0 && self.tau_max_der > 0.0) {
            return bad("maximal tolerances must be positive".into());
        }
        if !(self.gamma > 0.0 && self.eps0 > 0.0 && self.eps_decay > 0.0 && self.eps_decay <= 1.0) {
            return bad("gamma, eps0 and eps_decay must be positive with eps_decay <= 1".into());
        }
        if !(self.kappa_rad > 0.0 && self.mu_c > 0.0 && self.mu_c < 1.0) {
            return bad("kappa_rad must be positive and mu_c in (0, 1)".into());
        }
        let mut warnings = Vec::new();
        if self.gamma2 >= 1.0 {
            warnings.push(format!("gamma2 = {} is not below 1", self.gamma2));
        }
        if self.gamma >= self.eta1.min(1.0 - self.eta2) {
            warnings.push(format!(
                "gamma = {} is not below min(eta1, 1 - eta2) = {}",
                self.gamma,
                self.eta1.min(1.0 - self.eta2)
            ));
        }
        Ok(warnings)
    }

    pub fn epsilon(&self, k: usize) -> f64 {
        self.eps0 * self.eps_decay.powi(k as i32)
    }
}
