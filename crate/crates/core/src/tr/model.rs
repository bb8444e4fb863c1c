use std::collections::VecDeque;

use super::{wdot, wnorm, Control};
use crate::error::Result;

/// Curvature term of the quadratic model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Zero,
    /// Hessian-vector products supplied by the oracle.
    Hessian,
    /// Limited-memory BFGS with the given number of pairs.
    Lbfgs {
        memory: usize,
    },
}

impl ModelKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "zero" => Some(ModelKind::Zero),
            "hessian" => Some(ModelKind::Hessian),
            "lbfgs" => Some(ModelKind::Lbfgs { memory: 10 }),
            _ => s.strip_prefix("lbfgs").and_then(|m| m.parse().ok()).map(|memory| ModelKind::Lbfgs { memory }),
        }
    }

    pub fn name(&self) -> String {
        match self {
            ModelKind::Zero => "zero".into(),
            ModelKind::Hessian => "hessian".into(),
            ModelKind::Lbfgs { memory } => format!("lbfgs{memory}"),
        }
    }
}

/// Relative curvature threshold below which a secant pair is skipped.
pub const CURVATURE_SKIP: f64 = 1e-12;

/// Limited-memory BFGS operator in the weighted inner product, applied in
/// the unrolled form `B v = σ v + Σ_i [-(b_i·v)/(s_i·b_i) b_i + (y_i·v)/(y_i·s_i) y_i]`
/// with `b_i = B_{i-1} s_i`.
#[derive(Clone, Debug)]
pub struct Lbfgs<C> {
    memory: usize,
    pairs: VecDeque<(C, C)>,
    bs: Vec<Vec<f64>>,
    sigma: f64,
}

impl<C: Control> Lbfgs<C> {
    pub fn new(memory: usize) -> Self {
        Self { memory: memory.max(1), pairs: VecDeque::new(), bs: Vec::new(), sigma: 1.0 }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Adds a secant pair; returns `false` if it was skipped for lack of curvature.
    pub fn push(&mut self, s: C, y: C) -> bool {
        let w = s.weights();
        let sy = wdot(s.values(), y.values(), w);
        if !(sy > CURVATURE_SKIP * wnorm(s.values(), w) * wnorm(y.values(), w)) {
            return false;
        }
        if self.pairs.len() == self.memory {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y));
        self.prepare();
        true
    }

    /// Transfers stored pairs to a new discretisation.
    pub fn align(&mut self, mut f: impl FnMut(&mut C) -> Result<()>) -> Result<()> {
        for (s, y) in self.pairs.iter_mut() {
            f(s)?;
            f(y)?;
        }
        self.prepare();
        Ok(())
    }

    fn prepare(&mut self) {
        self.bs.clear();
        self.sigma = match self.pairs.back() {
            Some((s, y)) => {
                let w = s.weights();
                wdot(y.values(), y.values(), w) / wdot(s.values(), y.values(), w)
            }
            None => 1.0,
        };
        for i in 0..self.pairs.len() {
            let b = self.apply_partial(self.pairs[i].0.values(), i);
            self.bs.push(b);
        }
    }

    fn apply_partial(&self, v: &[f64], upto: usize) -> Vec<f64> {
        let mut out: Vec<f64> = v.iter().map(|x| self.sigma * x).collect();
        for l in 0..upto {
            let (s, y) = &self.pairs[l];
            let w = s.weights();
            let b = &self.bs[l];
            let cb = -wdot(b, v, w) / wdot(s.values(), b, w);
            let cy = wdot(y.values(), v, w) / wdot(y.values(), s.values(), w);
            for ((o, bi), yi) in out.iter_mut().zip(b).zip(y.values()) {
                *o += cb * bi + cy * yi;
            }
        }
        out
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.apply_partial(v, self.pairs.len())
    }
}

/// Power iteration estimate of the norm of a self-adjoint operator in the
/// weighted inner product.
pub fn estimate_norm(apply: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>, w: &[f64], iters: usize) -> Result<f64> {
    let n = w.len();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
    let mut est = 0.0;
    for _ in 0..iters.max(1) {
        let nv = wnorm(&v, w);
        if nv == 0.0 {
            return Ok(0.0);
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let bv = apply(&v)?;
        est = wnorm(&bv, w);
        v = bv;
    }
    Ok(est)
}
