//! Step computation: stationarity, Cauchy point, subproblem, acceptance.

use super::{wdot, wnorm, TrParams};
use crate::error::{Error, Result};
use crate::prox::Prox;

/// Curvature operator acting on raw value vectors.
pub type LinOp<'a> = dyn FnMut(&[f64]) -> Result<Vec<f64>> + 'a;

pub const MAX_BACKTRACKS: usize = 60;
pub const T_MIN: f64 = 1e-8;
pub const T_MAX: f64 = 1e8;

/// `(1/t) ||prox_{tφ}(z - t g) - z||`.
pub fn stationarity(z: &[f64], g: &[f64], t: f64, phi: &Prox, w: &[f64]) -> Result<f64> {
    let y = phi.apply(&shifted(z, g, -t), w, t)?;
    let d: Vec<f64> = y.iter().zip(z).map(|(a, b)| a - b).collect();
    Ok(wnorm(&d, w) / t)
}

fn shifted(z: &[f64], g: &[f64], a: f64) -> Vec<f64> {
    z.iter().zip(g).map(|(x, y)| x + a * y).collect()
}

/// `m(z + s) - m(z)` for the quadratic model, given `B s`.
pub fn model_value(g: &[f64], s: &[f64], bs: &[f64], phi_new: f64, phi_old: f64, w: &[f64]) -> f64 {
    wdot(g, s, w) + 0.5 * wdot(s, bs, w) + phi_new - phi_old
}

#[derive(Clone, Debug)]
pub struct CauchyStep {
    pub s: Vec<f64>,
    pub t: f64,
    pub backtracks: usize,
    /// `m(z) - m(z + s)`.
    pub decrease: f64,
}

/// Backtracking search over `t = t0 / 2^i` for a proximal gradient step that
/// stays in the trust region and gives sufficient model decrease.
#[allow(clippy::too_many_arguments)]
pub fn cauchy_point(
    z: &[f64],
    g: &[f64],
    b: &mut LinOp<'_>,
    phi: &Prox,
    w: &[f64],
    delta: f64,
    t0: f64,
    params: &TrParams,
) -> Result<CauchyStep> {
    let phi_z = phi.value(z, w);
    let mut t = t0.clamp(T_MIN, T_MAX);
    for i in 0..=MAX_BACKTRACKS {
        let y = phi.apply(&shifted(z, g, -t), w, t)?;
        let s: Vec<f64> = y.iter().zip(z).map(|(a, b)| a - b).collect();
        let ns = wnorm(&s, w);
        if ns <= params.kappa_rad * delta {
            let bs = b(&s)?;
            let dm = model_value(g, &s, &bs, phi.value(&y, w), phi_z, w);
            if dm <= -(params.mu_c / t) * ns * ns {
                return Ok(CauchyStep { s, t, backtracks: i, decrease: -dm });
            }
        }
        t *= 0.5;
    }
    Err(Error::CauchyFailed(MAX_BACKTRACKS))
}

#[derive(Clone, Debug)]
pub struct SubproblemStep {
    pub z_plus: Vec<f64>,
    pub s: Vec<f64>,
    /// `m(z) - m(z_plus)`.
    pub pred: f64,
    pub iterations: usize,
}

const MAX_HALVINGS: usize = 40;

/// Spectral proximal gradient on the model, started from the Cauchy point.
/// Trial points outside the trust region are pulled back radially onto it
/// (which keeps them in the domain of φ by convexity); a trial point is
/// kept only if the model does not increase.
#[allow(clippy::too_many_arguments)]
pub fn solve_subproblem(
    z: &[f64],
    g: &[f64],
    b: &mut LinOp<'_>,
    phi: &Prox,
    w: &[f64],
    delta: f64,
    cauchy: &CauchyStep,
    params: &TrParams,
) -> Result<SubproblemStep> {
    let radius = params.kappa_rad * delta;
    let phi_z = phi.value(z, w);
    let mut s = cauchy.s.clone();
    let mut bs = b(&s)?;
    let mut m = -cauchy.decrease;
    let mut grad: Vec<f64> = g.iter().zip(&bs).map(|(a, c)| a + c).collect();
    let mut lam = cauchy.t.clamp(T_MIN, T_MAX);
    let mut iterations = 0;
    let mut stalls = 0;
    for _ in 0..params.subproblem_iters {
        let x: Vec<f64> = z.iter().zip(&s).map(|(a, c)| a + c).collect();
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let y = phi.apply(&shifted(&x, &grad, -lam), w, lam)?;
            let mut d: Vec<f64> = y.iter().zip(z).map(|(a, c)| a - c).collect();
            let nd = wnorm(&d, w);
            if nd > radius {
                let f = radius / nd;
                d.iter_mut().for_each(|v| *v *= f);
            }
            let y: Vec<f64> = z.iter().zip(&d).map(|(a, c)| a + c).collect();
            let bd = b(&d)?;
            let my = model_value(g, &d, &bd, phi.value(&y, w), phi_z, w);
            if my <= m {
                accepted = Some((d, bd, my));
                break;
            }
            lam *= 0.5;
        }
        let Some((d, bd, my)) = accepted else { break };
        iterations += 1;
        let step: Vec<f64> = d.iter().zip(&s).map(|(a, c)| a - c).collect();
        let new_grad: Vec<f64> = g.iter().zip(&bd).map(|(a, c)| a + c).collect();
        let improvement = m - my;
        let ss = wdot(&step, &step, w);
        let dg: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, c)| a - c).collect();
        let sy = wdot(&step, &dg, w);
        s = d;
        bs = bd;
        m = my;
        grad = new_grad;
        if ss == 0.0 {
            break;
        }
        if improvement <= 1e-14 * (m.abs() + cauchy.decrease) {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
        } else {
            stalls = 0;
        }
        lam = if sy > 0.0 { (ss / sy).clamp(T_MIN, T_MAX) } else { T_MAX };
    }
    let _ = bs;
    let z_plus = z.iter().zip(&s).map(|(a, c)| a + c).collect();
    Ok(SubproblemStep { z_plus, s, pred: -m, iterations })
}

/// `κ_val (γ min(pred, ε))^{1/j}`.
pub fn value_tolerance(pred: f64, eps: f64, params: &TrParams) -> Result<f64> {
    if !(pred > 0.0) {
        return Err(Error::NonPositivePred(pred));
    }
    Ok(params.kappa_val * (params.gamma * pred.min(eps)).powf(1.0 / params.j))
}

/// Acceptance decision and next radius.
pub fn accept_and_update(rho: f64, delta: f64, params: &TrParams) -> (bool, f64) {
    if !(rho >= params.eta1) {
        (false, params.gamma1 * delta)
    } else if rho < params.eta2 {
        (true, delta)
    } else {
        (true, (params.gamma3 * delta).min(params.delta_max.max(delta)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_op(v: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![0.0; v.len()])
    }

    #[test]
    fn stationarity_cases() {
        let w = [1.0, 1.0];
        let psi = stationarity(&[1.0, 2.0], &[3.0, 4.0], 0.7, &Prox::Zero, &w).unwrap();
        assert!((psi - 5.0).abs() < 1e-14);
        let b = Prox::BoxVolume { lo: 0.0, hi: 1.0, volume: 1.0 };
        assert_eq!(stationarity(&[0.5, 0.5], &[0.0, 0.0], 1.0, &b, &w).unwrap(), 0.0);
        // One cell of area 0.5, soft threshold kills z = 0.1 when βt > 0.1.
        let l1 = Prox::L1 { beta: 1.0 };
        let t = 0.2;
        let psi = stationarity(&[0.1], &[0.0], t, &l1, &[0.5]).unwrap();
        assert!((psi - 0.1 * 0.5f64.sqrt() / t).abs() < 1e-15);
    }

    #[test]
    fn cauchy_gradient_step_accepted_at_once() {
        let p = TrParams::default();
        let c = cauchy_point(&[0.0, 0.0], &[0.1, -0.2], &mut zero_op, &Prox::Zero, &[1.0, 1.0], 1.0, 1.0, &p).unwrap();
        assert_eq!(c.backtracks, 0);
        assert_eq!(c.s, vec![-0.1, 0.2]);
        assert!((c.decrease - 0.05).abs() < 1e-15);
    }

    #[test]
    fn cauchy_scalar_quadratic() {
        // m(s) = s²/2 - s, so g = -1 and B = 1; t = 1 gives s = 1.
        let p = TrParams::default();
        let mut b = |v: &[f64]| Ok(v.to_vec());
        let c = cauchy_point(&[0.0], &[-1.0], &mut b, &Prox::Zero, &[1.0], 100.0, 1.0, &p).unwrap();
        assert_eq!(c.t, 1.0);
        assert!((c.s[0] - 1.0).abs() < 1e-15);
        assert!((c.decrease - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cauchy_respects_small_radius() {
        let p = TrParams::default();
        let c = cauchy_point(&[0.0], &[-1.0], &mut zero_op, &Prox::Zero, &[1.0], 1e-3, 1.0, &p).unwrap();
        assert!(c.s[0].abs() <= 1e-3);
        assert!(c.backtracks >= 10);
    }

    #[test]
    fn subproblem_reaches_unconstrained_minimizer() {
        // m(s) = g·s + s·A s/2 with A = [[3,1],[1,2]].
        let a = [[3.0, 1.0], [1.0, 2.0]];
        let mut b = |v: &[f64]| Ok(vec![a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]);
        let g = [1.0, -2.0];
        let p = TrParams { subproblem_iters: 200, ..TrParams::default() };
        let w = [1.0, 1.0];
        let c = cauchy_point(&[0.0, 0.0], &g, &mut b, &Prox::Zero, &w, 1e6, 1.0, &p).unwrap();
        let sp = solve_subproblem(&[0.0, 0.0], &g, &mut b, &Prox::Zero, &w, 1e6, &c, &p).unwrap();
        // -A^{-1} g = [-4/5, 7/5]
        assert!((sp.s[0] + 0.8).abs() < 1e-6 && (sp.s[1] - 1.4).abs() < 1e-6);
        assert!(sp.pred >= c.decrease);
    }

    #[test]
    fn zero_subproblem_iterations_return_cauchy_point() {
        let mut b = |v: &[f64]| Ok(v.to_vec());
        let p = TrParams { subproblem_iters: 0, ..TrParams::default() };
        let c = cauchy_point(&[0.0], &[-1.0], &mut b, &Prox::Zero, &[1.0], 0.5, 1.0, &p).unwrap();
        let sp = solve_subproblem(&[0.0], &[-1.0], &mut b, &Prox::Zero, &[1.0], 0.5, &c, &p).unwrap();
        assert_eq!(sp.s, c.s);
        assert_eq!(sp.pred, c.decrease);
    }

    #[test]
    fn value_tolerance_examples() {
        let p = TrParams::default();
        let t = value_tolerance(1.0, 1.0 - 1e-3, &p).unwrap();
        let expect = 1e6 * (0.999f64 * 0.999).powf(1.0 / 0.9);
        assert!((t - expect).abs() < 1e-6);
        assert!((t / 1e6 - 0.99778).abs() < 1e-5);
        let z = TrParams { kappa_val: 0.0, ..TrParams::default() };
        assert_eq!(value_tolerance(1.0, 1.0, &z).unwrap(), 0.0);
        assert!(value_tolerance(0.0, 1.0, &p).is_err());
        assert!(value_tolerance(0.1, 1.0, &p).unwrap() < value_tolerance(0.2, 1.0, &p).unwrap());
    }

    #[test]
    fn radius_updates() {
        let p = TrParams::default();
        assert_eq!(accept_and_update(0.01, 4.0, &p), (false, 1.0));
        assert_eq!(accept_and_update(0.5, 4.0, &p), (true, 4.0));
        assert_eq!(accept_and_update(0.95, 4.0, &p), (true, 10.0));
        assert!(!accept_and_update(f64::NAN, 4.0, &p).0);
    }
}
