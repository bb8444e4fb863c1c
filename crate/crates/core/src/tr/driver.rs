use super::model::{estimate_norm, Lbfgs, ModelKind};
use super::step::{accept_and_update, cauchy_point, solve_subproblem, stationarity, value_tolerance, LinOp};
use super::{wnorm, Control, Oracle, Record, TrParams};
use crate::error::{Error, Result};
use crate::prox::Prox;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Converged,
    IterationCap,
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::IterationCap => "iteration_cap",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunReport<C> {
    pub status: Status,
    pub history: Vec<Record>,
    pub control: C,
    pub final_psi: f64,
    /// Number of trust-region steps computed.
    pub iterations: usize,
    pub final_dofs: usize,
    /// Objective at the final iterate (`NaN` if never evaluated).
    pub final_value: f64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct DerivativeResult<C> {
    pub gradient: C,
    pub psi: f64,
    pub xi: f64,
    /// Tolerance in force when the loop stopped.
    pub tau: f64,
    pub passes: usize,
    pub degraded: bool,
}

/// Requests gradients with tolerance `κ_der Δ`, then `κ_der min(Ψ, Δ)`,
/// until the returned estimator is below the current tolerance. Stops early
/// if the oracle reports a budget cut or cannot refine further.
pub fn derivative_loop<O: Oracle>(
    oracle: &mut O,
    z: &mut O::Control,
    delta: f64,
    t: f64,
    phi: &Prox,
    params: &TrParams,
) -> Result<DerivativeResult<O::Control>> {
    let mut tau = params.kappa_der * delta;
    let mut passes = 0;
    let mut last_dofs = usize::MAX;
    loop {
        let ge = oracle.gradient(z, tau.min(params.tau_max_der))?;
        passes += 1;
        let psi = stationarity(z.values(), ge.gradient.values(), t, phi, z.weights())?;
        tau = params.kappa_der * psi.min(delta);
        let stuck = oracle.dof_count() == last_dofs;
        last_dofs = oracle.dof_count();
        if ge.xi <= tau || ge.degraded || stuck {
            return Ok(DerivativeResult {
                gradient: ge.gradient,
                psi,
                xi: ge.xi,
                tau,
                passes,
                degraded: ge.degraded || (stuck && ge.xi > tau),
            });
        }
    }
}

pub fn run<O: Oracle>(oracle: &mut O, phi: &Prox, z0: O::Control, params: &TrParams) -> Result<RunReport<O::Control>> {
    run_with(oracle, phi, z0, params, |_, _, _| Ok(()))
}

/// Full trust-region loop. `observe` is called after every step with the
/// record and the iterate the step was taken from.
pub fn run_with<O: Oracle>(
    oracle: &mut O,
    phi: &Prox,
    z0: O::Control,
    params: &TrParams,
    mut observe: impl FnMut(&mut O, &Record, &O::Control) -> Result<()>,
) -> Result<RunReport<O::Control>> {
    let warnings = params.validate()?;
    phi.validate(z0.weights().iter().sum())?;
    if !phi.value(z0.values(), z0.weights()).is_finite() {
        return Err(Error::InfeasibleStart);
    }
    let mut z = z0;
    oracle.align(&mut z)?;
    let mut delta = params.delta0;
    let mut t = 1.0;
    let mut lbfgs: Lbfgs<O::Control> = Lbfgs::new(match params.model {
        ModelKind::Lbfgs { memory } => memory,
        _ => 1,
    });
    let mut pending: Option<(O::Control, O::Control)> = None;
    let mut history = Vec::new();
    let mut last_f = f64::NAN;
    let mut k = 0;
    loop {
        let dr = derivative_loop(oracle, &mut z, delta, t, phi, params)?;
        let g = dr.gradient;
        if let Some((mut s, mut g_old)) = pending.take() {
            oracle.align(&mut s)?;
            oracle.align(&mut g_old)?;
            let y: Vec<f64> = g.values().iter().zip(g_old.values()).map(|(a, b)| a - b).collect();
            let y = g.with_values(y);
            lbfgs.align(|f| oracle.align(f))?;
            lbfgs.push(s, y);
        } else if !lbfgs.is_empty() {
            lbfgs.align(|f| oracle.align(f))?;
        }
        if dr.psi <= params.psi_tol || k >= params.max_iter {
            let mut rec = Record::terminal(k, oracle.dof_count(), last_f, dr.psi, delta, dr.tau, dr.xi);
            rec.degraded = dr.degraded;
            history.push(rec);
            let status = if dr.psi <= params.psi_tol { Status::Converged } else { Status::IterationCap };
            return Ok(RunReport {
                status,
                history,
                final_psi: dr.psi,
                iterations: k,
                final_dofs: oracle.dof_count(),
                final_value: last_f,
                control: z,
                warnings,
            });
        }

        let w = z.weights().to_vec();
        let (cauchy, sp, b_norm) = {
            let zref = &z;
            let lb = &lbfgs;
            let orc = &mut *oracle;
            let mut bop: Box<LinOp<'_>> = match params.model {
                ModelKind::Zero => Box::new(|v: &[f64]| Ok(vec![0.0; v.len()])),
                ModelKind::Lbfgs { .. } => Box::new(move |v: &[f64]| Ok(lb.apply(v))),
                ModelKind::Hessian => Box::new(move |v: &[f64]| {
                    let dir = zref.with_values(v.to_vec());
                    match orc.hessian_apply(zref, &dir) {
                        Some(r) => r.map(|h| h.values().to_vec()),
                        None => Err(Error::InvalidParameter("oracle provides no Hessian".into())),
                    }
                }),
            };
            let cauchy = cauchy_point(z.values(), g.values(), &mut *bop, phi, &w, delta, t, params)?;
            let sp = solve_subproblem(z.values(), g.values(), &mut *bop, phi, &w, delta, &cauchy, params)?;
            let b_norm = match params.model {
                ModelKind::Zero => 0.0,
                _ => estimate_norm(&mut *bop, &w, 10)?,
            };
            (cauchy, sp, b_norm)
        };
        t = cauchy.t;
        let pred = sp.pred;
        let tau_val = value_tolerance(pred, params.epsilon(k), params)?;
        let step_norm = wnorm(&sp.s, &w);
        let mut z_trial = z.with_values(sp.z_plus);
        let vp = oracle.value_pair(&mut z, &mut z_trial, tau_val.min(params.tau_max_val))?;
        let f = vp.current + phi.value(z.values(), z.weights());
        let f_trial = vp.trial + phi.value(z_trial.values(), z_trial.weights());
        let cred = f - f_trial;
        let rho = cred / pred;
        let (accepted, next_delta) = accept_and_update(rho, delta, params);
        let psi = dr.psi;
        let kappa_fcd = pred / (psi * delta.min(psi / (1.0 + b_norm)));
        let rec = Record {
            k,
            dofs: oracle.dof_count(),
            f,
            f_trial,
            psi,
            delta,
            rho,
            pred,
            cred,
            accepted,
            tau_val,
            tau_der: dr.tau,
            xi: dr.xi,
            step_norm,
            t,
            pred_cauchy: cauchy.decrease,
            cauchy_norm: wnorm(&cauchy.s, &w),
            b_norm,
            kappa_fcd,
            degraded: dr.degraded || vp.degraded,
        };
        observe(oracle, &rec, &z)?;
        history.push(rec);
        if accepted {
            let s: Vec<f64> = z_trial.values().iter().zip(z.values()).map(|(a, b)| a - b).collect();
            let mut g_old = g;
            oracle.align(&mut g_old)?;
            pending = Some((z.with_values(s), g_old));
            z = z_trial;
            last_f = f_trial;
        } else {
            last_f = f;
        }
        delta = next_delta;
        k += 1;
    }
}
