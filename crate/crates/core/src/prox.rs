//! Proximity operators of the nonsmooth term, in the area-weighted L²
//! geometry of piecewise-constant controls.

use crate::error::{Error, Result};

pub const BISECTION_CAP: usize = 200;
pub const VOLUME_TOL: f64 = 1e-12;
const POLISH_ROUNDS: usize = 8;
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Prox {
    Zero,
    /// `beta * ||z||_L1`.
    L1 {
        beta: f64,
    },
    /// Indicator of `{lo <= z <= hi, ∫z = volume}`.
    BoxVolume {
        lo: f64,
        hi: f64,
        volume: f64,
    },
}

impl Prox {
    /// Value of the nonsmooth term; `+∞` outside its domain.
    pub fn value(&self, z: &[f64], w: &[f64]) -> f64 {
        match *self {
            Prox::Zero => 0.0,
            Prox::L1 { beta } => beta * z.iter().zip(w).map(|(v, a)| a * v.abs()).sum::<f64>(),
            Prox::BoxVolume { lo, hi, volume } => {
                let bounds = z.iter().all(|&v| v >= lo - FEASIBILITY_TOL && v <= hi + FEASIBILITY_TOL);
                let vol: f64 = z.iter().zip(w).map(|(v, a)| v * a).sum();
                if bounds && (vol - volume).abs() <= FEASIBILITY_TOL {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// `argmin_y (1/2r)||y - z||² + φ(y)`.
    pub fn apply(&self, z: &[f64], w: &[f64], r: f64) -> Result<Vec<f64>> {
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!("prox step must be positive, got {r}")));
        }
        match *self {
            Prox::Zero => Ok(z.to_vec()),
            Prox::L1 { beta } => Ok(z.iter().map(|&v| soft_threshold(v, r * beta)).collect()),
            Prox::BoxVolume { lo, hi, volume } => project_box_volume(z, w, lo, hi, volume).map(|(y, _)| y),
        }
    }

    /// Checks parameter ranges for a domain of total weight `area`.
    pub fn validate(&self, area: f64) -> Result<()> {
        match *self {
            Prox::Zero => Ok(()),
            Prox::L1 { beta } if beta >= 0.0 => Ok(()),
            Prox::L1 { beta } => Err(Error::InvalidParameter(format!("L1 weight {beta} is negative"))),
            Prox::BoxVolume { lo, hi, volume } => {
                if !(lo <= hi) {
                    return Err(Error::InvalidParameter(format!("bounds [{lo}, {hi}] are empty")));
                }
                if volume < lo * area - VOLUME_TOL || volume > hi * area + VOLUME_TOL {
                    return Err(Error::InfeasibleVolume { target: volume, lo: lo * area, hi: hi * area });
                }
                Ok(())
            }
        }
    }
}

pub fn soft_threshold(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

/// Weighted projection onto `{lo <= y <= hi, Σ w y = volume}`. Returns the
/// projection and the multiplier `μ` with `y = clamp(z - μ, lo, hi)`.
pub fn project_box_volume(z: &[f64], w: &[f64], lo: f64, hi: f64, volume: f64) -> Result<(Vec<f64>, f64)> {
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("projection input is not finite".into()));
    }
    let area: f64 = w.iter().sum();
    Prox::BoxVolume { lo, hi, volume }.validate(area)?;
    let vol = |mu: f64| -> f64 { z.iter().zip(w).map(|(v, a)| a * (v - mu).clamp(lo, hi)).sum() };
    let zmin = z.iter().copied().fold(f64::INFINITY, f64::min);
    let zmax = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // vol is nonincreasing in mu: a gives the upper bound volume, b the lower.
    let (mut a, mut b) = (zmin - (hi - lo) - 1.0, zmax + 1.0);
    let mut mu = 0.5 * (a + b);
    let mut converged = false;
    for _ in 0..BISECTION_CAP {
        mu = 0.5 * (a + b);
        let v = vol(mu);
        if (v - volume).abs() <= VOLUME_TOL {
            converged = true;
            break;
        }
        if v > volume {
            a = mu;
        } else {
            b = mu;
        }
        if b - a <= f64::EPSILON * (1.0 + mu.abs()) {
            break;
        }
    }
    // Exact correction on the free set. The volume is piecewise linear in μ,
    // so re-solving on the current free set terminates in a few rounds.
    for _ in 0..POLISH_ROUNDS {
        let (mut free_w, mut free_wz, mut fixed) = (0.0, 0.0, 0.0);
        for (&v, &wt) in z.iter().zip(w) {
            let y = v - mu;
            if y > lo && y < hi {
                free_w += wt;
                free_wz += wt * v;
            } else {
                fixed += wt * y.clamp(lo, hi);
            }
        }
        if free_w <= 0.0 {
            break;
        }
        let corrected = (free_wz + fixed - volume) / free_w;
        if corrected == mu || (vol(corrected) - volume).abs() > (vol(mu) - volume).abs() {
            break;
        }
        mu = corrected;
    }
    // For large inputs `z - μ` loses digits; fix the remaining volume error
    // on the free entries, which are of unit size.
    let mut y: Vec<f64> = z.iter().map(|v| (v - mu).clamp(lo, hi)).collect();
    let free_w: f64 = y.iter().zip(w).filter(|(v, _)| **v > lo && **v < hi).map(|(_, a)| a).sum();
    if free_w > 0.0 {
        let shift = (volume - y.iter().zip(w).map(|(v, a)| v * a).sum::<f64>()) / free_w;
        for v in y.iter_mut().filter(|v| **v > lo && **v < hi) {
            *v = (*v + shift).clamp(lo, hi);
        }
    }
    let err = (y.iter().zip(w).map(|(v, a)| v * a).sum::<f64>() - volume).abs();
    if !converged && err > VOLUME_TOL {
        return Err(Error::BisectionFailed(BISECTION_CAP));
    }
    Ok((y, mu))
}
