use std::io::Write;

/// One trust-region iteration. The last record of a run carries the final
/// stationarity value and `NaN` in the step fields.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub k: usize,
    pub dofs: usize,
    /// Objective at the current iterate on the value mesh.
    pub f: f64,
    pub f_trial: f64,
    pub psi: f64,
    pub delta: f64,
    pub rho: f64,
    pub pred: f64,
    pub cred: f64,
    pub accepted: bool,
    pub tau_val: f64,
    pub tau_der: f64,
    pub xi: f64,
    /// Norm of the trial step.
    pub step_norm: f64,
    /// Cauchy step length.
    pub t: f64,
    /// Model decrease at the Cauchy point.
    pub pred_cauchy: f64,
    /// Norm of the Cauchy step.
    pub cauchy_norm: f64,
    pub b_norm: f64,
    /// Largest constant for which the fraction of Cauchy decrease holds.
    pub kappa_fcd: f64,
    /// A refinement budget cut an evaluation short.
    pub degraded: bool,
}

impl Record {
    pub fn terminal(k: usize, dofs: usize, f: f64, psi: f64, delta: f64, tau_der: f64, xi: f64) -> Self {
        Self {
            k,
            dofs,
            f,
            f_trial: f64::NAN,
            psi,
            delta,
            rho: f64::NAN,
            pred: f64::NAN,
            cred: f64::NAN,
            accepted: false,
            tau_val: f64::NAN,
            tau_der,
            xi,
            step_norm: f64::NAN,
            t: f64::NAN,
            pred_cauchy: f64::NAN,
            cauchy_norm: f64::NAN,
            b_norm: f64::NAN,
            kappa_fcd: f64::NAN,
            degraded: false,
        }
    }

    /// Whether this record describes a computed step.
    pub fn is_step(&self) -> bool {
        !self.pred.is_nan()
    }
}

pub const HISTORY_HEADER: &str = "k,dofs,F,psi,delta,rho,pred,cred,accepted,tau_val,tau_der,xi";

pub fn write_history_csv(mut out: impl Write, records: &[Record]) -> std::io::Result<()> {
    writeln!(out, "{HISTORY_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{:e},{:e},{:e},{:e},{:e},{:e},{},{:e},{:e},{:e}",
            r.k,
            r.dofs,
            r.f,
            r.psi,
            r.delta,
            r.rho,
            r.pred,
            r.cred,
            u8::from(r.accepted),
            r.tau_val,
            r.tau_der,
            r.xi
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        let r = Record::terminal(3, 10, 1.5, 1e-7, 2.0, 0.5, 0.0);
        write_history_csv(&mut buf, &[r]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(HISTORY_HEADER));
        let row = lines.next().unwrap();
        assert_eq!(row.split(',').count(), 12);
        assert!(row.starts_with("3,10,1.5e0,"));
        assert!(row.contains("NaN"));
    }
}
