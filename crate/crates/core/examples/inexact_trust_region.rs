//! The trust-region driver on a two-variable quadratic whose values carry
//! injected noise, inside and far outside the admissible value tolerance.
//!
//! `cargo run --release --example inexact_trust_region`

use tr_afem::problems::NoisyQuadratic;
use tr_afem::prox::Prox;
use tr_afem::tr::{run_with, TrParams};

fn main() -> tr_afem::Result<()> {
    let params = TrParams { kappa_val: 1.0, kappa_der: 1.0, ..TrParams::default() };
    for noise in [0.0, 1.0, 100.0] {
        for seed in 0..4 {
            let mut oracle = NoisyQuadratic::standard(noise, seed);
            let z0 = oracle.start([3.0, 3.0]);
            let mut iterates = Vec::new();
            let report = run_with(&mut oracle, &Prox::Zero, z0, &params, |_, _, z| {
                iterates.push(z.values.clone());
                Ok(())
            })?;
            iterates.push(report.control.values.clone());
            let xs = oracle.minimizer();
            let x = &report.control.values;
            let err = ((x[0] - xs[0]).powi(2) + (x[1] - xs[1]).powi(2)).sqrt();
            // Increases of the exact objective along the iterates.
            let f: Vec<f64> = iterates.iter().map(|z| oracle.value(z)).collect();
            let increases = f.windows(2).filter(|p| p[1] > p[0]).count();
            println!(
                "noise x{noise:<5} seed {seed}: {:?} after {:>3} iterations, |x - x*| = {err:.2e}, {increases} increases",
                report.status, report.iterations
            );
        }
    }
    Ok(())
}
