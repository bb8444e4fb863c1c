//! Sparse control of the Poisson equation on the L-shape with the exact
//! reduced Hessian as trust-region model.
//!
//! `cargo run --release --example poisson_control`

use std::time::Instant;

use tr_afem::problems::{PoissonConfig, PoissonControl};
use tr_afem::tr::{run, ModelKind, TrParams};

fn main() -> tr_afem::Result<()> {
    let config = PoissonConfig::default();
    let prox = config.prox();
    let mut oracle = PoissonControl::new(config)?;
    let z0 = oracle.initial_control();
    let params = TrParams { kappa_val: 1e6, kappa_der: 1e6, model: ModelKind::Hessian, ..TrParams::default() };

    let start = Instant::now();
    let report = run(&mut oracle, &prox, z0, &params)?;
    println!("{:>4} {:>7} {:>14} {:>10} {:>10} {:>9} {:>3}", "k", "dofs", "F", "psi", "delta", "rho", "acc");
    for r in &report.history {
        println!(
            "{:>4} {:>7} {:>14.8e} {:>10.3e} {:>10.3e} {:>9.3} {:>3}",
            r.k, r.dofs, r.f, r.psi, r.delta, r.rho, r.accepted as u8
        );
    }
    let z = &report.control;
    let zeros = z.values().iter().filter(|&&v| v == 0.0).count();
    println!(
        "{:?} after {} iterations, psi {:.3e}, {} dofs, {:.1}% zero cells, {:.1?}",
        report.status,
        report.iterations,
        report.final_psi,
        report.final_dofs,
        100.0 * zeros as f64 / z.values().len() as f64,
        start.elapsed()
    );
    Ok(())
}
