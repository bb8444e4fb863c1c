//! Heat-sink topology optimisation at reduced scale.
//!
//! `cargo run --release --example topology_optimization -- [example] [grid] [model]`
//! with example 1 or 2, grid cells per side (default 16) and model
//! `zero`, `lbfgs` or `lbfgs<m>` (default lbfgs).

use std::time::Instant;

use tr_afem::problems::{TopologyConfig, TopologyExample, TopologyProblem};
use tr_afem::tr::{run_with, ModelKind, TrParams};

fn main() -> tr_afem::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let id = args.first().map_or(Ok(1), |s| s.parse()).map_err(|e| tr_afem::Error::Config(format!("{e}")))?;
    let grid = args.get(1).map_or(Ok(16), |s| s.parse()).map_err(|e| tr_afem::Error::Config(format!("{e}")))?;
    let name = args.get(2).map_or("lbfgs", String::as_str);
    let model = ModelKind::parse(name).ok_or_else(|| tr_afem::Error::Config(format!("unknown model {name}")))?;

    let example = TopologyExample::from_id(id)?;
    let config = TopologyConfig { grid, max_dofs: 30_000, ..TopologyConfig::new(example) };
    let mut oracle = TopologyProblem::new(config)?;
    let prox = oracle.prox();
    let z0 = oracle.initial_control();
    let params = TrParams { kappa_val: 1e9, kappa_der: 1e9, model, max_iter: 1000, ..TrParams::default() };

    let start = Instant::now();
    let report = run_with(&mut oracle, &prox, z0, &params, |_, r, _| {
        if r.k % 10 == 0 || !r.is_step() {
            println!(
                "k {:>4} dofs {:>6} F {:.10e} psi {:.3e} delta {:.3e} rho {:.3}",
                r.k, r.dofs, r.f, r.psi, r.delta, r.rho
            );
        }
        Ok(())
    })?;
    let z = &report.control;
    println!(
        "{:?} after {} iterations, psi {:.3e}, {} dofs, volume {:.12}, {:.1?}",
        report.status,
        report.iterations,
        report.final_psi,
        report.final_dofs,
        z.integral(),
        start.elapsed()
    );
    Ok(())
}
