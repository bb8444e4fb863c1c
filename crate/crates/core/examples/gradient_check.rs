//! Finite-difference checks of both reduced gradients on coarse meshes.
//!
//! `cargo run --release --example gradient_check`

use tr_afem::problems::{
    check_poisson, check_topology, max_error, PoissonConfig, PoissonControl, TopologyConfig, TopologyExample,
    TopologyProblem,
};

fn main() -> tr_afem::Result<()> {
    let poisson = PoissonControl::new(PoissonConfig::default())?;
    for s in check_poisson(&poisson, 5, 7)? {
        println!(
            "poisson  <g,d> = {:+.10e}  fd = {:+.10e}  rel = {:.2e}",
            s.analytic, s.finite_difference, s.relative_error
        );
    }
    for example in [TopologyExample::LeftTop, TopologyExample::LeftSlot] {
        let topo = TopologyProblem::new(TopologyConfig { grid: 8, ..TopologyConfig::new(example) })?;
        let samples = check_topology(&topo, 5, 7)?;
        for s in &samples {
            println!(
                "topo{}    <g,d> = {:+.10e}  fd = {:+.10e}  rel = {:.2e}",
                example.id(),
                s.analytic,
                s.finite_difference,
                s.relative_error
            );
        }
        println!("topo{} max relative error {:.2e}", example.id(), max_error(&samples));
    }

    let flipped = PoissonControl::new(PoissonConfig { flip_adjoint: true, ..PoissonConfig::default() })?;
    println!("flipped adjoint max relative error {:.2e}", max_error(&check_poisson(&flipped, 5, 7)?));
    Ok(())
}
