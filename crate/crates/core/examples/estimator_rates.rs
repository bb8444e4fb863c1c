//! Uniform-refinement study of the energy error and the residual estimator
//! for P1 and P2 elements on a smooth manufactured solution.
//!
//! `cargo run --release --example estimator_rates`

use tr_afem::problems::{estimate_rates, format_rates, RatesConfig};

fn main() -> tr_afem::Result<()> {
    for degree in [1, 2] {
        println!("P{degree}");
        let rows = estimate_rates(&RatesConfig { degree, ..RatesConfig::default() })?;
        print!("{}", format_rates(&rows));
    }
    Ok(())
}
