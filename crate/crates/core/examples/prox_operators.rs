//! The three nonsmooth terms and their proximity operators on a small
//! nonuniform cell field.
//!
//! `cargo run --release --example prox_operators`

use tr_afem::prox::{project_box_volume, Prox};

fn main() -> tr_afem::Result<()> {
    let w = [0.1, 0.2, 0.3, 0.15, 0.25];
    let z = [-1.5, 0.2, 0.9, 2.4, -0.05];
    let r = 0.5;

    for phi in [Prox::Zero, Prox::L1 { beta: 0.8 }, Prox::BoxVolume { lo: 0.0, hi: 1.0, volume: 0.4 }] {
        phi.validate(w.iter().sum())?;
        let y = phi.apply(&z, &w, r)?;
        println!("{phi:?}");
        println!("  prox  = {:?}", y.iter().map(|v| format!("{v:+.6}")).collect::<Vec<_>>());
        println!("  phi(y) = {}", phi.value(&y, &w));
    }

    let (y, mu) = project_box_volume(&z, &w, 0.0, 1.0, 0.4)?;
    let vol: f64 = y.iter().zip(&w).map(|(a, b)| a * b).sum();
    println!("volume multiplier {mu:.12}, volume {vol:.15}");
    Ok(())
}
