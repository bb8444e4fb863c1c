//! Newest-vertex bisection on a unit square: repeated refinement toward a
//! corner, then prolongation of a cell field onto the refined mesh.
//!
//! `cargo run --release --example mesh_refinement -- [rounds]`

use std::sync::Arc;

use tr_afem::mesh::{bisect, create_rect_mesh, dorfler_mark, prolong_cellfield, BoundaryTag, CellField, RectGrid};

fn main() -> tr_afem::Result<()> {
    let rounds: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(12);
    let mut mesh = Arc::new(create_rect_mesh(&RectGrid::unit(2, 2), None, &|_, _| BoundaryTag::Dirichlet)?);
    let coarse = CellField::from_fn(mesh.clone(), |p| p[0] + 2.0 * p[1]);

    println!("{:>5} {:>7} {:>7} {:>10} {:>10} {:>9}", "round", "cells", "verts", "h_max", "h_min", "min_angle");
    for round in 0..=rounds {
        let s = mesh.stats();
        println!(
            "{:>5} {:>7} {:>7} {:>10.3e} {:>10.3e} {:>9.2}",
            round, s.cell_count, s.vertex_count, s.h_max, s.h_min, s.min_angle
        );
        if round == rounds {
            break;
        }
        // indicator grows toward the origin
        let eta: Vec<f64> = (0..mesh.num_cells())
            .map(|c| {
                let p = mesh.centroid(c);
                mesh.areas()[c] / (p[0] * p[0] + p[1] * p[1] + 1e-6)
            })
            .collect();
        let marked = dorfler_mark(&eta, 0.5);
        mesh = bisect(&mesh, &marked)?;
    }

    if let Err(e) = mesh.audit() {
        println!("audit failed: {e}");
    }
    let fine = prolong_cellfield(&coarse, &mesh)?;
    println!("area {:.15}  ∫field coarse {:.15}  fine {:.15}", mesh.total_area(), coarse.integral(), fine.integral());
    Ok(())
}
