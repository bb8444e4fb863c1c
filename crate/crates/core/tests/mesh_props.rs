mod common;

use std::sync::Arc;

use proptest::prelude::*;
use tr_afem::mesh::{
    bisect, create_rect_mesh, dorfler_mark, prolong_cellfield, refine_uniform, BoundaryTag, CellField, Diagonal, Mesh,
    RectGrid,
};

use common::check_mesh;

fn on_unit_boundary(p: [f64; 2]) -> bool {
    let e = 1e-12;
    p[0] < e || p[1] < e || p[0] > 1.0 - e || p[1] > 1.0 - e
}

fn square(nx: usize, ny: usize, backward: bool) -> Arc<Mesh> {
    let d = if backward { Diagonal::Backward } else { Diagonal::Forward };
    let grid = RectGrid::unit(nx, ny).with_diagonal(d);
    Arc::new(create_rect_mesh(&grid, None, &|_, _| BoundaryTag::Neumann).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn random_bisection_stays_conforming(
        nx in 1usize..4,
        ny in 1usize..4,
        backward in any::<bool>(),
        picks in prop::collection::vec(prop::collection::vec(0usize..10_000, 1..6), 1..8),
    ) {
        let mut mesh = square(nx, ny, backward);
        let angle0 = mesh.stats().min_angle;
        for round in picks {
            let marked: Vec<usize> = round.iter().map(|p| p % mesh.num_cells()).collect();
            let before = mesh.num_cells();
            let next = bisect(&mesh, &marked).unwrap();
            prop_assert!(next.num_cells() > before);
            prop_assert_eq!(next.parent().len(), next.num_cells());
            prop_assert!(Arc::ptr_eq(next.previous().unwrap(), &mesh));
            mesh = next;
            check_mesh(&mesh, 1.0, &on_unit_boundary).map_err(TestCaseError::fail)?;
            prop_assert!(mesh.audit().is_ok());
        }
        // bisection only produces finitely many similarity classes
        prop_assert!(mesh.stats().min_angle >= angle0 - 1e-9);
    }

    #[test]
    fn prolongation_preserves_integrals(
        seed_vals in prop::collection::vec(-5.0f64..5.0, 8),
        picks in prop::collection::vec(0usize..1000, 1..5),
    ) {
        let coarse = square(2, 2, false);
        let field = CellField::new(coarse.clone(), seed_vals.clone()).unwrap();
        let mut mesh = coarse.clone();
        for p in picks {
            mesh = bisect(&mesh, &[p % mesh.num_cells()]).unwrap();
        }
        let fine = prolong_cellfield(&field, &mesh).unwrap();
        prop_assert!((fine.integral() - field.integral()).abs() < 1e-12);
        // each fine cell inherits its root ancestor's value
        for c in 0..mesh.num_cells() {
            let mut m: &Mesh = &mesh;
            let mut id = c;
            while let Some(prev) = m.previous() {
                id = m.parent()[id];
                m = prev;
            }
            prop_assert_eq!(fine.values()[c], seed_vals[id]);
        }
    }

    #[test]
    fn dorfler_marks_a_minimal_bulk(
        eta in prop::collection::vec(0.0f64..1.0, 1..60),
        theta in 0.01f64..1.0,
    ) {
        let total: f64 = eta.iter().sum();
        let marked = dorfler_mark(&eta, theta);
        if total == 0.0 {
            prop_assert!(marked.is_empty());
        } else {
            let sum: f64 = marked.iter().map(|&c| eta[c]).sum();
            prop_assert!(sum >= theta * total * (1.0 - 1e-12));
            let smallest = marked.iter().map(|&c| eta[c]).fold(f64::INFINITY, f64::min);
            prop_assert!(sum - smallest < theta * total);
            let mut sorted = marked.clone();
            sorted.sort_unstable();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), marked.len());
        }
    }
}

#[test]
fn two_uniform_bisections_halve_the_mesh_size() {
    let m0 = square(3, 2, true);
    let m1 = refine_uniform(&m0).unwrap();
    let m2 = refine_uniform(&m1).unwrap();
    assert_eq!(m1.num_cells(), 2 * m0.num_cells());
    assert_eq!(m2.num_cells(), 4 * m0.num_cells());
    assert!((m2.stats().h_max - 0.5 * m0.stats().h_max).abs() < 1e-14);
    check_mesh(&m2, 1.0, &on_unit_boundary).unwrap();
}

#[test]
fn boundary_tags_survive_refinement() {
    let grid = RectGrid::unit(2, 2);
    let classify = |a: [f64; 2], b: [f64; 2]| {
        if a[0] == 0.0 && b[0] == 0.0 {
            BoundaryTag::Dirichlet
        } else {
            BoundaryTag::Neumann
        }
    };
    let mut mesh = Arc::new(create_rect_mesh(&grid, None, &classify).unwrap());
    for _ in 0..3 {
        mesh = refine_uniform(&mesh).unwrap();
    }
    let mut dirichlet_len = 0.0;
    for (i, e) in mesh.edges().iter().enumerate() {
        if e.tag == Some(BoundaryTag::Dirichlet) {
            let [p, q] = e.vertices;
            assert_eq!(mesh.vertices()[p][0], 0.0);
            assert_eq!(mesh.vertices()[q][0], 0.0);
            dirichlet_len += mesh.edge_length(i);
        }
    }
    assert!((dirichlet_len - 1.0).abs() < 1e-14);
    assert!((mesh.boundary_length() - 4.0).abs() < 1e-13);
}
