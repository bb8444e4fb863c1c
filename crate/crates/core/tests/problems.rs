use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tr_afem::fem::{assemble_diffusion, assemble_load_points, Coefficient, FeFunction};
use tr_afem::mesh::CellField;
use tr_afem::problems::{
    check_topology, max_error, PoissonConfig, PoissonControl, Target, TopologyConfig, TopologyExample, TopologyProblem,
};
use tr_afem::prox::Prox;

fn random_field(mesh: &Arc<tr_afem::mesh::Mesh>, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> CellField {
    let v = (0..mesh.num_cells()).map(|_| rng.gen_range(lo..hi)).collect();
    CellField::new(Arc::clone(mesh), v).unwrap()
}

fn small_poisson() -> PoissonControl {
    PoissonControl::new(PoissonConfig { grid: 4, ..PoissonConfig::default() }).unwrap()
}

#[test]
fn poisson_hessian_is_symmetric_and_bounded_below_by_alpha() {
    let p = small_poisson();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let alpha = p.config().alpha;
    for _ in 0..5 {
        let u = random_field(p.mesh(), &mut rng, -1.0, 1.0);
        let v = random_field(p.mesh(), &mut rng, -1.0, 1.0);
        let (hu, hv) = (p.hessian(&u).unwrap(), p.hessian(&v).unwrap());
        let (a, b) = (hu.dot(&v), hv.dot(&u));
        assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()), "{a} vs {b}");
        assert!(hv.dot(&v) >= alpha * v.dot(&v) * (1.0 - 1e-10));
    }
}

#[test]
fn poisson_gradient_difference_equals_hessian_action() {
    // the reduced objective is quadratic in the control
    let p = small_poisson();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let z = random_field(p.mesh(), &mut rng, -5.0, 5.0);
    let v = random_field(p.mesh(), &mut rng, -1.0, 1.0);
    let zv = z.with_values_unchecked(z.values().iter().zip(v.values()).map(|(a, b)| a + b).collect());
    let g0 = p.gradient_here(&z).unwrap();
    let g1 = p.gradient_here(&zv).unwrap();
    let hv = p.hessian(&v).unwrap();
    for ((a, b), h) in g1.values().iter().zip(g0.values()).zip(hv.values()) {
        assert!((a - b - h).abs() < 1e-9, "{} vs {h}", a - b);
    }
}

#[test]
fn poisson_adjoint_matches_dense_direct_solve() {
    let p = small_poisson();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let z = random_field(p.mesh(), &mut rng, -3.0, 3.0);
    let u = p.state(&z).unwrap().u;
    let lam = p.adjoint(&u).unwrap().u;

    let sp = p.space();
    let target = Target::by_name("sin1").unwrap();
    let rhs = assemble_load_points(sp, &|c, l| (target.f)(sp.point(c, l)) - u.eval(c, l));
    let k = assemble_diffusion(sp, Coefficient::Constant(1.0)).unwrap().to_dense();
    let n = sp.n_dofs();
    let fixed = sp.dirichlet();
    let kd = DMatrix::from_fn(n, n, |i, j| {
        if fixed[i] || fixed[j] {
            if i == j {
                1.0
            } else {
                0.0
            }
        } else {
            k[i][j]
        }
    });
    let exact = kd.lu().solve(&DVector::from_vec(rhs)).unwrap();
    let err = (DVector::from_column_slice(lam.coeffs()) - &exact).amax();
    assert!(err <= 1e-9 * exact.amax(), "{err:e}");
}

#[test]
fn adjoint_of_interpolated_target_is_small() {
    let p = small_poisson();
    let target = Target::by_name("sin1").unwrap();
    let ud = FeFunction::interpolate(Arc::clone(p.space()), |x| (target.f)(x));
    let lam = p.adjoint(&ud).unwrap().u;
    let z = CellField::constant(Arc::clone(p.mesh()), 1.0);
    let u1 = p.state(&z).unwrap().u;
    let lam1 = p.adjoint(&u1).unwrap().u;
    let size = |f: &FeFunction| f.coeffs().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // interpolation error only, far below the response to a unit control
    assert!(size(&lam) < 1e-2 * size(&lam1), "{} vs {}", size(&lam), size(&lam1));
}

#[test]
fn poisson_prox_is_l1_with_configured_weight() {
    let p = small_poisson();
    assert_eq!(p.config().prox(), Prox::L1 { beta: 1e-2 });
}

fn small_topology(example: TopologyExample) -> TopologyProblem {
    TopologyProblem::new(TopologyConfig { grid: 8, ..TopologyConfig::new(example) }).unwrap()
}

#[test]
fn filter_obeys_maximum_principle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for example in [TopologyExample::LeftTop, TopologyExample::LeftSlot] {
        let t = small_topology(example);
        for _ in 0..5 {
            let z = random_field(t.mesh(), &mut rng, 0.0, 1.0);
            let (rho, _) = t.filter_solve(&z).unwrap();
            let (lo, hi) =
                z.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
            for &r in rho.coeffs() {
                assert!(r >= lo - 1e-9 && r <= hi + 1e-9, "{r} outside [{lo}, {hi}]");
            }
        }
        let z = CellField::constant(Arc::clone(t.mesh()), 0.37);
        let (rho, _) = t.filter_solve(&z).unwrap();
        assert!(rho.coeffs().iter().all(|r| (r - 0.37).abs() < 1e-9));
    }
}

#[test]
fn adding_material_never_increases_compliance() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let t = small_topology(TopologyExample::LeftTop);
    let z = random_field(t.mesh(), &mut rng, 0.0, 1.0);
    let (j, g) = t.objective_and_gradient(&z).unwrap();
    assert!(j > 0.0);
    let scale = g.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(g.values().iter().all(|&v| v <= 1e-8 * scale));
}

#[test]
fn topology_gradient_passes_finite_differences() {
    let t = small_topology(TopologyExample::LeftSlot);
    let samples = check_topology(&t, 3, 4).unwrap();
    assert!(max_error(&samples) < 1e-4);
}

#[test]
fn volume_constraint_uses_configured_fraction() {
    let t = small_topology(TopologyExample::LeftTop);
    let z0 = t.initial_control();
    match t.prox() {
        Prox::BoxVolume { lo, hi, volume } => {
            assert_eq!((lo, hi), (0.0, 1.0));
            assert!((volume - z0.integral()).abs() < 1e-14);
            assert_eq!(t.prox().value(z0.values(), z0.areas()), 0.0);
        }
        other => panic!("unexpected prox {other:?}"),
    }
}
