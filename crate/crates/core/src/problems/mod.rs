//! PDE-constrained problems exposed as trust-region oracles.

pub mod afem;
pub mod check;
pub mod manufactured;
pub mod poisson;
pub mod synthetic;
pub mod topology;

pub use afem::{adaptive_loop, mark_and_refine, LoopStats};
pub use check::{check_poisson, check_topology, directional_check, max_error, FdSample, FD_STEP};
pub use manufactured::{estimate_rates, format_rates, RateRow, RatesConfig};
pub use poisson::{l_shape_mesh, PoissonConfig, PoissonControl, StateSolution, Target};
pub use synthetic::{HalvingOracle, NoisyQuadratic};
pub use topology::{TopologyConfig, TopologyExample, TopologyProblem, TopologyState};
