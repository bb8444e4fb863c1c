//! Lagrange finite elements on triangle meshes.

mod assembly;
mod quadrature;
mod space;
mod sparse;

pub use assembly::{
    assemble_diffusion, assemble_load, assemble_load_points, assemble_load_raw, assemble_mass, dual_norm,
    zero_dirichlet, Coefficient, RieszMap, Source, DUAL_NORM_TOL,
};
pub use quadrature::{gauss_edge, Quadrature};
pub use space::{build_space, FeFunction, FeSpace};
pub use sparse::{dot, norm, pcg, solve_spd, CsrMatrix, Preconditioner, SolveInfo, SpdSolver};
