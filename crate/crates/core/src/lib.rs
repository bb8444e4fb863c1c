//! Adaptive finite elements driving an inexact proximal trust-region method.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`]: conforming triangulations, newest-vertex bisection, Dörfler marking.
//! * [`fem`]: P1/P2 Lagrange spaces, sparse assembly, PCG, discrete dual norms.
//! * [`estimate`]: residual a posteriori estimators in energy and max norms.
//! * [`prox`]: proximity operators for the nonsmooth term.
//! * [`tr`]: the trust-region driver and its tolerance logic.
//! * [`problems`]: sparse Poisson control and heat-conduction topology optimisation.
//! * [`vtk`] and [`cli`]: output and the command-line driver.

// NaN must fail these checks, so `!(a < b)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimate;
pub mod fem;
pub mod mesh;
pub mod problems;
pub mod prox;
pub mod tr;
pub mod vtk;

pub use error::{Error, Result};
