//! Serial consensus for networks of `n`-th order integrator agents.
//!
//! The closed loop `prod_k (sI + p_k L) X = U` is assembled from a pole set
//! and a graph Laplacian as `A kron L`, where `A` is the companion matrix of
//! `prod_k (s + p_k)`. Transients from any initial condition are bounded by
//! the infinity-norm condition number of a diagonalizer of `A`, independent
//! of the graph and the number of agents.
//!
//! - [`graphs`]: digraphs, Laplacians, reachability, Kronecker products.
//! - [`spectra`]: pole sets, companion matrices, Vandermonde
//!   diagonalization and the minimal condition number.
//! - [`dynamics`]: the assembled system, RK4 simulation, transient bounds.
//! - [`formation`]: PI-controlled vehicle formations with load disturbances.
//! - [`scenario`]: JSON scenario files and report generation.
//! - [`verify`]: randomized property suites.

// `!(x <= tol)` checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod formation;
pub mod graphs;
mod rk4;
pub mod scenario;
pub mod spectra;
pub mod verify;

pub use error::{Error, Result};
