//! Discretization and solvers for the sublinear fractional p-Laplacian
//! Dirichlet problem
//!
//! ```text
//! (-Δ)_p^s u = λ u^{q-1} - u^{r-1}   in Ω = (a, b),
//! u > 0 in Ω,   u = 0 outside Ω,       1 < r < q < p,  p·s < 1.
//! ```
//!
//! The crate is `no_std` (it needs `alloc`). Unknowns are piecewise constant
//! on a uniform mesh of `Ω`, which makes every entry of the discrete
//! Gagliardo form a closed-form double integral. On top of the discrete
//! energy it provides an Armijo descent solver, the principal eigenpair of the
//! operator, a mountain-pass saddle search, and a bifurcation driver that
//! estimates the threshold `λ*` and traces the branch of biggest solutions.
//!
//! Enable the `parallel` feature to assemble kernels, apply the operator and
//! run multi-start solves on the rayon thread pool. Results do not depend on
//! the number of threads.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod error;
mod math;

pub mod bifurcation;
pub mod diagnostics;
pub mod kernel;
pub mod mesh;
pub mod params;
pub mod reaction;
pub mod solvers;

pub use error::{Error, Result};
pub use kernel::KernelMatrix;
pub use mesh::{GridFunction, Mesh1D};
pub use params::{odd_power, ProblemParams, RawParams};
pub use reaction::{ReactionModel, Variant};
