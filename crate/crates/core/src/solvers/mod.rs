//! Energy functionals and the solvers built on them.
//!
//! The discrete energy is
//!
//! ```text
//! Φ(u) = (1/p)[u]^p - h Σ_i F(x_i, u_i),
//! ```
//!
//! and its Euclidean gradient `A(u) - h f(x, u)` vanishes exactly at discrete
//! solutions. Residuals are sup-norms of that gradient.

mod descent;
mod eigen;
mod saddle;

use alloc::string::String;
use alloc::vec::Vec;

pub use descent::{minimize, solve_above};
pub use eigen::{principal_eigenpair, EigenResult};
pub use saddle::{find_saddle, mountain_pass, MountainPassPath};

use crate::error::{Error, Result};
use crate::kernel::KernelMatrix;
use crate::mesh::GridFunction;
use crate::reaction::ReactionModel;

/// Nodal sup-norm below which a solution is classified as the zero solution.
pub const ZERO_SUP_NORM: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Relative gradient tolerance: converged when
    /// `sup|∇Φ| ≤ tol · max(1, |Φ|)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Number of randomized starts for multi-start solves.
    pub starts: usize,
    /// Points on the mountain-pass path, endpoints included.
    pub path_points: usize,
    /// Fraction of the accepted step the path maximum is moved by.
    pub damping: f64,
    pub seed: u64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    pub backtrack: f64,
    pub step_min: f64,
    pub step_max: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-11,
            max_iter: 50_000,
            starts: 10,
            path_points: 41,
            damping: 0.2,
            seed: 0x5eed,
            armijo: 1e-4,
            backtrack: 0.5,
            step_min: 1e-8,
            step_max: 1e2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Zero,
    Minimizer,
    Saddle,
    Pinned,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Zero => "zero",
            Classification::Minimizer => "minimizer",
            Classification::Saddle => "saddle",
            Classification::Pinned => "pinned",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: GridFunction,
    pub energy: f64,
    /// Sup-norm of the energy gradient at `solution`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Threshold the residual was checked against: the relative tolerance,
    /// raised to the rounding floor of the operator where that is larger.
    pub tolerance: f64,
    pub classification: Classification,
    /// Energy after every accepted descent step, starting with the initial value.
    pub energy_trace: Vec<f64>,
    pub warnings: Vec<String>,
}

impl SolveReport {
    pub fn is_nontrivial(&self) -> bool {
        self.classification != Classification::Zero
    }
}

/// Convergence threshold `tol · max(1, |Φ|)`, but never below the level at
/// which rounding of `u` alone moves the gradient.
pub(crate) fn residual_tolerance(kern: &KernelMatrix, p: f64, tol: f64, energy: f64, sup: f64) -> f64 {
    (tol * energy.abs().max(1.0)).max(kern.rounding_floor(sup, p))
}

/// `Φ(u) = seminorm_energy(u) - h Σ F(x_i, u_i)`.
pub fn total_energy(kern: &KernelMatrix, model: &ReactionModel, u: &GridFunction) -> Result<f64> {
    model.check_len(kern.n())?;
    let semi = kern.seminorm_energy(u, model.p())?;
    Ok(semi - kern.h() * model.primitive_sum(u.values()))
}

/// `∇Φ(u)_i = A(u)_i - h f(x_i, u_i)`.
pub fn total_gradient(
    kern: &KernelMatrix,
    model: &ReactionModel,
    u: &GridFunction,
) -> Result<GridFunction> {
    model.check_len(kern.n())?;
    let mut g = kern.apply_operator(u, model.p())?.into_values();
    let h = kern.h();
    for (i, (gi, &ui)) in g.iter_mut().zip(u.values()).enumerate() {
        *gi -= h * model.f(i, ui);
    }
    Ok(GridFunction::new(g))
}

/// Energy, gradient, and a magnitude scale for rounding estimates, in one
/// sweep over the kernel.
pub(crate) struct Evaluation {
    pub value: f64,
    pub grad: Vec<f64>,
    pub magnitude: f64,
}

pub(crate) fn evaluate(kern: &KernelMatrix, model: &ReactionModel, u: &[f64]) -> Result<Evaluation> {
    let (semi, mut grad) = kern.energy_and_operator(u, model.p());
    let h = kern.h();
    let mut prim = 0.0;
    let mut prim_abs = 0.0;
    for (i, (gi, &ui)) in grad.iter_mut().zip(u).enumerate() {
        let fi = model.primitive(i, ui);
        prim += fi;
        prim_abs += fi.abs();
        *gi -= h * model.f(i, ui);
    }
    let value = semi - h * prim;
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite { context: "energy evaluation" });
    }
    Ok(Evaluation { value, grad, magnitude: semi + h * prim_abs })
}

/// `Φ(u+d) - Φ(u)` summed from per-term increments. Near a critical point
/// the decrease of a descent step is far below the rounding error of two
/// separate energy evaluations; this form resolves it.
pub(crate) fn energy_increment(kern: &KernelMatrix, model: &ReactionModel, u: &[f64], d: &[f64]) -> f64 {
    let semi = kern.seminorm_increment(u, d, model.p());
    let prim: f64 = u.iter().zip(d).enumerate().map(|(i, (&t, &di))| model.primitive_increment(i, t, di)).sum();
    semi - kern.h() * prim
}

/// Plain-problem residual `sup|A(u) - h f_λ(u)|`.
pub(crate) fn plain_residual(kern: &KernelMatrix, model: &ReactionModel, u: &[f64]) -> f64 {
    let au = kern
        .apply_operator(&GridFunction::new(u.to_vec()), model.p())
        .map(|g| g.into_values())
        .unwrap_or_default();
    let h = kern.h();
    au.iter()
        .zip(u)
        .fold(0.0_f64, |m, (a, &t)| m.max((a - h * model.plain_f(t)).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::assemble_with_sigma;
    use crate::mesh::build_mesh;
    use crate::params::{validate_params, RawParams};
    use alloc::vec;

    #[test]
    fn zero_function_has_zero_energy_and_gradient() {
        let params = validate_params(RawParams { p: 2.5, s: 0.3, q: 2.0, r: 1.5, lambda: 3.0 }).unwrap();
        let mesh = build_mesh(-1.0, 1.0, 8).unwrap();
        let kern = assemble_with_sigma(&mesh, params.sigma()).unwrap();
        let model = ReactionModel::plain(&params);
        let zero = GridFunction::zeros(8);
        assert_eq!(total_energy(&kern, &model, &zero).unwrap(), 0.0);
        assert!(total_gradient(&kern, &model, &zero).unwrap().values().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn nonpositive_functions_only_see_the_seminorm() {
        let params = validate_params(RawParams { p: 2.5, s: 0.3, q: 2.0, r: 1.5, lambda: 3.0 }).unwrap();
        let mesh = build_mesh(-1.0, 1.0, 6).unwrap();
        let kern = assemble_with_sigma(&mesh, params.sigma()).unwrap();
        let model = ReactionModel::plain(&params);
        let u = GridFunction::new(vec![-0.1, -0.5, 0.0, -1.0, -0.2, -0.3]);
        let e = total_energy(&kern, &model, &u).unwrap();
        assert_eq!(e, kern.seminorm_energy(&u, params.p).unwrap());
        assert!(e > 0.0);
    }

    #[test]
    fn model_mesh_mismatch_is_reported() {
        let params = validate_params(RawParams { p: 2.5, s: 0.3, q: 2.0, r: 1.5, lambda: 3.0 }).unwrap();
        let mesh = build_mesh(-1.0, 1.0, 6).unwrap();
        let kern = assemble_with_sigma(&mesh, params.sigma()).unwrap();
        let model = ReactionModel::hat(&params, &GridFunction::zeros(5));
        let u = GridFunction::zeros(6);
        assert!(matches!(total_energy(&kern, &model, &u), Err(Error::MeshMismatch { .. })));
        assert!(total_gradient(&kern, &model, &u).is_err());
    }
}
