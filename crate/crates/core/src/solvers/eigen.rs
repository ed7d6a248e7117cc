//! Principal eigenpair of the discrete fractional p-Laplacian.

use alloc::vec::Vec;

use super::descent::armijo_descent;
use super::{Evaluation, SolveOptions};
use crate::error::{Error, Result};
use crate::kernel::KernelMatrix;
use crate::math::{abs_pow, powf, sup_norm};
use crate::mesh::GridFunction;
use crate::params::odd_power;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    /// `λ̂₁ = min [u]^p / (h Σ |u_i|^p)`.
    pub value: f64,
    /// Nonnegative minimizer with `h Σ |u_i|^p = 1`.
    pub eigenfunction: GridFunction,
    /// `sup|A(u) - λ̂₁ h u^{p-1}|` relative to `sup|λ̂₁ h u^{p-1}|`.
    pub residual: f64,
    pub iterations: usize,
}

fn normalize(u: &mut [f64], h: f64, p: f64) {
    for v in u.iter_mut() {
        *v = v.abs();
    }
    let mass: f64 = h * u.iter().map(|&v| abs_pow(v, p)).sum::<f64>();
    if mass > 0.0 {
        let c = powf(mass, -1.0 / p);
        u.iter_mut().for_each(|v| *v *= c);
    }
}

/// Relative eigen-residual `sup|A(u) - R h ψ(u)| / (R h sup ψ(u))`.
fn relative_residual(kern: &KernelMatrix, u: &[f64], p: f64) -> (f64, f64) {
    let h = kern.h();
    let (semi, au) = kern.energy_and_operator(u, p);
    let mass: f64 = h * u.iter().map(|&v| abs_pow(v, p)).sum::<f64>();
    let value = p * semi / mass;
    let mut top = 0.0_f64;
    let mut worst = 0.0_f64;
    for (&a, &ui) in au.iter().zip(u) {
        let psi = value * h * odd_power(ui, p);
        top = top.max(psi.abs());
        worst = worst.max((a - psi).abs());
    }
    (value, worst / top.max(1e-300))
}

/// Relative counterpart of the operator's rounding floor, never below `tol`.
fn eigen_tolerance(kern: &KernelMatrix, u: &[f64], value: f64, p: f64, tol: f64) -> f64 {
    let sup = sup_norm(u);
    let scale = value * kern.h() * abs_pow(sup, p - 1.0);
    tol.max(kern.rounding_floor(sup, p) / scale.max(1e-300))
}

/// Inverse iteration with frozen weights: writing `A(u) = L(u) u` with the
/// weighted graph Laplacian `L(u)`, each step solves `L(u) w = h ψ(u)` and
/// normalizes `w`. For `p < 2` this is far better conditioned than plain
/// descent, whose step is limited by the `|u_i - u_j|^{p-2}` curvature of
/// nearly tied nodes. Stops when the residual stalls.
fn lagged_inverse_iteration(kern: &KernelMatrix, p: f64, u: &mut [f64], tol: f64) -> usize {
    let n = kern.n();
    let h = kern.h();
    let (_, mut best) = relative_residual(kern, u, p);
    let mut cur = u.to_vec();
    let mut l = alloc::vec![0.0; n * n];
    let mut stalled = 0;
    for step in 0..200 {
        if best <= eigen_tolerance(kern, u, relative_residual(kern, u, p).0, p, tol) || stalled >= 5 {
            return step;
        }
        let floor = 1e-12 * sup_norm(&cur);
        // Exactly tied pairs contribute nothing to A(u); for p < 2 their
        // unbounded weight would only wreck the conditioning.
        let weight = |d: f64| {
            let d = d.abs();
            if d > floor {
                powf(d, p - 2.0)
            } else if p < 2.0 {
                0.0
            } else {
                powf(floor, p - 2.0)
            }
        };
        for i in 0..n {
            let mut diag = 2.0 * kern.tail()[i] * weight(cur[i]);
            for j in 0..n {
                if j != i {
                    let w = 2.0 * kern.k(i, j) * weight(cur[i] - cur[j]);
                    l[i * n + j] = -w;
                    diag += w;
                }
            }
            l[i * n + i] = diag;
        }
        let mut w: Vec<f64> = cur.iter().map(|&v| h * odd_power(v, p)).collect();
        if !cholesky_solve(&mut l, &mut w, n) {
            return step;
        }
        normalize(&mut w, h, p);
        let (_, res) = relative_residual(kern, &w, p);
        if !res.is_finite() {
            return step;
        }
        if res < 0.95 * best {
            stalled = 0;
        } else {
            stalled += 1;
        }
        if res < best {
            best = res;
            u.copy_from_slice(&w);
        }
        cur = w;
    }
    200
}

/// Solves `M x = b` in place for symmetric positive definite `M` (row-major,
/// overwritten by its Cholesky factor). Returns false if `M` is not SPD.
fn cholesky_solve(m: &mut [f64], b: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = m[j * n + j];
        for k in 0..j {
            d -= m[j * n + k] * m[j * n + k];
        }
        if !(d > 0.0) {
            return false;
        }
        let d = crate::math::sqrt(d);
        m[j * n + j] = d;
        for i in j + 1..n {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= m[i * n + k] * m[j * n + k];
            }
            m[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= m[i * n + k] * b[k];
        }
        b[i] = s / m[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= m[k * n + i] * b[k];
        }
        b[i] = s / m[i * n + i];
    }
    true
}

/// Minimizes the Rayleigh quotient by descent on the nonnegative part of the
/// p-sphere, warm-started by frozen-weight inverse iteration when `p < 2`. `|u|` never has
/// a larger quotient than `u`, so the iterates are kept nonnegative.
pub fn principal_eigenpair(kern: &KernelMatrix, p: f64, opts: &SolveOptions) -> Result<EigenResult> {
    let n = kern.n();
    let h = kern.h();
    // Positive start shaped like the boundary behaviour d^{1/2}.
    let mut u0: Vec<f64> = (0..n).map(|i| crate::math::sqrt((i.min(n - 1 - i) + 1) as f64)).collect();
    normalize(&mut u0, h, p);
    let tol = opts.tol * 1e-1;
    let warm_steps = if p < 2.0 { lagged_inverse_iteration(kern, p, &mut u0, tol) } else { 0 };

    let eigen_residual = |u: &[f64], value: f64, grad: &[f64]| {
        // grad = p (A(u) - R h ψ(u)) on the sphere.
        let scale = value * h * u.iter().fold(0.0_f64, |m, &v| m.max(abs_pow(v, p - 1.0)));
        (sup_norm(grad) / p / scale.max(1e-300), 0.0)
    };
    let out = armijo_descent(
        u0,
        |u| {
            let (semi, au) = kern.energy_and_operator(u, p);
            let mass: f64 = h * u.iter().map(|&v| abs_pow(v, p)).sum::<f64>();
            let value = p * semi / mass;
            let grad: Vec<f64> = au
                .iter()
                .zip(u)
                .map(|(&a, &ui)| p * (a - value * h * odd_power(ui, p)) / mass)
                .collect();
            if !value.is_finite() {
                return Err(Error::NonFinite { context: "Rayleigh quotient" });
            }
            Ok(Evaluation { value, grad, magnitude: value })
        },
        |u| normalize(u, h, p),
        |u, value, grad| {
            let (res, _) = eigen_residual(u, value, grad);
            (res, eigen_tolerance(kern, u, value, p, tol))
        },
        None,
        None,
        opts,
    )?;
    if !out.converged {
        return Err(Error::NotConverged {
            context: "principal eigenpair",
            iterations: warm_steps + out.iterations,
            residual: out.residual,
        });
    }
    Ok(EigenResult {
        value: out.value,
        eigenfunction: GridFunction::new(out.x),
        residual: out.residual,
        iterations: warm_steps + out.iterations,
    })
}
