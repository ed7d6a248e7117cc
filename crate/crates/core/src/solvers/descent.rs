//! Armijo backtracking gradient descent with Barzilai–Borwein trial steps.

use alloc::format;
use alloc::vec::Vec;

use super::{
    energy_increment, evaluate, plain_residual, residual_tolerance, Classification, Evaluation, SolveOptions, SolveReport, ZERO_SUP_NORM,
};
use crate::error::{Error, Result};
use crate::kernel::KernelMatrix;
use crate::math::{dot, sup_norm};
use crate::mesh::GridFunction;
use crate::params::ProblemParams;
use crate::reaction::ReactionModel;

/// Relative size of the floating-point noise in an energy evaluation. Below
/// this level the Armijo test can no longer resolve a decrease.
const ROUNDING: f64 = 1e-13;

/// Width, in units of `ROUNDING`, of the band around the Armijo bound where a
/// difference of two evaluations is not trusted.
const UNCERTAIN: f64 = 10.0;

pub(crate) struct DescentOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
}

/// Generic projected descent.
///
/// `project` maps a trial point onto the feasible set and must not increase
/// the objective; `residual` turns `(x, value, grad)` into `(residual,
/// threshold)`. Each accepted step satisfies
/// `φ(x⁺) ≤ φ(x) + c ∇φ(x)·(x⁺ - x)`.
///
/// With `increment`, the change `φ(x + d) - φ(x)` is computed directly and
/// the trace accumulates these changes, so it is non-increasing. Without it
/// the change is the difference of two evaluations, and once the predicted
/// decrease drops below their rounding noise a step is also accepted when its
/// value is within noise of the current one and it strictly lowers the
/// residual.
///
/// When `try_zero` holds at the current point, the zero vector is tested
/// against the same Armijo condition before the gradient step.
pub(crate) fn armijo_descent(
    x0: Vec<f64>,
    mut eval: impl FnMut(&[f64]) -> Result<Evaluation>,
    project: impl Fn(&mut [f64]),
    residual: impl Fn(&[f64], f64, &[f64]) -> (f64, f64),
    increment: Option<&dyn Fn(&[f64], &[f64]) -> f64>,
    try_zero: Option<&dyn Fn(&[f64]) -> bool>,
    opts: &SolveOptions,
) -> Result<DescentOutcome> {
    let mut x = x0;
    project(&mut x);
    let Evaluation { value: mut f, grad: mut g, magnitude: mut mag } = eval(&x)?;
    let mut trace = alloc::vec![f];
    let mut step = opts.step_max.min(1.0 / sup_norm(&g).max(1e-300)).max(opts.step_min);
    let mut trial = alloc::vec![0.0; x.len()];
    let mut step_vec = alloc::vec![0.0; x.len()];
    let mut level = f;

    for it in 0..opts.max_iter {
        let (res, threshold) = residual(&x, f, &g);
        if res <= threshold {
            return Ok(DescentOutcome { x, value: f, residual: res, iterations: it, converged: true, trace });
        }

        let mut accept = |trial: &[f64], step_vec: &mut [f64], slope: f64| -> Result<Option<(Evaluation, f64)>> {
            let cand = eval(trial)?;
            let bound = opts.armijo * slope;
            let noise = ROUNDING * mag.max(cand.magnitude);
            let mut change = cand.value - f;
            if let Some(increment) = increment {
                if (change - bound).abs() <= UNCERTAIN * noise {
                    for ((d, t), xi) in step_vec.iter_mut().zip(trial).zip(&x) {
                        *d = t - xi;
                    }
                    change = increment(&x, step_vec);
                }
                return Ok((change <= bound).then_some((cand, change)));
            }
            if change <= bound || (change.abs() <= noise && residual(trial, cand.value, &cand.grad).0 < res) {
                return Ok(Some((cand, change)));
            }
            Ok(None)
        };

        let mut alpha = step.clamp(opts.step_min, opts.step_max);
        let accepted = 'search: {
            if try_zero.is_some_and(|z| z(&x)) {
                trial.fill(0.0);
                let slope = -dot(&g, &x);
                if slope < 0.0 {
                    if let Some(hit) = accept(&trial, &mut step_vec, slope)? {
                        break 'search Some(hit);
                    }
                }
            }
            loop {
                for ((t, &xi), &gi) in trial.iter_mut().zip(&x).zip(&g) {
                    *t = xi - alpha * gi;
                }
                project(&mut trial);
                let slope: f64 = trial.iter().zip(&x).zip(&g).map(|((t, xi), gi)| gi * (t - xi)).sum();
                if let Some(hit) = accept(&trial, &mut step_vec, slope)? {
                    break Some(hit);
                }
                alpha *= opts.backtrack;
                if alpha < 1e-30 || slope == 0.0 {
                    break None;
                }
            }
        };
        let Some((cand, change)) = accepted else {
            return Ok(DescentOutcome { x, value: f, residual: res, iterations: it, converged: false, trace });
        };

        // Barzilai–Borwein (long) step for the next trial.
        let mut ss = 0.0;
        let mut sy = 0.0;
        for i in 0..x.len() {
            let si = trial[i] - x[i];
            let yi = cand.grad[i] - g[i];
            ss += si * si;
            sy += si * yi;
        }
        step = if sy > 0.0 { ss / sy } else { 2.0 * alpha };

        core::mem::swap(&mut x, &mut trial);
        f = cand.value;
        g = cand.grad;
        mag = cand.magnitude;
        level += change;
        trace.push(level);
    }
    let (res, threshold) = residual(&x, f, &g);
    Ok(DescentOutcome {
        x,
        value: f,
        residual: res,
        iterations: opts.max_iter,
        converged: res <= threshold,
        trace,
    })
}

/// Gradient residual with the components that push against the constraint
/// `u ≥ 0` removed (only active for projected solves).
fn projected_residual(x: &[f64], g: &[f64], projected: bool) -> f64 {
    x.iter()
        .zip(g)
        .fold(0.0_f64, |m, (&xi, &gi)| if projected && xi <= 0.0 && gi > 0.0 { m } else { m.max(gi.abs()) })
}

/// Minimizes `Φ` from `u0` by Armijo descent.
///
/// For the plain reaction `F` vanishes on `t ≤ 0` and `[u⁺] ≤ [u]`, so
/// truncating the negative part never raises the energy; the iteration then
/// runs projected onto `u ≥ 0`. Hitting the iteration cap is reported
/// through `converged = false`, not as an error.
pub fn minimize(
    kern: &KernelMatrix,
    model: &ReactionModel,
    u0: &GridFunction,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    u0.check_len(kern.n())?;
    model.check_len(kern.n())?;
    if !u0.is_finite() {
        return Err(Error::NonFinite { context: "initial guess" });
    }
    let projected = model.is_plain();
    let tol = opts.tol;
    // f ≤ 0 on [0, δ], so the zero function is a descent target from there.
    let zero_basin = if model.lambda() > 0.0 {
        crate::math::powf(model.lambda(), -1.0 / (model.q - model.r))
    } else {
        f64::INFINITY
    };
    let near_zero = |x: &[f64]| {
        let sup = sup_norm(x);
        sup > 0.0 && sup <= zero_basin
    };
    let out = armijo_descent(
        u0.values().to_vec(),
        |x| evaluate(kern, model, x),
        |x| {
            if projected {
                x.iter_mut().for_each(|v| *v = v.max(0.0));
            }
        },
        |x, f, g| (projected_residual(x, g, projected), residual_tolerance(kern, model.p(), tol, f, sup_norm(x))),
        Some(&|x: &[f64], d: &[f64]| energy_increment(kern, model, x, d)),
        projected.then_some(&near_zero as &dyn Fn(&[f64]) -> bool),
        opts,
    )?;
    let solution = GridFunction::new(out.x);
    let tolerance = residual_tolerance(kern, model.p(), tol, out.value, solution.sup_norm());
    let classification = if solution.sup_norm() <= ZERO_SUP_NORM {
        Classification::Zero
    } else {
        match model.variant() {
            crate::reaction::Variant::Hat(_) => Classification::Pinned,
            _ => Classification::Minimizer,
        }
    };
    Ok(SolveReport {
        solution,
        energy: out.value,
        residual: out.residual,
        iterations: out.iterations,
        converged: out.converged,
        tolerance,
        classification,
        energy_trace: out.trace,
        warnings: Vec::new(),
    })
}

/// Finds a solution above the subsolution `subsol` by minimizing the energy
/// with the reaction frozen below `subsol`.
///
/// The returned report carries the plain energy and the plain residual of the
/// result, which coincide with the truncated ones wherever the result stays
/// above `subsol`.
pub fn solve_above(
    kern: &KernelMatrix,
    params: &ProblemParams,
    subsol: &GridFunction,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    subsol.check_len(kern.n())?;
    let plain = ReactionModel::plain(params);
    let hat = ReactionModel::hat(params, subsol);
    let mut warnings = Vec::new();

    // Subsolution test: A(u) - h f(u) ≤ 0 nodewise, up to the O(h)
    // consistency error of the discretization.
    let g = evaluate(kern, &plain, subsol.values())?.grad;
    let excess = g.iter().fold(0.0_f64, |m, &v| m.max(v));
    let scale = g.iter().fold(0.0_f64, |m, &v| m.max(v.abs())).max(1e-300);
    if excess > opts.tol * scale.max(1.0) {
        warnings.push(format!(
            "subsolution inequality violated by {excess:.3e} (gradient scale {scale:.3e})"
        ));
    }

    let mut report = minimize(kern, &hat, subsol, opts)?;
    // The truncated energy differs from the plain one by frozen constants,
    // so its relative tolerance can be looser than the plain one; tighten
    // and continue once if the plain check would miss.
    if report.converged {
        let plain_energy = evaluate(kern, &plain, report.solution.values())?.value;
        let ratio = plain_energy.abs().max(1.0) / report.energy.abs().max(1.0);
        if ratio < 1.0 {
            let tight = SolveOptions { tol: opts.tol * ratio, ..opts.clone() };
            let more = minimize(kern, &hat, &report.solution, &tight)?;
            report = SolveReport { iterations: report.iterations + more.iterations, ..more };
        }
    }
    if !report.converged {
        return Err(Error::NotConverged {
            context: "pinned minimization",
            iterations: report.iterations,
            residual: report.residual,
        });
    }
    let u = report.solution.values();
    let pin_tol = 1e-8 * subsol.sup_norm().max(1.0);
    if let Some((node, deficit)) = u
        .iter()
        .zip(subsol.values())
        .map(|(a, b)| b - a)
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(&y.1))
    {
        if deficit > pin_tol {
            return Err(Error::PinViolation { node, deficit });
        }
    }
    report.residual = plain_residual(kern, &plain, u);
    report.energy = evaluate(kern, &plain, u)?.value;
    let threshold = residual_tolerance(kern, params.p, opts.tol, report.energy, report.solution.sup_norm());
    report.tolerance = threshold;
    if report.residual > threshold {
        warnings.push(format!(
            "plain residual {:.3e} above tolerance {threshold:.3e} after removing the truncation",
            report.residual
        ));
    }
    report.warnings = warnings;
    Ok(report)
}
