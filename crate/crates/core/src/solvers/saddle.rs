//! Mountain-pass saddle search between `0` and a positive minimizer.
//!
//! The search runs on the energy whose reaction is truncated above `u_big`.
//! That energy has strict local minima at `0` and at `u_big`, and its
//! critical points lie between them. A discretized path joining the two
//! minima is deformed by moving its highest point downhill and
//! redistributing the points by arclength. Once the path maximum stops
//! improving, the saddle is located to full tolerance by maximizing along
//! the lowest curvature direction while descending in its orthogonal
//! complement. Curvatures come from finite differences of gradients.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{evaluate, plain_residual, residual_tolerance, Classification, SolveOptions, SolveReport, ZERO_SUP_NORM};
use crate::error::{Error, Result};
use crate::kernel::KernelMatrix;
use crate::math::{dot, norm2, sqrt, sup_norm};
use crate::mesh::GridFunction;
use crate::params::ProblemParams;
use crate::reaction::ReactionModel;

const ROUNDING: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct MountainPassPath {
    pub points: Vec<GridFunction>,
    pub energies: Vec<f64>,
    pub max_index: usize,
}

pub fn find_saddle(
    kern: &KernelMatrix,
    params: &ProblemParams,
    u_big: &GridFunction,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    mountain_pass(kern, params, u_big, opts).map(|(report, _)| report)
}

/// Runs the mountain-pass search and also returns the final path.
pub fn mountain_pass(
    kern: &KernelMatrix,
    params: &ProblemParams,
    u_big: &GridFunction,
    opts: &SolveOptions,
) -> Result<(SolveReport, MountainPassPath)> {
    u_big.check_len(kern.n())?;
    let model = ReactionModel::tilde(params, u_big);
    let plain = ReactionModel::plain(params);
    let ceiling = u_big.values();
    let energy = |x: &[f64]| evaluate(kern, &model, x).map(|e| e.value);

    let e_big = energy(ceiling)?;
    let big_scale = u_big.sup_norm();
    if big_scale <= ZERO_SUP_NORM {
        return Err(Error::SaddleNotFound("upper endpoint is the zero function".to_string()));
    }
    let delta = crate::reaction::sign_threshold_delta(params)?;
    check_endpoints(kern, &model, ceiling, e_big, delta)?;

    let reach = far_endpoint(ceiling, &energy)?;
    let pts = opts.path_points.max(5);
    let mut path: Vec<Vec<f64>> = (0..pts)
        .map(|k| {
            let t = reach * k as f64 / (pts - 1) as f64;
            ceiling.iter().map(|&c| t * c).collect()
        })
        .collect();
    let mut energies = path.iter().map(|x| energy(x)).collect::<Result<Vec<_>>>()?;

    let mut iterations = 0;
    let mut best_res = f64::INFINITY;
    let mut since_best = 0;
    let mut step = 0.0;
    let mpa_cap = opts.max_iter / 5;
    while iterations < mpa_cap {
        let k = argmax_interior(&energies);
        let barrier = energies[0].max(energies[pts - 1]);
        if energies[k] <= barrier + ROUNDING * barrier.abs().max(1.0) {
            return Err(Error::SaddleNotFound(format!(
                "path collapsed onto an endpoint after {iterations} iterations"
            )));
        }
        let here = evaluate(kern, &model, &path[k])?;
        let res = sup_norm(&here.grad);
        if res < 0.5 * best_res {
            best_res = res;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if res <= 1e-4 * here.value.abs().max(1.0) || since_best > 30 {
            break;
        }
        if step == 0.0 {
            step = 1e-2 * big_scale / res;
        }
        // Armijo step for the path maximum, then a damped move.
        let g2 = dot(&here.grad, &here.grad);
        let mut alpha = step;
        let mut moved = None;
        for _ in 0..60 {
            let trial: Vec<f64> = path[k].iter().zip(&here.grad).map(|(x, g)| x - alpha * g).collect();
            let e = energy(&trial)?;
            if e <= here.value - opts.armijo * alpha * g2 {
                moved = Some(alpha);
                break;
            }
            alpha *= opts.backtrack;
        }
        let Some(alpha) = moved else { break };
        step = 2.0 * alpha;
        let shift = opts.damping * alpha;
        for (x, g) in path[k].iter_mut().zip(&here.grad) {
            *x -= shift * g;
        }
        path = equispace(&path);
        energies = path.iter().map(|x| energy(x)).collect::<Result<Vec<_>>>()?;
        iterations += 1;
    }

    let k_final = argmax_interior(&energies);
    let k = k_final;
    let tangent: Vec<f64> = path[k + 1].iter().zip(&path[k - 1]).map(|(a, b)| a - b).collect();
    let (v, refine_iters, converged, residual) =
        refine(kern, &model, path[k].clone(), tangent, ceiling, opts)?;
    iterations += refine_iters;

    if !converged {
        return Err(Error::NotConverged { context: "saddle refinement", iterations, residual });
    }
    let sandwich_tol = 1e-8 * big_scale.max(1.0);
    let below = v.iter().fold(0.0_f64, |m, &x| m.max(-x));
    let above = v.iter().zip(ceiling).fold(0.0_f64, |m, (&x, &c)| m.max(x - c));
    if below > sandwich_tol || above > sandwich_tol {
        return Err(Error::SaddleNotFound(format!(
            "critical point left the order interval [0, u_big] (below {below:.3e}, above {above:.3e})"
        )));
    }
    let v_sup = sup_norm(&v);
    let gap = v.iter().zip(ceiling).fold(0.0_f64, |m, (&x, &c)| m.max((x - c).abs()));
    let distinct_tol = 1e-6 * big_scale.max(1.0);
    if v_sup <= distinct_tol || gap <= distinct_tol {
        return Err(Error::SaddleNotFound(format!(
            "critical point coincides with an endpoint (sup {v_sup:.3e}, distance to u_big {gap:.3e})"
        )));
    }

    let plain_eval = evaluate(kern, &plain, &v)?;
    let plain_res = plain_residual(kern, &plain, &v);
    let threshold = residual_tolerance(kern, params.p, opts.tol, plain_eval.value, v_sup);
    if plain_res > threshold {
        return Err(Error::ResidualCheck { residual: plain_res, tol: threshold });
    }
    let mut warnings = Vec::new();
    if plain_eval.value < energies[0].max(e_big) {
        warnings.push(format!(
            "saddle energy {:.6e} below the endpoint energies",
            plain_eval.value
        ));
    }

    let report = SolveReport {
        solution: GridFunction::new(v),
        energy: plain_eval.value,
        residual: plain_res,
        iterations,
        converged: true,
        tolerance: threshold,
        classification: Classification::Saddle,
        energy_trace: Vec::new(),
        warnings,
    };
    let path = MountainPassPath {
        points: path.into_iter().map(GridFunction::new).collect(),
        energies,
        max_index: k_final,
    };
    Ok((report, path))
}

/// Probes that `0` and `u_big` are strict local minima of the truncated energy.
/// Below `delta` the reaction is nonpositive, so `0` is probed inside that
/// sup-norm ball.
fn check_endpoints(
    kern: &KernelMatrix,
    model: &ReactionModel,
    ceiling: &[f64],
    e_big: f64,
    delta: f64,
) -> Result<()> {
    let energy = |x: &[f64]| evaluate(kern, model, x).map(|e| e.value);
    let sup = sup_norm(ceiling);
    for frac in [0.1, 0.5] {
        let t = (frac * delta / sup).min(frac);
        let probe: Vec<f64> = ceiling.iter().map(|&c| t * c).collect();
        if energy(&probe)? <= 0.0 {
            return Err(Error::SaddleNotFound(format!(
                "0 is not a local minimizer: energy at {t} * u_big is not positive"
            )));
        }
    }
    let noise = ROUNDING * e_big.abs().max(1.0) * 10.0;
    for t in [1e-3, -1e-3] {
        let probe: Vec<f64> = ceiling.iter().map(|&c| (1.0 + t) * c).collect();
        if energy(&probe)? < e_big - noise {
            return Err(Error::SaddleNotFound("u_big is not a local minimizer of the truncated energy".to_string()));
        }
    }
    Ok(())
}

/// Scale `t` such that `t * u_big` lies beyond the energy ridge along the
/// ray with energy well below `0`. For large λ the ridge sits very close to
/// `0`, and a path ending there resolves it with the same number of points.
fn far_endpoint(ceiling: &[f64], energy: &impl Fn(&[f64]) -> Result<f64>) -> Result<f64> {
    const SAMPLES: usize = 240;
    let mut ray = Vec::with_capacity(SAMPLES);
    for j in 0..SAMPLES {
        let t = crate::math::powf(10.0, -4.0 * (1.0 - j as f64 / (SAMPLES - 1) as f64));
        let x: Vec<f64> = ceiling.iter().map(|&c| t * c).collect();
        ray.push((t, energy(&x)?));
    }
    let (peak_at, peak) = ray.iter().enumerate().fold((0, f64::NEG_INFINITY), |best, (j, &(_, e))| {
        if e > best.1 { (j, e) } else { best }
    });
    Ok(ray[peak_at..].iter().find(|&&(_, e)| e <= -peak).map_or(1.0, |&(t, _)| t))
}

fn argmax_interior(energies: &[f64]) -> usize {
    let mut k = 1;
    for i in 1..energies.len() - 1 {
        if energies[i] > energies[k] {
            k = i;
        }
    }
    k
}

/// Redistributes the interior points uniformly in arclength; endpoints stay put.
fn equispace(path: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = path.len();
    let mut cum = vec![0.0; m];
    for i in 1..m {
        let d: f64 = path[i].iter().zip(&path[i - 1]).map(|(a, b)| (a - b) * (a - b)).sum();
        cum[i] = cum[i - 1] + sqrt(d);
    }
    let total = cum[m - 1];
    if total <= 0.0 {
        return path.to_vec();
    }
    let mut out = Vec::with_capacity(m);
    out.push(path[0].clone());
    let mut seg = 1;
    for j in 1..m - 1 {
        let target = total * j as f64 / (m - 1) as f64;
        while seg < m - 1 && cum[seg] < target {
            seg += 1;
        }
        let len = cum[seg] - cum[seg - 1];
        let w = if len > 0.0 { (target - cum[seg - 1]) / len } else { 0.0 };
        out.push(path[seg - 1].iter().zip(&path[seg]).map(|(a, b)| a + w * (b - a)).collect());
    }
    out.push(path[m - 1].clone());
    out
}

/// Local saddle refinement. Returns `(v, iterations, converged, residual)`.
fn refine(
    kern: &KernelMatrix,
    model: &ReactionModel,
    mut v: Vec<f64>,
    tangent: Vec<f64>,
    ceiling: &[f64],
    opts: &SolveOptions,
) -> Result<(Vec<f64>, usize, bool, f64)> {
    let grad = |x: &[f64]| evaluate(kern, model, x);
    let mut tau = tangent;
    normalize(&mut tau);
    let mut search: Option<Vec<f64>> = None;
    let mut step = 0.0;
    let mut here = grad(&v)?;

    for it in 0..opts.max_iter {
        let res = sup_norm(&here.grad);
        if res <= residual_tolerance(kern, model.p(), opts.tol, here.value, sup_norm(&v)) {
            return Ok((v, it, true, res));
        }

        // Finite-difference Hessian-vector products, with a perturbation small
        // enough not to reach the kinks of the reaction at 0 and at the ceiling.
        let floor = v
            .iter()
            .zip(ceiling)
            .map(|(&x, &c)| x.abs().min((c - x).abs()))
            .filter(|&d| d > 0.0)
            .fold(f64::INFINITY, f64::min);
        let eps = (1e-3 * floor).min(1e-4 * sup_norm(&v)).max(1e-9 * sup_norm(&v));
        let hess = |x: &[f64], d: &[f64]| -> Result<Vec<f64>> {
            let plus: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + eps * b).collect();
            let minus: Vec<f64> = x.iter().zip(d).map(|(a, b)| a - eps * b).collect();
            let gp = grad(&plus)?.grad;
            let gm = grad(&minus)?.grad;
            Ok(gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * eps)).collect())
        };

        // One block step (x, residual, previous direction) toward the
        // lowest-curvature mode.
        let (new_tau, curvature, new_search) = min_mode_step(&v, &tau, search.as_deref(), &hess)?;
        tau = new_tau;
        search = new_search;

        // Maximize along tau with a Newton step on the directional derivative.
        if curvature < 0.0 {
            let slope = dot(&here.grad, &tau);
            let t = -slope / curvature;
            let limit = 0.05 * norm2(&v);
            let t = t.clamp(-limit, limit);
            let trial: Vec<f64> = v.iter().zip(&tau).map(|(a, b)| a + t * b).collect();
            let cand = grad(&trial)?;
            if dot(&cand.grad, &tau).abs() < slope.abs() {
                v = trial;
                here = cand;
            }
        }

        // Descent in the complement of tau.
        let along = dot(&here.grad, &tau);
        let dir: Vec<f64> = here.grad.iter().zip(&tau).map(|(g, t)| -(g - along * t)).collect();
        let d2 = dot(&dir, &dir);
        if d2 == 0.0 {
            continue;
        }
        if step == 0.0 {
            step = 1e-3 * norm2(&v) / sqrt(d2);
        }
        let res_here = sup_norm(&here.grad);
        let mut alpha = step.clamp(opts.step_min, opts.step_max);
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = v.iter().zip(&dir).map(|(a, b)| a + alpha * b).collect();
            let cand = grad(&trial)?;
            if cand.value <= here.value - opts.armijo * alpha * d2 {
                accepted = Some((trial, cand));
                break;
            }
            let noise = ROUNDING * here.magnitude.max(cand.magnitude);
            if (cand.value - here.value).abs() <= noise && sup_norm(&cand.grad) < res_here {
                accepted = Some((trial, cand));
                break;
            }
            alpha *= opts.backtrack;
        }
        let Some((trial, cand)) = accepted else {
            return Ok((v, it, false, res_here));
        };
        // BB step restricted to the complement.
        let mut ss = 0.0;
        let mut sy = 0.0;
        let along_new = dot(&cand.grad, &tau);
        for i in 0..v.len() {
            let s = trial[i] - v[i];
            let y = (cand.grad[i] - along_new * tau[i]) - (here.grad[i] - along * tau[i]);
            ss += s * s;
            sy += s * y;
        }
        step = if sy > 0.0 { ss / sy } else { 2.0 * alpha };
        v = trial;
        here = cand;
    }
    let res = sup_norm(&here.grad);
    let converged = res <= residual_tolerance(kern, model.p(), opts.tol, here.value, sup_norm(&v));
    Ok((v, opts.max_iter, converged, res))
}

fn normalize(x: &mut [f64]) {
    let n = norm2(x);
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

/// One locally optimal block step for the smallest eigenpair of the Hessian.
/// Returns the new unit direction, its Rayleigh quotient and the search
/// direction to carry over.
fn min_mode_step(
    _v: &[f64],
    tau: &[f64],
    search: Option<&[f64]>,
    hess: &dyn Fn(&[f64], &[f64]) -> Result<Vec<f64>>,
) -> Result<(Vec<f64>, f64, Option<Vec<f64>>)> {
    let h_tau = hess(_v, tau)?;
    let rho = dot(tau, &h_tau);
    let resid: Vec<f64> = h_tau.iter().zip(tau).map(|(a, b)| a - rho * b).collect();
    let mut basis: Vec<Vec<f64>> = vec![tau.to_vec()];
    for cand in [Some(resid.as_slice()), search].into_iter().flatten() {
        let mut w = cand.to_vec();
        for b in &basis {
            let c = dot(&w, b);
            w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let nw = norm2(&w);
        if nw > 1e-10 * norm2(cand).max(1e-300) {
            w.iter_mut().for_each(|x| *x /= nw);
            basis.push(w);
        }
    }
    if basis.len() == 1 {
        return Ok((tau.to_vec(), rho, None));
    }
    let mut images = vec![h_tau];
    for b in &basis[1..] {
        images.push(hess(_v, b)?);
    }
    let m = basis.len();
    let mut small = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            small[i * m + j] = 0.5 * (dot(&basis[i], &images[j]) + dot(&basis[j], &images[i]));
        }
    }
    let (value, y) = smallest_eigenpair(&small, m);
    let n = tau.len();
    let mut next = vec![0.0; n];
    let mut dir = vec![0.0; n];
    for (k, b) in basis.iter().enumerate() {
        for i in 0..n {
            next[i] += y[k] * b[i];
            if k > 0 {
                dir[i] += y[k] * b[i];
            }
        }
    }
    // Keep orientation stable between iterations.
    if dot(&next, tau) < 0.0 {
        next.iter_mut().for_each(|x| *x = -*x);
        dir.iter_mut().for_each(|x| *x = -*x);
    }
    normalize(&mut next);
    Ok((next, value, Some(dir)))
}

/// Smallest eigenpair of a small symmetric matrix by cyclic Jacobi sweeps.
fn smallest_eigenpair(a: &[f64], m: usize) -> (f64, Vec<f64>) {
    let mut a = a.to_vec();
    let mut vecs = vec![0.0; m * m];
    for i in 0..m {
        vecs[i * m + i] = 1.0;
    }
    for _ in 0..50 {
        let mut off = 0.0;
        for i in 0..m {
            for j in i + 1..m {
                off += a[i * m + j] * a[i * m + j];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[p * m + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * m + q] - a[p * m + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = c * akp - s * akq;
                    a[k * m + q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = c * apk - s * aqk;
                    a[q * m + k] = s * apk + c * aqk;
                }
                for k in 0..m {
                    let vkp = vecs[k * m + p];
                    let vkq = vecs[k * m + q];
                    vecs[k * m + p] = c * vkp - s * vkq;
                    vecs[k * m + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..m {
        if a[i * m + i] < a[best * m + best] {
            best = i;
        }
    }
    (a[best * m + best], (0..m).map(|k| vecs[k * m + best]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_finds_smallest_eigenpair() {
        // Eigenvalues 1, 2, 4 with eigenvector (1, 1, 0)/√2 for 1.
        let a = [1.5, -0.5, 0.0, -0.5, 1.5, 0.0, 0.0, 0.0, 4.0];
        let (value, y) = smallest_eigenpair(&a, 3);
        assert!((value - 1.0).abs() < 1e-12);
        assert!((y[0] - y[1]).abs() < 1e-12);
        assert!(y[2].abs() < 1e-12);
    }

    #[test]
    fn equispacing_a_straight_path_is_uniform() {
        let path: Vec<Vec<f64>> = [0.0, 0.1, 0.5, 0.9, 1.0].iter().map(|&t| vec![t, 2.0 * t]).collect();
        let out = equispace(&path);
        for (j, p) in out.iter().enumerate() {
            let t = j as f64 / 4.0;
            assert!((p[0] - t).abs() < 1e-12 && (p[1] - 2.0 * t).abs() < 1e-12);
        }
    }
}
