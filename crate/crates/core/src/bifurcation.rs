//! Per-λ solves, top-down continuation of the branch of biggest solutions,
//! and the threshold estimate `λ*`.
//!
//! `λ*` is estimated operationally as the smallest λ at which the solver
//! pipeline finds a nontrivial solution, once by bisection on a cold
//! multi-start predicate and once by warm-started continuation down to the
//! fold. The two estimates are reported side by side.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{check_ordering, hopf_ratio, OrderingMargin};
use crate::error::{Error, Result};
use crate::kernel::{assemble_kernel, KernelMatrix};
use crate::math::powf;
use crate::mesh::{GridFunction, Mesh1D};
use crate::params::ProblemParams;
use crate::reaction::{nonexistence_bound, sign_threshold_delta, ReactionModel};
use crate::solvers::{
    find_saddle, minimize, principal_eigenpair, solve_above, Classification, EigenResult, SolveOptions,
    SolveReport,
};

/// Largest relative disagreement tolerated between the bisection and the
/// continuation estimates of `λ*` before a warning is recorded.
pub const ESTIMATE_AGREEMENT: f64 = 0.10;

/// Everything that is fixed across λ: mesh, kernel, base parameters, solver
/// options and the principal eigenvalue.
#[derive(Debug, Clone)]
pub struct Pipeline {
    mesh: Mesh1D,
    kern: KernelMatrix,
    params: ProblemParams,
    opts: SolveOptions,
    eigen: EigenResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchDiagnostics {
    pub sup_u: f64,
    pub sup_v: Option<f64>,
    pub energy_u: f64,
    pub energy_v: Option<f64>,
    pub hopf_u: Option<f64>,
    pub hopf_v: Option<f64>,
    /// Margin of `u_big` over `v_saddle`.
    pub margin: Option<OrderingMargin>,
    /// `λ^{-1/(q-r)}`.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub lambda: f64,
    /// The biggest solution found; classified `Zero` when none exists.
    pub u_big: SolveReport,
    pub v_saddle: Option<SolveReport>,
    pub diagnostics: BranchDiagnostics,
    pub warnings: Vec<String>,
}

impl BranchPoint {
    pub fn has_solution(&self) -> bool {
        self.u_big.is_nontrivial()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaStarEstimate {
    /// Smallest λ at which a nontrivial solution was found.
    pub estimate: f64,
    /// Largest λ at which none was found.
    pub lower: f64,
    pub width: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Continuation {
    /// Points in the order they were computed (descending λ).
    pub points: Vec<BranchPoint>,
    /// `[collapsed, surviving]` bracket around the fold, refined to the
    /// requested width.
    pub fold: Option<LambdaStarEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationDiagram {
    /// Ascending in λ.
    pub points: Vec<BranchPoint>,
    pub lambda_star: LambdaStarEstimate,
    pub fold: Option<LambdaStarEstimate>,
    /// `|bisection - fold| / bisection`.
    pub disagreement: Option<f64>,
    /// `min{1, 0.999 λ̂₁}`: no positive solution exists below it.
    pub analytic_lower_bound: f64,
    pub principal_eigenvalue: f64,
    pub method_record: String,
    pub warnings: Vec<String>,
}

/// Outcome of a batch of randomized starts at one λ.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiStart {
    pub reports: Vec<SolveReport>,
}

impl MultiStart {
    pub fn nontrivial(&self) -> impl Iterator<Item = &SolveReport> {
        self.reports.iter().filter(|r| r.converged && r.is_nontrivial())
    }

    pub fn all_zero(&self) -> bool {
        self.reports.iter().all(|r| !r.is_nontrivial())
    }
}

impl Pipeline {
    pub fn new(mesh: Mesh1D, params: ProblemParams, opts: SolveOptions) -> Result<Self> {
        let kern = assemble_kernel(&mesh, &params)?;
        Self::with_kernel(mesh, kern, params, opts)
    }

    pub fn with_kernel(mesh: Mesh1D, kern: KernelMatrix, params: ProblemParams, opts: SolveOptions) -> Result<Self> {
        let eigen = principal_eigenpair(&kern, params.p, &opts)?;
        Ok(Pipeline { mesh, kern, params, opts, eigen })
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn kernel(&self) -> &KernelMatrix {
        &self.kern
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn options(&self) -> &SolveOptions {
        &self.opts
    }

    pub fn eigen(&self) -> &EigenResult {
        &self.eigen
    }

    /// `min{1, 0.999 λ̂₁}`.
    pub fn analytic_lower_bound(&self) -> f64 {
        nonexistence_bound(0.999 * self.eigen.value)
    }

    /// Starting guesses for the multi-start solves at `lambda`.
    ///
    /// Each start is a randomly perturbed `d^s` profile whose height exceeds
    /// the size `(1 + λ/λ̂₁)^{1/(p-q)}` at which the `λ u^{q-1}` term can
    /// balance the operator, so descent approaches the biggest solution from
    /// above. The draws depend on the seed and the start index only.
    pub fn starts(&self, lambda: f64) -> Vec<GridFunction> {
        let p = &self.params;
        let height = powf(1.0 + lambda / self.eigen.value, 1.0 / (p.p - p.q));
        let profile = self.mesh.dist_pow(p.s);
        let top = profile.iter().fold(0.0_f64, |m, &v| m.max(v));
        let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed);
        (0..self.opts.starts.max(1))
            .map(|_| {
                let amp = height * rng.gen_range(1.5..4.0) / top;
                GridFunction::new(profile.iter().map(|&d| amp * d * (1.0 + 0.3 * rng.gen_range(-1.0..1.0))).collect())
            })
            .collect()
    }

    /// Runs every start at `lambda`.
    pub fn multistart(&self, lambda: f64) -> Result<MultiStart> {
        let model = ReactionModel::plain(&self.params.with_lambda(lambda));
        let starts = self.starts(lambda);
        let reports = run_all(&starts, |u0| minimize(&self.kern, &model, u0, &self.opts))?;
        Ok(MultiStart { reports })
    }

    /// Whether any start converges to a nontrivial solution. Stops at the
    /// first success.
    pub fn finds_solution(&self, lambda: f64) -> Result<bool> {
        let model = ReactionModel::plain(&self.params.with_lambda(lambda));
        let starts = self.starts(lambda);
        run_any(&starts, |u0| {
            minimize(&self.kern, &model, u0, &self.opts).map(|r| r.converged && r.is_nontrivial())
        })
    }

    /// Biggest solution and mountain-pass solution at `lambda`.
    pub fn solve_at_lambda(&self, lambda: f64, warm_start: Option<&GridFunction>) -> Result<BranchPoint> {
        if lambda <= 0.0 {
            return Err(Error::ZeroLambda);
        }
        let params = self.params.with_lambda(lambda);
        let mut warnings = Vec::new();
        let u_big = match warm_start {
            Some(u0) => {
                let model = ReactionModel::plain(&params);
                let r = minimize(&self.kern, &model, u0, &self.opts)?;
                if r.converged {
                    r
                } else {
                    warnings.push(format!("warm start did not converge (residual {:.3e})", r.residual));
                    zero_report(&self.kern, r)
                }
            }
            None => {
                let ms = self.multistart(lambda)?;
                let found: Vec<GridFunction> = ms.nontrivial().map(|r| r.solution.clone()).collect();
                if found.is_empty() {
                    let first = ms.reports.into_iter().next().ok_or(Error::EmptyInput("multi-start"))?;
                    zero_report(&self.kern, first)
                } else {
                    self.merge(&params, &found, &ms, &mut warnings)?
                }
            }
        };

        let v_saddle = if u_big.is_nontrivial() {
            match find_saddle(&self.kern, &params, &u_big.solution, &self.opts) {
                Ok(v) => Some(v),
                Err(e) => {
                    warnings.push(format!("{e}"));
                    None
                }
            }
        } else {
            None
        };
        let diagnostics = self.branch_diagnostics(&params, &u_big, v_saddle.as_ref())?;
        Ok(BranchPoint { lambda, u_big, v_saddle, diagnostics, warnings })
    }

    /// Combines distinct nontrivial multi-start results into the biggest one.
    fn merge(
        &self,
        params: &ProblemParams,
        found: &[GridFunction],
        ms: &MultiStart,
        warnings: &mut Vec<String>,
    ) -> Result<SolveReport> {
        let first = &found[0];
        let distinct = found.iter().any(|u| u.sub(first).sup_norm() > 1e-6 * first.sup_norm().max(1.0));
        let best = ms
            .nontrivial()
            .max_by(|a, b| a.solution.sup_norm().total_cmp(&b.solution.sup_norm()))
            .cloned()
            .ok_or(Error::EmptyInput("multi-start"))?;
        if !distinct {
            return Ok(best);
        }
        warnings.push("multi-start found distinct solutions; taking the biggest".to_string());
        let mut merged = biggest_solution(&self.kern, params, found, &self.opts)?;
        merged.classification = Classification::Minimizer;
        Ok(merged)
    }

    fn branch_diagnostics(
        &self,
        params: &ProblemParams,
        u: &SolveReport,
        v: Option<&SolveReport>,
    ) -> Result<BranchDiagnostics> {
        let s = params.s;
        let nontrivial = u.is_nontrivial();
        Ok(BranchDiagnostics {
            sup_u: u.solution.sup_norm(),
            sup_v: v.map(|v| v.solution.sup_norm()),
            energy_u: u.energy,
            energy_v: v.map(|v| v.energy),
            hopf_u: nontrivial.then(|| hopf_ratio(&self.mesh, &u.solution, s)),
            hopf_v: v.map(|v| hopf_ratio(&self.mesh, &v.solution, s)),
            margin: v.map(|v| check_ordering(&self.mesh, &u.solution, &v.solution, s)),
            delta: sign_threshold_delta(params)?,
        })
    }

    /// Warm-started continuation along `grid`, which must be strictly
    /// decreasing. The first point is solved by multi-start. When the branch
    /// collapses, the fold is bracketed between the last surviving and the
    /// first collapsed λ and refined by warm-started bisection to `width`;
    /// the remaining grid points are checked by multi-start.
    pub fn continue_branch(&self, grid: &[f64], width: f64, with_saddles: bool) -> Result<Continuation> {
        if grid.is_empty() {
            return Err(Error::EmptyInput("continuation grid"));
        }
        if grid.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Bracket("continuation grid must be strictly decreasing".to_string()));
        }
        let mut points: Vec<BranchPoint> = Vec::new();
        let mut fold = None;
        let mut warm: Option<GridFunction> = None;
        for &lambda in grid {
            let point = if fold.is_none() {
                self.branch_point(lambda, warm.as_ref(), with_saddles)?
            } else {
                self.branch_point(lambda, None, with_saddles)?
            };
            if fold.is_none() {
                if point.has_solution() {
                    warm = Some(point.u_big.solution.clone());
                } else if let (Some(last), Some(prev)) = (warm.as_ref(), points.last()) {
                    fold = Some(self.refine_fold(lambda, prev.lambda, last, width)?);
                }
            }
            points.push(point);
        }
        Ok(Continuation { points, fold })
    }

    fn branch_point(&self, lambda: f64, warm: Option<&GridFunction>, with_saddles: bool) -> Result<BranchPoint> {
        if with_saddles {
            return self.solve_at_lambda(lambda, warm);
        }
        let params = self.params.with_lambda(lambda);
        let mut warnings = Vec::new();
        let u_big = match warm {
            Some(u0) => {
                let r = minimize(&self.kern, &ReactionModel::plain(&params), u0, &self.opts)?;
                if r.converged { r } else { zero_report(&self.kern, r) }
            }
            None => {
                let ms = self.multistart(lambda)?;
                let found: Vec<GridFunction> = ms.nontrivial().map(|r| r.solution.clone()).collect();
                if found.is_empty() {
                    zero_report(&self.kern, ms.reports.into_iter().next().ok_or(Error::EmptyInput("multi-start"))?)
                } else {
                    self.merge(&params, &found, &ms, &mut warnings)?
                }
            }
        };
        let diagnostics = self.branch_diagnostics(&params, &u_big, None)?;
        Ok(BranchPoint { lambda, u_big, v_saddle: None, diagnostics, warnings })
    }

    fn refine_fold(&self, collapsed: f64, surviving: f64, warm: &GridFunction, width: f64) -> Result<LambdaStarEstimate> {
        let (mut lo, mut hi) = (collapsed, surviving);
        let mut warm = warm.clone();
        let mut evaluations = 0;
        while hi - lo > width {
            let mid = 0.5 * (lo + hi);
            let model = ReactionModel::plain(&self.params.with_lambda(mid));
            let r = minimize(&self.kern, &model, &warm, &self.opts)?;
            evaluations += 1;
            if r.converged && r.is_nontrivial() {
                hi = mid;
                warm = r.solution;
            } else {
                lo = mid;
            }
        }
        Ok(LambdaStarEstimate { estimate: hi, lower: lo, width: hi - lo, evaluations })
    }

    /// Bisection on "multi-start finds a nontrivial solution".
    ///
    /// The bracket is verified first: `lo` is halved while solutions are
    /// found there (never below the analytic bound, where none can exist)
    /// and `hi` doubled while none are found.
    pub fn estimate_lambda_star(&self, bracket: (f64, f64), width: f64) -> Result<LambdaStarEstimate> {
        let (mut lo, mut hi) = bracket;
        if !(lo > 0.0 && hi > lo && width > 0.0) {
            return Err(Error::Bracket(format!("need 0 < lo < hi and width > 0, got [{lo}, {hi}], width {width}")));
        }
        let floor = self.analytic_lower_bound();
        let mut evaluations = 0;
        let mut expansions = 0;
        while self.finds_solution(lo)? {
            evaluations += 1;
            expansions += 1;
            if lo < floor || expansions > 60 {
                return Err(Error::Bracket(format!(
                    "solutions found at lambda = {lo}, below the nonexistence bound min(1, 0.999*{}) = {floor}",
                    self.eigen.value
                )));
            }
            hi = lo;
            lo *= 0.5;
        }
        evaluations += 1;
        expansions = 0;
        while !self.finds_solution(hi)? {
            evaluations += 1;
            expansions += 1;
            if expansions > 30 {
                return Err(Error::Bracket(format!(
                    "no solution found up to lambda = {hi} (principal eigenvalue {})",
                    self.eigen.value
                )));
            }
            lo = hi;
            hi *= 2.0;
        }
        evaluations += 1;
        while hi - lo > width {
            let mid = 0.5 * (lo + hi);
            evaluations += 1;
            if self.finds_solution(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(LambdaStarEstimate { estimate: hi, lower: lo, width: hi - lo, evaluations })
    }

    /// Continuation over `steps` evenly spaced λ from `lambda_max` down to
    /// `lambda_min`, bisection inside `bracket`, and the comparison of the
    /// two threshold estimates.
    pub fn bifurcation_diagram(
        &self,
        lambda_min: f64,
        lambda_max: f64,
        steps: usize,
        bracket: (f64, f64),
        width: f64,
    ) -> Result<BifurcationDiagram> {
        if !(lambda_min > 0.0 && lambda_max > lambda_min && steps >= 2) {
            return Err(Error::Bracket(format!(
                "need 0 < lambda_min < lambda_max and steps >= 2, got [{lambda_min}, {lambda_max}], {steps}"
            )));
        }
        let grid: Vec<f64> = (0..steps)
            .map(|k| lambda_max - (lambda_max - lambda_min) * k as f64 / (steps - 1) as f64)
            .collect();
        let cont = self.continue_branch(&grid, width, true)?;
        let lambda_star = self.estimate_lambda_star(bracket, width)?;
        let mut warnings = Vec::new();
        let disagreement = cont.fold.map(|f| (f.estimate - lambda_star.estimate).abs() / lambda_star.estimate);
        match disagreement {
            Some(d) if d > ESTIMATE_AGREEMENT => warnings.push(format!(
                "bisection ({:.6}) and continuation fold ({:.6}) disagree by {:.1}%",
                lambda_star.estimate,
                cont.fold.map(|f| f.estimate).unwrap_or(f64::NAN),
                100.0 * d
            )),
            None => warnings.push("continuation grid did not cross the fold".to_string()),
            _ => {}
        }
        let mut points = cont.points;
        points.reverse();
        for p in &points {
            warnings.extend(p.warnings.iter().map(|w| format!("lambda = {}: {w}", p.lambda)));
        }
        Ok(BifurcationDiagram {
            points,
            lambda_star,
            fold: cont.fold,
            disagreement,
            analytic_lower_bound: self.analytic_lower_bound(),
            principal_eigenvalue: self.eigen.value,
            method_record: format!(
                "continuation: {steps} points from {lambda_max} down to {lambda_min}, warm-started, fold refined \
                 by warm bisection to width {width}; bisection: {} multi-starts per lambda, seed {}, width {width}",
                self.opts.starts, self.opts.seed
            ),
            warnings,
        })
    }
}

/// Turns a collapsed or stalled run into a zero-solution report.
fn zero_report(kern: &KernelMatrix, mut r: SolveReport) -> SolveReport {
    r.solution = GridFunction::zeros(kern.n());
    r.energy = 0.0;
    r.residual = 0.0;
    r.classification = Classification::Zero;
    r
}

/// Solves above the nodewise maximum of `known`, which is a subsolution when
/// every member is a solution.
pub fn biggest_solution(
    kern: &KernelMatrix,
    params: &ProblemParams,
    known: &[GridFunction],
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let (first, rest) = known.split_first().ok_or(Error::EmptyInput("known solutions"))?;
    let top = rest.iter().fold(first.clone(), |acc, u| acc.max(u));
    solve_above(kern, params, &top, opts)
}

#[cfg(feature = "parallel")]
fn run_all<T: Send>(
    starts: &[GridFunction],
    f: impl Fn(&GridFunction) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    use rayon::prelude::*;
    starts.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_all<T>(starts: &[GridFunction], f: impl Fn(&GridFunction) -> Result<T>) -> Result<Vec<T>> {
    starts.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
fn run_any(starts: &[GridFunction], f: impl Fn(&GridFunction) -> Result<bool> + Sync + Send) -> Result<bool> {
    use rayon::prelude::*;
    // One start per worker at a time, scanned in order: the same answer (and
    // the same first error) as the serial loop, with the same early exit.
    for chunk in starts.chunks(rayon::current_num_threads().max(1)) {
        let results: Vec<Result<bool>> = chunk.par_iter().map(&f).collect();
        for r in results {
            if r? {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

#[cfg(not(feature = "parallel"))]
fn run_any(starts: &[GridFunction], f: impl Fn(&GridFunction) -> Result<bool>) -> Result<bool> {
    for u0 in starts {
        if f(u0)? {
            return Ok(true);
        }
    }
    Ok(false)
}
