//! The property suite behind `fracbif verify`.

use fracbif_core::bifurcation::Pipeline;
use fracbif_core::diagnostics::verify_operator_properties;
use fracbif_core::kernel::{assemble_kernel, assemble_with_sigma, KernelMatrix};
use fracbif_core::mesh::build_mesh;
use fracbif_core::reaction::{nonexistence_bound, sign_threshold_delta};
use fracbif_core::solvers::{principal_eigenpair, total_energy, total_gradient};
use fracbif_core::{GridFunction, ReactionModel};
use serde_json::{json, Value};

use crate::config::{ConfigError, RunConfig};

/// Nodes of the coarse mesh used for the finite-difference gradient checks.
const GRADIENT_NODES: usize = 24;
const GRADIENT_POINTS: usize = 20;
const GRADIENT_TOL: f64 = 1e-6;
const DELTA_SCAN: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Check { name, passed, detail }
    }

    pub fn to_json(&self) -> Value {
        json!({ "name": self.name, "passed": self.passed, "detail": self.detail })
    }
}

/// Negates every nearest-neighbour weight. The result is still symmetric,
/// so energy and operator stay consistent, but the operator is no longer
/// monotone.
pub fn corrupt_kernel(kern: &KernelMatrix) -> KernelMatrix {
    let n = kern.n();
    let mut k = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let w = kern.k(i, j);
            k.push(if i.abs_diff(j) == 1 { -w } else { w });
        }
    }
    KernelMatrix::from_parts(k, kern.tail().to_vec(), kern.sigma(), kern.h()).expect("same shape")
}

/// Runs every check on the configured problem. Solver failures inside a
/// check count as failures of that check.
pub fn run_suite(cfg: &RunConfig, corrupt: bool) -> Result<Vec<Check>, ConfigError> {
    let params = cfg.params()?;
    let mesh = cfg.mesh()?;
    let p = params.p;
    let seed = cfg.seed();
    let mut kern = assemble_kernel(&mesh, &params).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    if corrupt {
        kern = corrupt_kernel(&kern);
    }
    let mut checks = Vec::new();

    match verify_operator_properties(&kern, p, cfg.verify_trials, seed) {
        Ok(props) => checks.extend(props.into_iter().map(|c| {
            Check::new(c.name, c.passed, format!("{} trials, worst slip {:e}", c.trials, c.worst))
        })),
        Err(e) => checks.push(Check::new("mon-i", false, e.to_string())),
    }
    checks.push(kernel_weights(&kern));
    checks.push(gradient_check(cfg, seed));
    checks.push(two_cell_oracle());

    let pipeline = Pipeline::with_kernel(mesh.clone(), kern.clone(), params, cfg.solver.clone());
    match &pipeline {
        Ok(pl) => {
            checks.push(rayleigh_check(pl));
            checks.push(homogeneity_check(pl));
        }
        Err(e) => {
            checks.push(Check::new("eigen-rayleigh", false, e.to_string()));
            checks.push(Check::new("eigen-homogeneity", false, "no principal eigenpair".into()));
        }
    }
    checks.push(delta_scan(cfg));
    checks.push(match &pipeline {
        Ok(pl) => nonexistence_scan(pl),
        Err(_) => Check::new("nonexistence", false, "no principal eigenvalue".into()),
    });
    Ok(checks)
}

fn kernel_weights(kern: &KernelMatrix) -> Check {
    let n = kern.n();
    let mut asym = 0.0_f64;
    let mut min = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                asym = asym.max((kern.k(i, j) - kern.k(j, i)).abs());
                min = min.min(kern.k(i, j));
            }
        }
        min = min.min(kern.tail()[i]);
    }
    Check::new(
        "kernel-weights",
        asym == 0.0 && min > 0.0,
        format!("max asymmetry {asym:e}, smallest weight {min:e}"),
    )
}

fn gradient_check(cfg: &RunConfig, seed: u64) -> Check {
    use rand::{Rng, SeedableRng};
    let run = || -> fracbif_core::Result<f64> {
        let params = cfg.params().map_err(|e| fracbif_core::Error::InvalidParams(e.to_string()))?;
        let params = params.with_lambda(cfg.lambda.unwrap_or(2.0));
        let mesh = build_mesh(cfg.domain.0, cfg.domain.1, cfg.n.min(GRADIENT_NODES))?;
        let kern = assemble_kernel(&mesh, &params)?;
        let model = ReactionModel::plain(&params);
        let n = mesh.n();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
        let mut worst = 0.0_f64;
        for _ in 0..GRADIENT_POINTS {
            let u = GridFunction::new((0..n).map(|_| rng.gen_range(0.1..2.0)).collect());
            let g = total_gradient(&kern, &model, &u)?;
            let scale = g.sup_norm().max(1e-300);
            let eps = 1e-6;
            for i in 0..n {
                let mut up = u.clone();
                let mut dn = u.clone();
                up.values_mut()[i] += eps;
                dn.values_mut()[i] -= eps;
                let fd = (total_energy(&kern, &model, &up)? - total_energy(&kern, &model, &dn)?) / (2.0 * eps);
                worst = worst.max((fd - g.values()[i]).abs() / scale);
            }
        }
        Ok(worst)
    };
    match run() {
        Ok(w) => Check::new(
            "gradient",
            w < GRADIENT_TOL,
            format!("{GRADIENT_POINTS} points, relative sup error {w:e} (limit {GRADIENT_TOL:e})"),
        ),
        Err(e) => Check::new("gradient", false, e.to_string()),
    }
}

/// Two cells of width 1 on (-1, 1) with σ = 1/2: the pair weight is
/// `8 - 4√2` and each tail weight is `4 + 4(√2 - 1)`.
fn two_cell_oracle() -> Check {
    let run = || -> fracbif_core::Result<(f64, f64)> {
        let mesh = build_mesh(-1.0, 1.0, 2)?;
        let kern = assemble_with_sigma(&mesh, 0.5)?;
        let pair = kern.k(0, 1) - (8.0 - 4.0 * 2f64.sqrt());
        let tail = kern.tail()[0] - 4.0 * 2f64.sqrt();
        Ok((pair, tail))
    };
    match run() {
        Ok((pair, tail)) => Check::new(
            "kernel-two-cell",
            pair.abs() < 1e-12 && tail.abs() < 1e-12,
            format!("pair error {pair:e}, tail error {tail:e}"),
        ),
        Err(e) => Check::new("kernel-two-cell", false, e.to_string()),
    }
}

fn rayleigh_check(pl: &Pipeline) -> Check {
    let eig = pl.eigen();
    let kern = pl.kernel();
    let p = pl.params().p;
    let phi = &eig.eigenfunction;
    let run = || -> fracbif_core::Result<f64> {
        let semi = p * kern.seminorm_energy(phi, p)?;
        let mass: f64 = kern.h() * phi.values().iter().map(|v| v.abs().powf(p)).sum::<f64>();
        Ok(semi / mass)
    };
    match run() {
        Ok(q) => {
            let rel = (q - eig.value).abs() / eig.value;
            let positive = phi.values().iter().all(|&v| v >= 0.0);
            Check::new(
                "eigen-rayleigh",
                rel < 1e-10 && positive,
                format!("value {:.12e}, quotient error {rel:e}, nonnegative {positive}", eig.value),
            )
        }
        Err(e) => Check::new("eigen-rayleigh", false, e.to_string()),
    }
}

fn homogeneity_check(pl: &Pipeline) -> Check {
    let p = pl.params().p;
    let scaled = pl.kernel().scaled(3.0);
    match principal_eigenpair(&scaled, p, pl.options()) {
        Ok(e) => {
            let rel = (e.value - 3.0 * pl.eigen().value).abs() / (3.0 * pl.eigen().value);
            Check::new("eigen-homogeneity", rel < 1e-8, format!("kernel x3 moves the eigenvalue by x(1 + {rel:e})"))
        }
        Err(e) => Check::new("eigen-homogeneity", false, e.to_string()),
    }
}

fn delta_scan(cfg: &RunConfig) -> Check {
    let Ok(params) = cfg.params() else {
        return Check::new("delta-threshold", false, "invalid parameters".into());
    };
    let mut lambdas = vec![0.25, 1.0, 4.0, 16.0, 64.0];
    lambdas.extend(cfg.lambda.filter(|&l| l > 0.0));
    let mut failures = Vec::new();
    for &lambda in &lambdas {
        let params = params.with_lambda(lambda);
        let model = ReactionModel::plain(&params);
        let delta = match sign_threshold_delta(&params) {
            Ok(d) => d,
            Err(e) => {
                failures.push(format!("lambda {lambda}: {e}"));
                continue;
            }
        };
        let scale = lambda * delta.powf(params.q - 1.0) + delta.powf(params.r - 1.0);
        let worst = (0..=DELTA_SCAN)
            .map(|k| model.plain_f(delta * k as f64 / DELTA_SCAN as f64))
            .fold(f64::NEG_INFINITY, f64::max);
        if worst > 1e-14 * scale {
            failures.push(format!("lambda {lambda}: f = {worst:e} > 0 inside [0, {delta}]"));
        }
        if !(model.plain_f(1.01 * delta) > 0.0) {
            failures.push(format!("lambda {lambda}: f not positive just above delta = {delta}"));
        }
    }
    let detail = if failures.is_empty() {
        format!("{} values of lambda, {} points each", lambdas.len(), DELTA_SCAN + 1)
    } else {
        failures.join("; ")
    };
    Check::new("delta-threshold", failures.is_empty(), detail)
}

fn nonexistence_scan(pl: &Pipeline) -> Check {
    let bound = nonexistence_bound(0.999 * pl.eigen().value);
    let mut failures = Vec::new();
    for frac in [0.25, 0.5, 0.99] {
        let lambda = frac * bound;
        match pl.multistart(lambda) {
            Ok(ms) => {
                let bad = ms
                    .reports
                    .iter()
                    .filter(|r| !r.converged || r.solution.sup_norm() >= fracbif_core::solvers::ZERO_SUP_NORM)
                    .count();
                if bad > 0 {
                    failures.push(format!("lambda {lambda:.6}: {bad} of {} starts not at zero", ms.reports.len()));
                }
            }
            Err(e) => failures.push(format!("lambda {lambda:.6}: {e}")),
        }
    }
    let detail = if failures.is_empty() {
        format!("all starts collapse below the bound {bound:.6}")
    } else {
        failures.join("; ")
    };
    Check::new("nonexistence", failures.is_empty(), detail)
}
