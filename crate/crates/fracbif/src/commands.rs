//! The four subcommands. Each writes its files into `out` and returns the
//! process exit code.

use std::fmt;
use std::path::Path;

use fracbif_core::bifurcation::{BranchPoint, LambdaStarEstimate, Pipeline};
use fracbif_core::diagnostics::{diagnose, hopf_ratio, DiagnosticReport};
use fracbif_core::kernel::assemble_kernel;
use fracbif_core::solvers::{principal_eigenpair, SolveReport};
use fracbif_core::{Error, GridFunction, Mesh1D};
use serde_json::{json, Value};

use crate::config::{ConfigError, RunConfig};
use crate::output::{self, num, opt, Csv};
use crate::verify;
use crate::{EXIT_CONFIG, EXIT_NO_SOLUTION, EXIT_OK, EXIT_SOLVER, EXIT_VERIFY};

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure { code: EXIT_CONFIG, message: e.to_string() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: EXIT_SOLVER, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: EXIT_CONFIG, message: format!("cannot write output: {e}") }
    }
}

type Outcome = Result<i32, Failure>;

fn required<T: Copy>(value: Option<T>, key: &str) -> Result<T, ConfigError> {
    value.ok_or_else(|| ConfigError::Missing(key.to_string()))
}

fn estimate_json(e: &LambdaStarEstimate) -> Value {
    json!({ "estimate": e.estimate, "lower": e.lower, "width": e.width, "evaluations": e.evaluations })
}

fn report_json(r: &SolveReport, diag: Option<&DiagnosticReport>) -> Value {
    let mut v = json!({
        "classification": r.classification.as_str(),
        "sup_norm": r.solution.sup_norm(),
        "energy": r.energy,
        "residual": r.residual,
        "tolerance": r.tolerance,
        "iterations": r.iterations,
        "converged": r.converged,
        "warnings": r.warnings,
    });
    if let Some(d) = diag {
        v["hopf_ratio"] = json!(d.hopf_ratio);
        v["cs_norm"] = json!(d.cs_norm);
        v["weighted_holder"] = json!(d.weighted_holder);
        v["bound_checks"] = d
            .bound_checks
            .iter()
            .map(|c| json!({ "name": c.name, "passed": c.passed, "worst": c.worst }))
            .collect();
    }
    v
}

fn weighted(mesh: &Mesh1D, u: &GridFunction, s: f64) -> Vec<f64> {
    u.values().iter().zip(mesh.dist_pow(s)).map(|(v, d)| v / d).collect()
}

pub fn eigen(cfg: &RunConfig, out: &Path) -> Outcome {
    let mesh = cfg.mesh()?;
    let params = cfg.params()?;
    let kern = assemble_kernel(&mesh, &params)?;
    let eig = principal_eigenpair(&kern, params.p, &cfg.solver)?;
    let phi = &eig.eigenfunction;

    let mut csv = Csv::new("eigen", cfg, &["x", "phi", "phi/d^s"]);
    for ((x, v), w) in mesh.nodes().iter().zip(phi.values()).zip(weighted(&mesh, phi, params.s)) {
        csv.row(&[num(*x), num(*v), num(w)]);
    }
    output::write(out, "eigenfunction.csv", &csv.into_string())?;
    let body = json!({
        "principal_eigenvalue": eig.value,
        "residual": eig.residual,
        "iterations": eig.iterations,
        "sup_norm": phi.sup_norm(),
        "hopf_ratio": hopf_ratio(&mesh, phi, params.s),
    });
    output::write_json(out, "eigen.json", &output::record("eigen", cfg, body))?;
    println!("principal eigenvalue {}", num(eig.value));
    println!("relative residual {:e} after {} iterations", eig.residual, eig.iterations);
    Ok(EXIT_OK)
}

pub fn solve(cfg: &RunConfig, out: &Path) -> Outcome {
    let lambda = required(cfg.lambda, "lambda")?;
    if !(lambda > 0.0) {
        return Err(ConfigError::Invalid(format!("solve needs lambda > 0, got {lambda}")).into());
    }
    let mesh = cfg.mesh()?;
    let params = cfg.params()?;
    let s = params.s;
    let pipeline = Pipeline::new(mesh.clone(), params, cfg.solver.clone())?;
    let point = pipeline.solve_at_lambda(lambda, None)?;
    let u = &point.u_big;
    let v = point.v_saddle.as_ref();

    let (outcome, code) = if !point.has_solution() {
        if u.converged {
            ("no nontrivial solution", EXIT_NO_SOLUTION)
        } else {
            ("solver did not converge", EXIT_SOLVER)
        }
    } else if v.is_some() {
        ("two ordered solutions", EXIT_OK)
    } else {
        ("biggest solution only: mountain-pass search failed", EXIT_SOLVER)
    };

    let du = point.has_solution().then(|| diagnose(&mesh, pipeline.kernel(), &params.with_lambda(lambda), &u.solution, v.map(|v| &v.solution)));
    let du = du.transpose()?;
    let dv = v.map(|v| diagnose(&mesh, pipeline.kernel(), &params.with_lambda(lambda), &v.solution, None)).transpose()?;

    let mut csv = Csv::new("solution", cfg, &["x", "u", "v", "u/d^s", "v/d^s"]);
    let uw = weighted(&mesh, &u.solution, s);
    let vw = v.map(|v| weighted(&mesh, &v.solution, s));
    for (i, x) in mesh.nodes().iter().enumerate() {
        csv.row(&[
            num(*x),
            num(u.solution.values()[i]),
            opt(v.map(|v| v.solution.values()[i])),
            num(uw[i]),
            opt(vw.as_ref().map(|w| w[i])),
        ]);
    }
    output::write(out, "solution.csv", &csv.into_string())?;

    let d = &point.diagnostics;
    let body = json!({
        "lambda": lambda,
        "outcome": outcome,
        "principal_eigenvalue": pipeline.eigen().value,
        "analytic_lower_bound": pipeline.analytic_lower_bound(),
        "delta": d.delta,
        "u_big": report_json(u, du.as_ref()),
        "v_saddle": v.map(|v| report_json(v, dv.as_ref())),
        "margin": d.margin.map(|m| json!({ "min": m.margin, "weighted": m.weighted })),
        "warnings": point.warnings,
    });
    output::write_json(out, "solve.json", &output::record("solve", cfg, body))?;

    println!("lambda {}: {outcome}", num(lambda));
    if point.has_solution() {
        println!("  sup u_big    {}  energy {}", num(d.sup_u), num(d.energy_u));
    }
    if let (Some(sv), Some(ev)) = (d.sup_v, d.energy_v) {
        println!("  sup v_saddle {}  energy {}", num(sv), num(ev));
    }
    for w in &point.warnings {
        eprintln!("warning: {w}");
    }
    Ok(code)
}

fn branch_row(p: &BranchPoint) -> Vec<String> {
    let d = &p.diagnostics;
    let converged = p.u_big.converged && p.v_saddle.as_ref().map_or(true, |v| v.converged);
    vec![
        num(p.lambda),
        num(d.sup_u),
        opt(d.sup_v),
        num(d.energy_u),
        opt(d.energy_v),
        opt(d.hopf_u),
        opt(d.hopf_v),
        opt(d.margin.map(|m| m.margin)),
        p.u_big.iterations.to_string(),
        p.v_saddle.as_ref().map(|v| v.iterations.to_string()).unwrap_or_default(),
        converged.to_string(),
    ]
}

pub const BRANCH_COLUMNS: [&str; 11] = [
    "lambda",
    "sup_u",
    "sup_v",
    "energy_u",
    "energy_v",
    "hopf_u",
    "hopf_v",
    "margin",
    "iterations_u",
    "iterations_v",
    "converged",
];

pub fn bifurcation(cfg: &RunConfig, out: &Path) -> Outcome {
    let lambda_min = required(cfg.lambda_min, "lambda_min")?;
    let lambda_max = required(cfg.lambda_max, "lambda_max")?;
    let steps = required(cfg.steps, "steps")?;
    let bracket = required(cfg.bracket, "bracket")?;
    let width = required(cfg.width, "width")?;
    let mesh = cfg.mesh()?;
    let params = cfg.params()?;
    let pipeline = Pipeline::new(mesh, params, cfg.solver.clone())?;
    let diagram = pipeline.bifurcation_diagram(lambda_min, lambda_max, steps, bracket, width)?;

    let mut csv = Csv::new("branch", cfg, &BRANCH_COLUMNS);
    for p in &diagram.points {
        csv.row(&branch_row(p));
    }
    output::write(out, "branch.csv", &csv.into_string())?;
    output::write(out, "bifurcation.svg", &output::branch_svg(&diagram, cfg))?;
    let body = json!({
        "lambda_star": estimate_json(&diagram.lambda_star),
        "fold": diagram.fold.as_ref().map(estimate_json),
        "disagreement": diagram.disagreement,
        "analytic_lower_bound": diagram.analytic_lower_bound,
        "principal_eigenvalue": diagram.principal_eigenvalue,
        "method": diagram.method_record,
        "points": diagram.points.iter().map(|p| json!({
            "lambda": p.lambda,
            "u_big": report_json(&p.u_big, None),
            "v_saddle": p.v_saddle.as_ref().map(|v| report_json(v, None)),
            "delta": p.diagnostics.delta,
        })).collect::<Vec<_>>(),
        "warnings": diagram.warnings,
    });
    output::write_json(out, "bifurcation.json", &output::record("bifurcation", cfg, body))?;

    let star = &diagram.lambda_star;
    println!("principal eigenvalue {}", num(diagram.principal_eigenvalue));
    println!("lambda* in [{}, {}] by bisection", num(star.lower), num(star.estimate));
    if let Some(f) = &diagram.fold {
        println!("continuation fold in [{}, {}]", num(f.lower), num(f.estimate));
    }
    println!("{} branch points written to {}", diagram.points.len(), out.join("branch.csv").display());
    for w in &diagram.warnings {
        eprintln!("warning: {w}");
    }
    Ok(EXIT_OK)
}

pub fn verify(cfg: &RunConfig, out: &Path, corrupt: bool) -> Outcome {
    let checks = verify::run_suite(cfg, corrupt)?;
    for c in &checks {
        println!("{:<18} {}  {}", c.name, if c.passed { "ok  " } else { "FAIL" }, c.detail);
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    let body = json!({
        "passed": failed.is_empty(),
        "failed": failed,
        "checks": checks.iter().map(verify::Check::to_json).collect::<Vec<_>>(),
    });
    output::write_json(out, "verify.json", &output::record("verify", cfg, body))?;
    if failed.is_empty() {
        Ok(EXIT_OK)
    } else {
        eprintln!("verification failed: {}", failed.join(", "));
        Ok(EXIT_VERIFY)
    }
}
