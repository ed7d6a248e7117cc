use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fracbif_core::bifurcation::Pipeline;
use fracbif_core::kernel::assemble_kernel;
use fracbif_core::mesh::build_mesh;
use fracbif_core::params::validate_params;
use fracbif_core::solvers::SolveOptions;
use fracbif_core::RawParams;
use nalgebra::{DMatrix, SymmetricEigen};
use serde_json::Value;
use tempfile::TempDir;

const SMALL: &str = "\
p = 3
s = 0.3
q = 2.5
r = 1.5
domain.a = -1
domain.b = 1
mesh.n = 40
lambda_min = 5
lambda_max = 14
steps = 4
bracket = 2, 12
width = 0.1
seed = 3
";

fn setup(text: &str) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, text).unwrap();
    (dir, cfg)
}

fn fracbif(cfg: &Path, out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracbif"))
        .args(args)
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .env_remove("FRACBIF_THREADS")
        .output()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Data rows of a CSV written by the tool, split into fields.
fn rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn missing_key_exits_one_and_names_it() {
    let (dir, cfg) = setup(&SMALL.replace("q = 2.5\n", ""));
    let o = fracbif(&cfg, dir.path(), &["eigen"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`q`"), "{}", stderr(&o));

    let o = fracbif(&cfg, dir.path(), &["solve"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solve_without_lambda_names_it() {
    let (dir, cfg) = setup(SMALL);
    let o = fracbif(&cfg, dir.path(), &["solve"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`lambda`"));
}

#[test]
fn usage_errors_are_config_errors() {
    let o = Command::new(env!("CARGO_BIN_EXE_fracbif")).args(["eigen"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--config"));
    let o = Command::new(env!("CARGO_BIN_EXE_fracbif")).args(["frobnicate"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = Command::new(env!("CARGO_BIN_EXE_fracbif")).args(["--help"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(!String::from_utf8_lossy(&o.stdout).contains("corrupt"));
}

#[test]
fn eigen_matches_dense_oracle_at_p_two() {
    let text = SMALL.replace("p = 3", "p = 2").replace("q = 2.5", "q = 1.6").replace("r = 1.5", "r = 1.3");
    let (dir, cfg) = setup(&text);
    let o = fracbif(&cfg, dir.path(), &["eigen"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let value = json(&dir.path().join("eigen.json"))["result"]["principal_eigenvalue"].as_f64().unwrap();

    let params = validate_params(RawParams { p: 2.0, s: 0.3, q: 1.6, r: 1.3, lambda: 0.0 }).unwrap();
    let kern = assemble_kernel(&build_mesh(-1.0, 1.0, 40).unwrap(), &params).unwrap();
    let m = DMatrix::from_row_slice(40, 40, &kern.quadratic_form_matrix());
    let oracle = SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min) / kern.h();
    assert!((value - oracle).abs() < 1e-8 * oracle, "{value} vs {oracle}");

    let phi = rows(&dir.path().join("eigenfunction.csv"));
    assert_eq!(phi.len(), 40);
    assert!(phi.iter().all(|r| r[1].parse::<f64>().unwrap() > 0.0));
}

#[test]
fn every_output_carries_hash_and_seed() {
    let (dir, cfg) = setup(SMALL);
    assert_eq!(fracbif(&cfg, dir.path(), &["bifurcation"]).status.code(), Some(0));
    let record = json(&dir.path().join("bifurcation.json"));
    let hash = record["config_sha256"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 64);
    assert_eq!(record["seed"], 3);
    let csv = std::fs::read_to_string(dir.path().join("branch.csv")).unwrap();
    assert!(csv.contains(&format!("# config_sha256 = {hash}")));
    assert!(csv.contains("# seed = 3"));
    let svg = std::fs::read_to_string(dir.path().join("bifurcation.svg")).unwrap();
    assert!(svg.contains(&hash) && svg.contains("seed = 3"));

    // A flag overrides the file and shows up in the hash.
    let other = dir.path().join("other");
    assert_eq!(fracbif(&cfg, &other, &["eigen", "--seed", "4"]).status.code(), Some(0));
    let rec = json(&other.join("eigen.json"));
    assert_eq!(rec["seed"], 4);
    assert_ne!(rec["config_sha256"].as_str().unwrap(), hash);
}

#[test]
fn solve_below_threshold_reports_no_solution() {
    let (dir, cfg) = setup(SMALL);
    let o = fracbif(&cfg, dir.path(), &["solve", "--lambda", "0.5"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let rec = json(&dir.path().join("solve.json"));
    assert_eq!(rec["result"]["outcome"], "no nontrivial solution");
    assert!(rows(&dir.path().join("solution.csv")).iter().all(|r| r[1].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn solve_above_threshold_gives_two_ordered_solutions_reproducibly() {
    let params = validate_params(RawParams { p: 3.0, s: 0.3, q: 2.5, r: 1.5, lambda: 1.0 }).unwrap();
    let opts = SolveOptions { seed: 3, ..SolveOptions::default() };
    let pl = Pipeline::new(build_mesh(-1.0, 1.0, 40).unwrap(), params, opts).unwrap();
    let lambda = 2.0 * pl.estimate_lambda_star((2.0, 12.0), 0.1).unwrap().estimate;

    let (dir, cfg) = setup(SMALL);
    let arg = lambda.to_string();
    let first = dir.path().join("a");
    let second = dir.path().join("b");
    for out in [&first, &second] {
        let o = fracbif(&cfg, out, &["solve", "--lambda", &arg]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let sol = rows(&first.join("solution.csv"));
    assert_eq!(sol.len(), 40);
    for r in &sol {
        let u: f64 = r[1].parse().unwrap();
        let v: f64 = r[2].parse().unwrap();
        assert!(0.0 < v && v < u, "{r:?}");
    }
    assert_eq!(json(&first.join("solve.json"))["result"]["outcome"], "two ordered solutions");
    for name in ["solution.csv", "solve.json"] {
        assert_eq!(std::fs::read(first.join(name)).unwrap(), std::fs::read(second.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn bifurcation_outputs_and_width_halving() {
    let (dir, cfg) = setup(SMALL);
    let wide = dir.path().join("wide");
    let narrow = dir.path().join("narrow");
    assert_eq!(fracbif(&cfg, &wide, &["bifurcation"]).status.code(), Some(0));
    let o = fracbif(&cfg, &narrow, &["bifurcation", "--width", "0.05"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let w1 = json(&wide.join("bifurcation.json"))["result"]["lambda_star"]["width"].as_f64().unwrap();
    let w2 = json(&narrow.join("bifurcation.json"))["result"]["lambda_star"]["width"].as_f64().unwrap();
    assert!(w1 <= 0.1 && w2 <= 0.05);
    assert_eq!(w2, 0.5 * w1);

    let branch = rows(&wide.join("branch.csv"));
    assert_eq!(branch.len(), 4);
    assert!(branch.iter().all(|r| r.len() == 11));
    let svg = std::fs::read_to_string(wide.join("bifurcation.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="branch-point""#).count(), branch.len());
    for r in &branch {
        assert!(svg.contains(&format!("lambda = {},", r[0])), "{} missing from the plot", r[0]);
    }
    assert!(svg.contains("lambda-star-bracket"));

    // Above the estimate sup_u increases with lambda.
    let lambda_star = json(&wide.join("bifurcation.json"))["result"]["lambda_star"]["estimate"].as_f64().unwrap();
    let sups: Vec<f64> = branch
        .iter()
        .filter(|r| r[0].parse::<f64>().unwrap() >= lambda_star)
        .map(|r| r[1].parse().unwrap())
        .collect();
    assert!(sups.len() >= 2);
    assert!(sups.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn bad_bracket_is_a_solver_failure() {
    let (dir, cfg) = setup(SMALL);
    let o = fracbif(&cfg, dir.path(), &["bifurcation", "--bracket", "5,3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bracket"));
}

#[test]
fn verify_passes_in_the_singular_case() {
    let text = SMALL.replace("p = 3", "p = 1.5").replace("q = 2.5", "q = 1.3").replace("r = 1.5", "r = 1.15");
    let (dir, cfg) = setup(&text);
    let o = fracbif(&cfg, dir.path(), &["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", String::from_utf8_lossy(&o.stdout), stderr(&o));
    assert_eq!(json(&dir.path().join("verify.json"))["result"]["passed"], true);
}

#[test]
fn verify_flags_a_corrupted_kernel() {
    let (dir, cfg) = setup(SMALL);
    let o = fracbif(&cfg, dir.path(), &["verify", "--corrupt-kernel"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("mon-i"), "{}", stderr(&o));
    let failed = json(&dir.path().join("verify.json"))["result"]["failed"].clone();
    assert!(failed.as_array().unwrap().iter().any(|v| v == "mon-i"));
}

#[test]
fn thread_count_from_environment() {
    let (dir, cfg) = setup(SMALL);
    let o = Command::new(env!("CARGO_BIN_EXE_fracbif"))
        .args(["eigen", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .env("FRACBIF_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let o = Command::new(env!("CARGO_BIN_EXE_fracbif"))
        .args(["eigen", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .env("FRACBIF_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}
