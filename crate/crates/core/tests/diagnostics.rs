use fracbif_core::bifurcation::Pipeline;
use fracbif_core::diagnostics::{cs_norms, hopf_ratio, verify_energy_bound, DEFAULT_ALPHA_FRACTION};
use fracbif_core::mesh::build_mesh;
use fracbif_core::params::validate_params;
use fracbif_core::solvers::SolveOptions;
use fracbif_core::RawParams;

#[test]
fn weighted_norm_self_converges_under_refinement() {
    let params = validate_params(RawParams { p: 3.0, s: 0.3, q: 2.5, r: 1.5, lambda: 12.0 }).unwrap();
    let mut norms = Vec::new();
    let mut warm: Option<(usize, Vec<f64>)> = None;
    for n in [100usize, 200, 400] {
        let mesh = build_mesh(-1.0, 1.0, n).unwrap();
        let pl = Pipeline::new(mesh.clone(), params.clone(), SolveOptions::default()).unwrap();
        // Warm start from the coarser solution, prolonged piecewise-constantly.
        let start = warm.as_ref().map(|(m, u)| fracbif_core::GridFunction::new((0..n).map(|i| u[i * m / n]).collect()));
        let point = pl.solve_at_lambda(12.0, start.as_ref()).unwrap();
        assert!(point.has_solution());
        let u = &point.u_big.solution;
        let (cs, holder) = cs_norms(&mesh, u, 0.3, DEFAULT_ALPHA_FRACTION * 0.3).unwrap();
        assert!(hopf_ratio(&mesh, u, 0.3) > 0.0 && hopf_ratio(&mesh, u, 0.3) <= cs);
        assert!(holder.is_finite());
        let bound = verify_energy_bound(pl.kernel(), &params, u).unwrap();
        assert!(bound.checks.iter().all(|c| c.passed), "{:?}", bound.checks);
        assert!(bound.weak_form_gap < 1e-8, "n {n}: weak-form gap {}", bound.weak_form_gap);
        norms.push(cs);
        warm = Some((n, u.values().to_vec()));
    }
    for w in norms.windows(2) {
        assert!((w[1] - w[0]).abs() <= 0.05 * w[1], "{norms:?}");
    }
}
