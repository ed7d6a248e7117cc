//! Qualitative certificates for computed solutions: boundary (Hopf) ratios
//! `u/d^s`, weighted Hölder quotients, ordering margins, the discrete
//! monotonicity properties of the operator, and the a priori bound chain.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernel::{pairing, KernelMatrix};
use crate::math::{abs_pow, powf};
use crate::mesh::{GridFunction, Mesh1D};
use crate::params::{odd_power, ProblemParams};
use crate::reaction::ReactionModel;

/// Default Hölder order as a fraction of `s`.
pub const DEFAULT_ALPHA_FRACTION: f64 = 0.9;

/// Tolerance of the operator-property trials.
pub const PROPERTY_TOL: f64 = 1e-12;

/// Strict-positivity floor for the comparison property.
pub const STRICT_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticReport {
    pub hopf_ratio: f64,
    pub cs_norm: f64,
    pub weighted_holder: f64,
    pub ordering_margin: Option<OrderingMargin>,
    pub bound_checks: Vec<PropertyCheck>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderingMargin {
    /// `min_i (u_i - v_i)`.
    pub margin: f64,
    /// `min_i (u_i - v_i) / d_i^s`.
    pub weighted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Smallest slip `lhs - rhs` observed (negative means violated).
    pub worst: f64,
    pub trials: usize,
}

/// `min_i u_i / d_i^s`.
pub fn hopf_ratio(mesh: &Mesh1D, u: &GridFunction, s: f64) -> f64 {
    u.values()
        .iter()
        .zip(mesh.dist())
        .map(|(&v, &d)| v / powf(d, s))
        .fold(f64::INFINITY, f64::min)
}

/// `(max_i |u_i|/d_i^s, max_{i≠j} |w_i - w_j| / |x_i - x_j|^α)` with `w = u/d^s`.
pub fn cs_norms(mesh: &Mesh1D, u: &GridFunction, s: f64, alpha: f64) -> Result<(f64, f64)> {
    if !(alpha >= 0.0 && alpha < s) {
        return Err(Error::InvalidOrder { alpha, s });
    }
    u.check_len(mesh.n())?;
    let w: Vec<f64> = u.values().iter().zip(mesh.dist()).map(|(&v, &d)| v / powf(d, s)).collect();
    let x = mesh.nodes();
    let sup = w.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut holder = 0.0_f64;
    for i in 0..w.len() {
        for j in i + 1..w.len() {
            let q = (w[i] - w[j]).abs() / powf((x[i] - x[j]).abs(), alpha);
            holder = holder.max(q);
        }
    }
    Ok((sup, holder))
}

/// Margins of `u` over `v`: positive iff `u > v` at every node.
pub fn check_ordering(mesh: &Mesh1D, u: &GridFunction, v: &GridFunction, s: f64) -> OrderingMargin {
    let (margin, weighted) = u
        .values()
        .iter()
        .zip(v.values())
        .zip(mesh.dist())
        .fold((f64::INFINITY, f64::INFINITY), |(m, w), ((a, b), &d)| {
            let diff = a - b;
            (m.min(diff), w.min(diff / powf(d, s)))
        });
    OrderingMargin { margin, weighted }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> GridFunction {
    let scale = rng.gen_range(0.1..3.0);
    GridFunction::new((0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect())
}

/// Seeded trials of the three discrete monotonicity properties:
///
/// * `mon-i`: `⟨A(u), u⁺⟩ ≥ [u⁺]^p` and `⟨A(u), -u⁻⟩ ≥ [u⁻]^p`;
/// * `mon-ii`: `⟨A(u) - A(v), (u-v)⁺⟩ > 0` whenever `(u-v)⁺ ≢ 0`;
/// * `mon-iii`: `⟨A(u) - A(v), (u-v)^{t+1}⟩ ≥ 0` for `t ≥ 1`, odd powers.
pub fn verify_operator_properties(
    kern: &KernelMatrix,
    p: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<PropertyCheck>> {
    if trials == 0 {
        return Err(Error::EmptyInput("operator property trials"));
    }
    let n = kern.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [f64::INFINITY; 3];
    let mut passed = [true; 3];

    for _ in 0..trials {
        let u = random_vector(&mut rng, n);
        let mut v = random_vector(&mut rng, n);
        // Guarantee (u - v)⁺ ≢ 0 for the strict property.
        let k = rng.gen_range(0..n);
        v.values_mut()[k] = u.values()[k] - rng.gen_range(0.01..1.0);

        let au = kern.apply_operator(&u, p)?;
        let av = kern.apply_operator(&v, p)?;

        let up = u.positive_part();
        let um = u.negative_part();
        for (test, part) in [(up.clone(), &up), (um.scale(-1.0), &um)] {
            let lhs = pairing(&au, &test)?;
            let rhs = p * kern.seminorm_energy(part, p)?;
            let slip = lhs - rhs;
            worst[0] = worst[0].min(slip);
            if slip < -PROPERTY_TOL * lhs.abs().max(rhs).max(1.0) {
                passed[0] = false;
            }
        }

        let diff = au.sub(&av);
        let w = u.sub(&v);
        let strict = pairing(&diff, &w.positive_part())?;
        worst[1] = worst[1].min(strict);
        if !(strict > STRICT_FLOOR) {
            passed[1] = false;
        }

        let t = rng.gen_range(1.0..4.0);
        let phi = w.map(|x| odd_power(x, t + 1.0));
        let mono = pairing(&diff, &phi)?;
        let scale: f64 = diff.values().iter().zip(phi.values()).map(|(a, b)| (a * b).abs()).sum();
        worst[2] = worst[2].min(mono);
        if mono < -PROPERTY_TOL * scale.max(1.0) {
            passed[2] = false;
        }
    }
    Ok(["mon-i", "mon-ii", "mon-iii"]
        .iter()
        .enumerate()
        .map(|(k, &name)| PropertyCheck { name, passed: passed[k], worst: worst[k], trials })
        .collect())
}

/// Discrete links of the a priori bound chain
/// `[u]^p = ⟨A(u), u⟩ = h Σ f(u_i) u_i ≤ C₀ h Σ (|u_i| + |u_i|^q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBound {
    /// `p · seminorm_energy(u) = [u]^p`.
    pub seminorm: f64,
    /// `⟨A(u), u⟩`.
    pub operator_pairing: f64,
    /// `h Σ f_λ(u_i) u_i`.
    pub reaction_pairing: f64,
    /// `C₀ h Σ (|u_i| + |u_i|^q)`.
    pub bound: f64,
    /// `[u]^p / (h Σ (|u_i| + |u_i|^q))`, the realized constant.
    pub realized_c0: f64,
    /// `|⟨A(u),u⟩ - h Σ f u| / |⟨A(u),u⟩|`.
    pub weak_form_gap: f64,
    pub checks: Vec<PropertyCheck>,
}

impl EnergyBound {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Evaluates the bound chain at `u`. The weak-form link is allowed a slack of
/// `residual · Σ|u_i|`, which is what a gradient residual can account for.
pub fn verify_energy_bound(kern: &KernelMatrix, params: &ProblemParams, u: &GridFunction) -> Result<EnergyBound> {
    let p = params.p;
    let h = kern.h();
    let model = ReactionModel::plain(params);
    let au = kern.apply_operator(u, p)?;
    let seminorm = p * kern.seminorm_energy(u, p)?;
    let operator_pairing = pairing(&au, u)?;
    let reaction_pairing: f64 = h * u.values().iter().map(|&t| model.plain_f(t) * t).sum::<f64>();
    let l1 = h * u.values().iter().map(|t| t.abs()).sum::<f64>();
    let lq = h * u.values().iter().map(|&t| abs_pow(t, params.q)).sum::<f64>();
    let bound = model.c0() * (l1 + lq);
    let residual = au
        .values()
        .iter()
        .zip(u.values())
        .fold(0.0_f64, |m, (&a, &t)| m.max((a - h * model.plain_f(t)).abs()));
    let mag = operator_pairing.abs().max(reaction_pairing.abs());

    let euler = seminorm - operator_pairing;
    let weak = operator_pairing - reaction_pairing;
    let weak_slack = 1e-8 * mag + residual * l1 / h;
    let chain = bound - reaction_pairing;
    let checks = alloc::vec![
        PropertyCheck {
            name: "euler-identity",
            passed: euler.abs() <= 1e-10 * mag.max(1e-300),
            worst: -euler.abs(),
            trials: 1,
        },
        PropertyCheck { name: "weak-form", passed: weak.abs() <= weak_slack, worst: -weak.abs(), trials: 1 },
        PropertyCheck { name: "growth-bound", passed: chain >= -1e-12 * bound.max(1e-300), worst: chain, trials: 1 },
    ];
    Ok(EnergyBound {
        seminorm,
        operator_pairing,
        reaction_pairing,
        bound,
        realized_c0: if l1 + lq > 0.0 { seminorm / (l1 + lq) } else { 0.0 },
        weak_form_gap: if mag > 0.0 { weak.abs() / mag } else { 0.0 },
        checks,
    })
}

/// All single-solution diagnostics, optionally with the margin over `below`.
pub fn diagnose(
    mesh: &Mesh1D,
    kern: &KernelMatrix,
    params: &ProblemParams,
    u: &GridFunction,
    below: Option<&GridFunction>,
) -> Result<DiagnosticReport> {
    let s = params.s;
    let (cs_norm, weighted_holder) = cs_norms(mesh, u, s, DEFAULT_ALPHA_FRACTION * s)?;
    let bound = verify_energy_bound(kern, params, u)?;
    Ok(DiagnosticReport {
        hopf_ratio: hopf_ratio(mesh, u, s),
        cs_norm,
        weighted_holder,
        ordering_margin: below.map(|v| check_ordering(mesh, u, v, s)),
        bound_checks: bound.checks,
    })
}
