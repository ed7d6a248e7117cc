//! The reaction `f_λ(t) = λ(t⁺)^{q-1} - (t⁺)^{r-1}`, its primitive, and the
//! two position-dependent truncations used by the existence arguments.
//!
//! * `Hat(anchor)`: frozen at `f_λ(anchor_i)` for `t ≤ anchor_i`, which pins
//!   minimizers above a subsolution.
//! * `Tilde(ceiling)`: `λ ceiling_i^{q-1} - t^{r-1}` for `t ≥ ceiling_i`, which
//!   turns `0` and the ceiling into local minima of one energy.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs_pow, abs_pow_increment, powf};
use crate::mesh::GridFunction;
use crate::params::ProblemParams;

#[derive(Debug, Clone, PartialEq)]
pub enum Variant {
    Plain,
    Hat(Vec<f64>),
    Tilde(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionModel {
    p: f64,
    lambda: f64,
    pub(crate) q: f64,
    pub(crate) r: f64,
    variant: Variant,
    c0: f64,
}

#[inline]
fn pos_pow(t: f64, e: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        abs_pow(t, e)
    }
}

impl ReactionModel {
    pub fn plain(params: &ProblemParams) -> Self {
        Self::build(params, Variant::Plain)
    }

    /// Truncation below `anchor` (a subsolution).
    pub fn hat(params: &ProblemParams, anchor: &GridFunction) -> Self {
        Self::build(params, Variant::Hat(anchor.values().to_vec()))
    }

    /// Truncation above `ceiling` (a nonnegative solution).
    pub fn tilde(params: &ProblemParams, ceiling: &GridFunction) -> Self {
        Self::build(params, Variant::Tilde(ceiling.values().to_vec()))
    }

    fn build(params: &ProblemParams, variant: Variant) -> Self {
        let mut model = ReactionModel {
            p: params.p,
            lambda: params.lambda,
            q: params.q,
            r: params.r,
            variant,
            c0: 0.0,
        };
        model.c0 = model.growth_constant();
        model
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    pub fn is_plain(&self) -> bool {
        matches!(self.variant, Variant::Plain)
    }

    /// Homogeneity exponent of the operator this reaction is paired with.
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Constant `C₀` with `|f(x, t)| ≤ C₀ (1 + |t|^{q-1})`.
    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Number of nodes the truncation is defined on, `None` for the plain model.
    pub fn len(&self) -> Option<usize> {
        match &self.variant {
            Variant::Plain => None,
            Variant::Hat(a) | Variant::Tilde(a) => Some(a.len()),
        }
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        match self.len() {
            Some(m) if m != n => Err(Error::MeshMismatch { expected: n, found: m }),
            _ => Ok(()),
        }
    }

    fn growth_constant(&self) -> f64 {
        // |t|^{r-1} ≤ 1 + |t|^{q-1}, so the plain reaction has C₀ = λ + 1.
        let plain = self.lambda + 1.0;
        match &self.variant {
            Variant::Plain => plain,
            Variant::Hat(anchor) => anchor
                .iter()
                .map(|&a| self.plain_f(a).abs())
                .fold(plain, f64::max),
            Variant::Tilde(ceiling) => {
                let top = ceiling.iter().fold(0.0_f64, |m, &c| m.max(c));
                plain.max(self.lambda * pos_pow(top, self.q - 1.0) + 1.0)
            }
        }
    }

    #[inline]
    pub fn plain_f(&self, t: f64) -> f64 {
        self.lambda * pos_pow(t, self.q - 1.0) - pos_pow(t, self.r - 1.0)
    }

    #[inline]
    pub fn plain_primitive(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            self.lambda * abs_pow(t, self.q) / self.q - abs_pow(t, self.r) / self.r
        }
    }

    /// `f(x_i, t)`.
    #[inline]
    pub fn f(&self, i: usize, t: f64) -> f64 {
        match &self.variant {
            Variant::Plain => self.plain_f(t),
            Variant::Hat(anchor) => {
                let a = anchor[i];
                if t <= a {
                    self.plain_f(a)
                } else {
                    self.plain_f(t)
                }
            }
            Variant::Tilde(ceiling) => {
                let c = ceiling[i];
                if t < c {
                    self.plain_f(t)
                } else {
                    self.lambda * pos_pow(c, self.q - 1.0) - pos_pow(t, self.r - 1.0)
                }
            }
        }
    }

    /// `F(x_i, t) = ∫₀ᵗ f(x_i, τ) dτ`, in closed form.
    pub fn primitive(&self, i: usize, t: f64) -> f64 {
        match &self.variant {
            Variant::Plain => self.plain_primitive(t),
            Variant::Hat(anchor) => {
                let a = anchor[i];
                let fa = self.plain_f(a);
                if t <= a {
                    fa * t
                } else {
                    fa * a + self.plain_primitive(t) - self.plain_primitive(a)
                }
            }
            Variant::Tilde(ceiling) => {
                let c = ceiling[i];
                if t < c {
                    self.plain_primitive(t)
                } else {
                    // t ≥ c; when c < 0 the plain piece contributes nothing.
                    let c_pos = c.max(0.0);
                    let lin = self.lambda * pos_pow(c, self.q - 1.0);
                    self.plain_primitive(c) + lin * (t - c_pos)
                        - (pos_pow(t, self.r) - pos_pow(c_pos, self.r)) / self.r
                }
            }
        }
    }

    fn plain_increment(&self, t: f64, d: f64) -> f64 {
        if t > 0.0 && t + d > 0.0 {
            self.lambda * abs_pow_increment(t, d, self.q) / self.q - abs_pow_increment(t, d, self.r) / self.r
        } else {
            self.plain_primitive(t + d) - self.plain_primitive(t)
        }
    }

    /// `F(x_i, t+d) - F(x_i, t)`, accurate relative to its own size. A step
    /// across the knot of a truncated reaction is split there.
    pub(crate) fn primitive_increment(&self, i: usize, t: f64, d: f64) -> f64 {
        let split = |knot: f64, lower: &dyn Fn(f64, f64) -> f64, upper: &dyn Fn(f64, f64) -> f64| {
            let b = t + d;
            match (t <= knot, b <= knot) {
                (true, true) => lower(t, d),
                (false, false) => upper(t, d),
                (true, false) => lower(t, knot - t) + upper(knot, b - knot),
                (false, true) => upper(t, knot - t) + lower(knot, b - knot),
            }
        };
        match &self.variant {
            Variant::Plain => self.plain_increment(t, d),
            Variant::Hat(anchor) => {
                let a = anchor[i];
                let fa = self.plain_f(a);
                split(a, &|_, d| fa * d, &|t, d| self.plain_increment(t, d))
            }
            Variant::Tilde(ceiling) => {
                let c = ceiling[i];
                let lin = self.lambda * pos_pow(c, self.q - 1.0);
                let upper = |t: f64, d: f64| {
                    let b = t + d;
                    let top = if t > 0.0 && b > 0.0 {
                        abs_pow_increment(t, d, self.r)
                    } else {
                        pos_pow(b, self.r) - pos_pow(t, self.r)
                    };
                    lin * d - top / self.r
                };
                split(c, &|t, d| self.plain_increment(t, d), &upper)
            }
        }
    }

    /// `Σ_i F(x_i, u_i)`.
    pub fn primitive_sum(&self, u: &[f64]) -> f64 {
        u.iter().enumerate().map(|(i, &t)| self.primitive(i, t)).sum()
    }
}

/// `δ = λ^{-1/(q-r)}`: the plain reaction is nonpositive on `[0, δ]`.
pub fn sign_threshold_delta(params: &ProblemParams) -> Result<f64> {
    if params.lambda <= 0.0 {
        return Err(Error::ZeroLambda);
    }
    Ok(powf(params.lambda, -1.0 / (params.q - params.r)))
}

/// `λ₀ = min{1, ε}`: for `λ < λ₀`, `f_λ(t) ≤ ε t^{p-1}` on `t ≥ 0`, so there
/// is no positive solution once `ε` is below the principal eigenvalue.
pub fn nonexistence_bound(eps: f64) -> f64 {
    eps.min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{validate_params, RawParams};
    use alloc::vec;

    fn params(lambda: f64, q: f64, r: f64) -> ProblemParams {
        validate_params(RawParams { p: 3.0, s: 0.3, q, r, lambda }).unwrap()
    }

    #[test]
    fn plain_examples() {
        let m = ReactionModel::plain(&params(1.0, 2.0, 1.5));
        assert_eq!(m.f(0, 1.0), 0.0);
        assert!((m.primitive(0, 1.0) - (0.5 - 2.0 / 3.0)).abs() < 1e-15);
        assert_eq!(m.primitive(0, 0.0), 0.0);
        let m4 = ReactionModel::plain(&params(4.0, 2.0, 1.5));
        assert!((m4.f(0, 0.25) - 0.5).abs() < 1e-15);
        for lambda in [0.0, 0.3, 7.0] {
            let m = ReactionModel::plain(&params(lambda, 2.5, 1.5));
            assert_eq!(m.f(0, -3.0), 0.0);
            assert_eq!(m.primitive(0, -3.0), 0.0);
        }
    }

    #[test]
    fn delta_examples() {
        let p = params(4.0, 2.5, 1.5);
        let delta = sign_threshold_delta(&p).unwrap();
        assert!((delta - 0.25).abs() < 1e-15);
        let m = ReactionModel::plain(&p);
        assert!(m.f(0, delta).abs() < 1e-15);
        assert!(m.f(0, delta / 2.0) < 0.0);
        assert_eq!(sign_threshold_delta(&params(0.0, 2.5, 1.5)), Err(Error::ZeroLambda));
    }

    #[test]
    fn nonexistence_bound_examples() {
        assert_eq!(nonexistence_bound(0.5), 0.5);
        assert_eq!(nonexistence_bound(3.0), 1.0);
    }

    #[test]
    fn nonexistence_bound_dense_scan() {
        // λ = 0.4 < λ₀ = 0.5 = ε, p = 3.
        let eps = 0.5;
        let m = ReactionModel::plain(&params(0.4, 2.5, 1.5));
        assert!(0.4 < nonexistence_bound(eps));
        let worst = (1..=1_000_000)
            .map(|k| k as f64 * 1e-4)
            .map(|t| m.f(0, t) - eps * t * t)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(worst <= 0.0, "worst = {worst}");
    }

    #[test]
    fn truncations_agree_with_plain_on_untruncated_region() {
        let p = params(3.0, 2.5, 1.5);
        let anchor = GridFunction::new(vec![0.2, 0.5, 0.0]);
        let ceiling = GridFunction::new(vec![0.7, 1.5, 0.3]);
        let plain = ReactionModel::plain(&p);
        let hat = ReactionModel::hat(&p, &anchor);
        let tilde = ReactionModel::tilde(&p, &ceiling);
        for i in 0..3 {
            for k in 0..200 {
                let t = -1.0 + 0.0173 * k as f64;
                if t > anchor.values()[i] {
                    assert_eq!(hat.f(i, t), plain.f(i, t));
                } else {
                    assert_eq!(hat.f(i, t), plain.f(i, anchor.values()[i]));
                }
                if t < ceiling.values()[i] {
                    assert_eq!(tilde.f(i, t), plain.f(i, t));
                }
                assert!(tilde.f(i, t) <= plain.f(i, t) + 1e-15);
                assert!(tilde.primitive(i, t) <= plain.primitive(i, t) + 1e-14);
            }
        }
    }

    #[test]
    fn zero_anchor_hat_is_plain() {
        let p = params(2.0, 2.5, 1.5);
        let hat = ReactionModel::hat(&p, &GridFunction::zeros(4));
        let plain = ReactionModel::plain(&p);
        for k in 0..100 {
            let t = -2.0 + 0.05 * k as f64;
            assert_eq!(hat.f(1, t), plain.f(1, t));
            assert!((hat.primitive(1, t) - plain.primitive(1, t)).abs() < 1e-15);
        }
    }

    #[test]
    fn growth_bound_holds_for_all_variants() {
        let p = params(2.5, 2.5, 1.5);
        let anchor = GridFunction::new(vec![0.1, 0.9, 2.0]);
        let ceiling = GridFunction::new(vec![0.4, 1.2, 3.0]);
        for model in [
            ReactionModel::plain(&p),
            ReactionModel::hat(&p, &anchor),
            ReactionModel::tilde(&p, &ceiling),
        ] {
            let c0 = model.c0();
            for i in 0..3 {
                for k in 0..2000 {
                    let t = -10.0 + 0.01 * k as f64;
                    let bound = c0 * (1.0 + t.abs().powf(p.q - 1.0));
                    assert!(model.f(i, t).abs() <= bound, "{:?} t={t}", model.variant());
                }
            }
        }
    }

    #[test]
    fn primitive_derivative_is_the_reaction() {
        let p = params(1.7, 2.2, 1.4);
        let anchor = GridFunction::new(vec![0.3, 1.1]);
        let ceiling = GridFunction::new(vec![0.8, 0.5]);
        let eps = 1e-6;
        for model in [
            ReactionModel::plain(&p),
            ReactionModel::hat(&p, &anchor),
            ReactionModel::tilde(&p, &ceiling),
        ] {
            for i in 0..2 {
                for k in 0..300 {
                    let t = -0.5 + 0.0101 * k as f64 + 0.003;
                    let fd = (model.primitive(i, t + eps) - model.primitive(i, t - eps)) / (2.0 * eps);
                    let f = model.f(i, t);
                    // Kinks of f (at 0 and at the truncation level) only
                    // affect a window of width eps.
                    let near_kink = [0.0, anchor.values()[i], ceiling.values()[i]]
                        .iter()
                        .any(|&c| (t - c).abs() < 2.0 * eps);
                    if !near_kink {
                        assert!((fd - f).abs() < 1e-6 * (1.0 + f.abs()), "t={t} fd={fd} f={f}");
                    }
                }
            }
        }
    }

    #[test]
    fn primitive_increment_agrees_with_differences() {
        let p = params(2.0, 2.5, 1.5);
        let level = GridFunction::new(vec![-0.2, 0.0, 0.4, 1.1]);
        let models = [ReactionModel::plain(&p), ReactionModel::hat(&p, &level), ReactionModel::tilde(&p, &level)];
        for m in &models {
            for i in 0..4 {
                for &t in &[-0.3, 0.05, 0.35, 0.45, 1.0, 1.3] {
                    for &d in &[-0.4, -0.07, 0.02, 0.3] {
                        let direct = m.primitive(i, t + d) - m.primitive(i, t);
                        let inc = m.primitive_increment(i, t, d);
                        assert!((inc - direct).abs() <= 1e-13, "{:?} i={i} t={t} d={d}", m.variant());
                    }
                }
            }
        }
    }

    #[test]
    fn primitive_increment_resolves_tiny_steps() {
        let p = params(2.0, 2.5, 1.5);
        let level = GridFunction::new(vec![0.4]);
        let m = ReactionModel::tilde(&p, &level);
        for &t in &[0.2, 0.9] {
            let d = 1e-12;
            let expect = m.f(0, t) * d;
            assert!((m.primitive_increment(0, t, d) - expect).abs() <= 1e-6 * expect.abs());
        }
    }

}
