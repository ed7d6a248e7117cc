//! Problem parameters and the odd-power convention.

use alloc::format;

use crate::error::{Error, Result};
use crate::math::abs_pow;

/// Unvalidated parameter record, as read from a configuration file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawParams {
    pub p: f64,
    pub s: f64,
    pub q: f64,
    pub r: f64,
    pub lambda: f64,
}

/// Validated exponents and parameter of the problem on a one-dimensional
/// domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    pub p: f64,
    pub s: f64,
    pub q: f64,
    pub r: f64,
    pub lambda: f64,
    /// Growth constant `C₀` with `|f_λ(t)| ≤ C₀(1 + |t|^{q-1})`.
    pub c0: f64,
    /// Critical Sobolev exponent `p / (1 - p·s)` in dimension one.
    pub pstar: f64,
}

pub fn validate_params(raw: RawParams) -> Result<ProblemParams> {
    let RawParams { p, s, q, r, lambda } = raw;
    for (name, v) in [("p", p), ("s", s), ("q", q), ("r", r), ("lambda", lambda)] {
        if !v.is_finite() {
            return Err(Error::InvalidParams(format!("{name} = {v} is not finite")));
        }
    }
    if r <= 1.0 {
        return Err(Error::InvalidParams(format!("need r > 1, got r = {r}")));
    }
    if r >= q {
        return Err(Error::InvalidParams(format!("need r < q, got r = {r}, q = {q}")));
    }
    if q >= p {
        return Err(Error::InvalidParams(format!("need q < p, got q = {q}, p = {p}")));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParams(format!("need 0 < s < 1, got s = {s}")));
    }
    if p * s >= 1.0 {
        return Err(Error::InvalidParams(format!("need p*s < 1, got p*s = {}", p * s)));
    }
    if lambda < 0.0 {
        return Err(Error::InvalidParams(format!("need lambda >= 0, got {lambda}")));
    }
    Ok(ProblemParams { p, s, q, r, lambda, c0: lambda + 1.0, pstar: p / (1.0 - p * s) })
}

impl ProblemParams {
    /// Kernel exponent `σ = p·s`; the kernel is `|x - y|^{-(1+σ)}`.
    pub fn sigma(&self) -> f64 {
        self.p * self.s
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        ProblemParams { lambda, c0: lambda + 1.0, ..*self }
    }

    pub fn raw(&self) -> RawParams {
        RawParams { p: self.p, s: self.s, q: self.q, r: self.r, lambda: self.lambda }
    }
}

/// `|a|^{t-1} sgn(a)`, and `0` at `a = 0`.
///
/// With this convention `odd_power(a, t) * a = |a|^t`, and the operator reads
/// `odd_power(u(x) - u(y), p)`.
#[inline]
pub fn odd_power(a: f64, t: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else if a > 0.0 {
        abs_pow(a, t - 1.0)
    } else {
        -abs_pow(a, t - 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw(p: f64, s: f64, q: f64, r: f64, lambda: f64) -> RawParams {
        RawParams { p, s, q, r, lambda }
    }

    #[test]
    fn accepts_valid_params_and_computes_pstar() {
        let params = validate_params(raw(3.0, 0.3, 2.5, 1.5, 4.0)).unwrap();
        assert!((params.pstar - 30.0).abs() < 1e-12);
        assert!(params.pstar > params.p);
        assert_eq!(params.c0, 5.0);
    }

    #[test]
    fn rejects_ordering_violations() {
        assert!(validate_params(raw(2.0, 0.6, 2.5, 1.5, 1.0)).is_err());
        let err = validate_params(raw(2.0, 0.4, 2.5, 1.5, 1.0)).unwrap_err();
        assert!(matches!(err, Error::InvalidParams(ref m) if m.contains("q < p")));
        assert!(validate_params(raw(3.0, 0.3, 2.0, 2.0, 1.0)).is_err());
        assert!(validate_params(raw(3.0, 0.3, 2.5, 1.0, 1.0)).is_err());
        assert!(validate_params(raw(3.0, 0.3, 2.5, 1.5, -1.0)).is_err());
    }

    #[test]
    fn rejects_ps_at_least_one() {
        let err = validate_params(raw(2.0, 0.5, 1.8, 1.5, 1.0)).unwrap_err();
        assert!(matches!(err, Error::InvalidParams(ref m) if m.contains("p*s")));
        assert!(validate_params(raw(2.0, 0.6, 1.8, 1.5, 1.0)).is_err());
        assert!(validate_params(raw(3.0, 1.0, 2.5, 1.5, 1.0)).is_err());
    }

    #[test]
    fn odd_power_examples() {
        assert_eq!(odd_power(2.0, 3.0), 4.0);
        assert_eq!(odd_power(-2.0, 3.0), -4.0);
        assert_eq!(odd_power(0.0, 1.5), 0.0);
        assert!((odd_power(4.0, 1.5) - 2.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn odd_power_is_odd_and_pairs_to_abs_power(a in -50.0f64..50.0, t in 0.1f64..6.0) {
            prop_assert_eq!(odd_power(-a, t), -odd_power(a, t));
            let lhs = odd_power(a, t) * a;
            let rhs = a.abs().powf(t);
            prop_assert!(lhs >= 0.0);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
        }
    }
}
