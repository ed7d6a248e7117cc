//! Scalar helpers over `libm` so the crate stays `no_std`.

#[inline]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn expm1(x: f64) -> f64 {
    libm::expm1(x)
}

#[inline]
pub(crate) fn log1p(x: f64) -> f64 {
    libm::log1p(x)
}

/// `|a|^t` for `t > 0`, with exact fast paths for the small integer powers
/// that dominate the hot loops.
#[inline]
pub(crate) fn abs_pow(a: f64, t: f64) -> f64 {
    let m = a.abs();
    if t == 1.0 {
        m
    } else if t == 2.0 {
        m * m
    } else if t == 3.0 {
        m * m * m
    } else if m == 0.0 {
        0.0
    } else {
        powf(m, t)
    }
}

/// `(|a|^{t-1} sgn a, |a|^t)` computed with a single power evaluation.
#[inline]
pub(crate) fn odd_and_abs_pow(a: f64, t: f64) -> (f64, f64) {
    if a == 0.0 {
        return (0.0, 0.0);
    }
    let m = a.abs();
    let lower = abs_pow(m, t - 1.0);
    let odd = if a > 0.0 { lower } else { -lower };
    (odd, lower * m)
}

/// `|a+d|^t - |a|^t` without the cancellation of the direct difference when
/// `|d| ≪ |a|`.
#[inline]
pub(crate) fn abs_pow_increment(a: f64, d: f64, t: f64) -> f64 {
    let b = a + d;
    if d == 0.0 {
        return 0.0;
    }
    if a * b <= 0.0 || d.abs() > 0.5 * a.abs() {
        return abs_pow(b, t) - abs_pow(a, t);
    }
    let s = if a > 0.0 { 1.0 } else { -1.0 };
    if t == 2.0 {
        d * (a + b)
    } else if t == 3.0 {
        s * d * (a * a + a * b + b * b)
    } else {
        abs_pow(a, t) * expm1(t * log1p(d / a))
    }
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}
