//! Discrete Gagliardo form on a uniform mesh.
//!
//! For piecewise-constant `u` extended by zero,
//!
//! ```text
//! ∬_{ℝ×ℝ} |u(x)-u(y)|^p / |x-y|^{1+σ}
//!     = Σ_{i≠j} K_ij |u_i - u_j|^p + 2 Σ_i T_i |u_i|^p,
//! ```
//!
//! with `K_ij = ∬_{C_i×C_j} |x-y|^{-(1+σ)}` and `T_i = ∬_{C_i×Ωᶜ} |x-y|^{-(1+σ)}`.
//! Both have closed forms through the antiderivative `G(t) = -t^{1-σ}/(σ(1-σ))`
//! of the kernel taken twice. The diagonal cells never contribute.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs_pow, abs_pow_increment, expm1, log1p, odd_and_abs_pow, powf};
use crate::mesh::{GridFunction, Mesh1D};
use crate::params::{odd_power, ProblemParams};

/// `σ` closer to 1 than this is rejected: `1/(σ(1-σ))` blows up.
const SIGMA_GAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    n: usize,
    sigma: f64,
    h: f64,
    /// Row-major `n × n`, zero diagonal.
    k: Vec<f64>,
    tail: Vec<f64>,
    /// `max_i (Σ_j K_ij + T_i)`.
    row_bound: f64,
}

pub fn assemble_kernel(mesh: &Mesh1D, params: &ProblemParams) -> Result<KernelMatrix> {
    assemble_with_sigma(mesh, params.sigma())
}

/// Assembles the kernel for an explicit exponent `σ ∈ (0, 1)`.
pub fn assemble_with_sigma(mesh: &Mesh1D, sigma: f64) -> Result<KernelMatrix> {
    if !(sigma > 0.0 && sigma < 1.0 - SIGMA_GAP) {
        return Err(Error::DegenerateKernel { sigma });
    }
    let n = mesh.n();
    let h = mesh.h();
    let a = 1.0 - sigma;
    let scale = powf(h, a) / (sigma * a);

    // Uniform cells: the pair weight depends on the offset m = |i - j| only,
    // K_m = scale * [(m-1)^a - 2 m^a + (m+1)^a] * (-1).
    let mut profile = vec![0.0; n];
    for (m, slot) in profile.iter_mut().enumerate().skip(1) {
        *slot = scale * neg_second_difference(m as f64, a);
    }

    let mut k = vec![0.0; n * n];
    for (i, row) in k.chunks_mut(n).enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = profile[i.abs_diff(j)];
        }
    }

    // Exterior (b, ∞) seen from cell i contributes ((n-i)^a - (n-i-1)^a) in
    // cell units, and (-∞, a) contributes ((i+1)^a - i^a).
    let tail = (0..n)
        .map(|i| scale * (forward_difference((n - i - 1) as f64, a) + forward_difference(i as f64, a)))
        .collect();

    Ok(KernelMatrix::build(n, sigma, h, k, tail))
}

/// `(m+1)^a - m^a` without cancellation for large `m`.
fn forward_difference(m: f64, a: f64) -> f64 {
    if m == 0.0 {
        1.0
    } else {
        powf(m, a) * expm1(a * log1p(1.0 / m))
    }
}

/// `2 m^a - (m-1)^a - (m+1)^a` for `m ≥ 1`, which is positive for `0 < a < 1`.
fn neg_second_difference(m: f64, a: f64) -> f64 {
    let back = if m == 1.0 { 1.0 } else { -powf(m, a) * expm1(a * log1p(-1.0 / m)) };
    back - forward_difference(m, a)
}

impl KernelMatrix {
    fn build(n: usize, sigma: f64, h: f64, k: Vec<f64>, tail: Vec<f64>) -> Self {
        let row_bound = (0..n)
            .map(|i| k[i * n..(i + 1) * n].iter().sum::<f64>() + tail[i])
            .fold(0.0_f64, f64::max);
        KernelMatrix { n, sigma, h, k, tail, row_bound }
    }

    /// Builds a kernel from explicit weights. Used for diagnostics and to
    /// inject deliberately broken kernels into the verification suite.
    pub fn from_parts(k: Vec<f64>, tail: Vec<f64>, sigma: f64, h: f64) -> Result<Self> {
        let n = tail.len();
        if k.len() != n * n {
            return Err(Error::MeshMismatch { expected: n * n, found: k.len() });
        }
        Ok(KernelMatrix::build(n, sigma, h, k, tail))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Cell width, which is also the quadrature weight of every node.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn k(&self, i: usize, j: usize) -> f64 {
        self.k[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.k[i * self.n..(i + 1) * self.n]
    }

    pub fn tail(&self) -> &[f64] {
        &self.tail
    }

    /// The kernel with every weight multiplied by `c`.
    pub fn scaled(&self, c: f64) -> KernelMatrix {
        KernelMatrix::build(
            self.n,
            self.sigma,
            self.h,
            self.k.iter().map(|v| c * v).collect(),
            self.tail.iter().map(|v| c * v).collect(),
        )
    }

    /// Bound on the change of `A(u)` under rounding-level perturbations of a
    /// `u` with sup-norm `sup`. For `p < 2` the map `t ↦ |t|^{p-1}` is only
    /// Hölder continuous, so differences of nearly tied nodes at the ulp
    /// level move `A(u)` by about `(ε sup)^{p-1}`; residuals cannot be
    /// resolved below this. Zero for `p ≥ 2`.
    pub fn rounding_floor(&self, sup: f64, p: f64) -> f64 {
        if p >= 2.0 || sup == 0.0 {
            return 0.0;
        }
        2.0 * self.row_bound * powf(2.0 * f64::EPSILON * sup, p - 1.0)
    }

    /// `(1/p) [u]^p` for the zero extension of `u`.
    pub fn seminorm_energy(&self, u: &GridFunction, p: f64) -> Result<f64> {
        u.check_len(self.n)?;
        let u = u.values();
        let rows = map_rows(self.n, |i| {
            let ui = u[i];
            let row = self.row(i);
            let mut acc = 0.0;
            for (j, &kij) in row.iter().enumerate() {
                if j != i {
                    acc += kij * abs_pow(ui - u[j], p);
                }
            }
            acc + 2.0 * self.tail[i] * abs_pow(ui, p)
        });
        Ok(rows.iter().sum::<f64>() / p)
    }

    /// The discrete fractional p-Laplacian, i.e. the Euclidean gradient of
    /// [`seminorm_energy`](Self::seminorm_energy).
    pub fn apply_operator(&self, u: &GridFunction, p: f64) -> Result<GridFunction> {
        u.check_len(self.n)?;
        let u = u.values();
        let out = map_rows(self.n, |i| {
            let ui = u[i];
            let row = self.row(i);
            let mut acc = 0.0;
            for (j, &kij) in row.iter().enumerate() {
                if j != i {
                    acc += kij * odd_power(ui - u[j], p);
                }
            }
            2.0 * (acc + self.tail[i] * odd_power(ui, p))
        });
        Ok(GridFunction::new(out))
    }

    /// Energy and operator in one sweep, sharing the power evaluations.
    pub(crate) fn energy_and_operator(&self, u: &[f64], p: f64) -> (f64, Vec<f64>) {
        let rows = map_rows(self.n, |i| {
            let ui = u[i];
            let row = self.row(i);
            let (mut e, mut g) = (0.0, 0.0);
            for (j, &kij) in row.iter().enumerate() {
                if j != i {
                    let (odd, abs) = odd_and_abs_pow(ui - u[j], p);
                    e += kij * abs;
                    g += kij * odd;
                }
            }
            let (odd, abs) = odd_and_abs_pow(ui, p);
            let t = self.tail[i];
            (e + 2.0 * t * abs, 2.0 * (g + t * odd))
        });
        let energy = rows.iter().map(|r| r.0).sum::<f64>() / p;
        (energy, rows.into_iter().map(|r| r.1).collect())
    }

    /// `(1/p)([u+d]^p - [u]^p)`, accumulated term by term so that the result
    /// keeps its relative accuracy when `d` is tiny.
    pub(crate) fn seminorm_increment(&self, u: &[f64], d: &[f64], p: f64) -> f64 {
        let rows = map_rows(self.n, |i| {
            let (ui, di) = (u[i], d[i]);
            let row = self.row(i);
            let mut acc = 0.0;
            for (j, &kij) in row.iter().enumerate() {
                if j != i {
                    acc += kij * abs_pow_increment(ui - u[j], di - d[j], p);
                }
            }
            acc + 2.0 * self.tail[i] * abs_pow_increment(ui, di, p)
        });
        rows.iter().sum::<f64>() / p
    }

    /// Matrix of the quadratic form `[u]^2 = uᵀ M u` (the `p = 2` case).
    pub fn quadratic_form_matrix(&self) -> Vec<f64> {
        let n = self.n;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            let row = self.row(i);
            let row_sum: f64 = row.iter().sum();
            for j in 0..n {
                m[i * n + j] = -2.0 * row[j];
            }
            m[i * n + i] = 2.0 * (row_sum + self.tail[i]);
        }
        m
    }
}

/// `Σ_i Au_i φ_i`.
pub fn pairing(au: &GridFunction, phi: &GridFunction) -> Result<f64> {
    phi.check_len(au.len())?;
    Ok(crate::math::dot(au.values(), phi.values()))
}

/// Evaluates `f` for every row, in parallel when enabled. Each row is
/// reduced sequentially, so the result is independent of the thread count.
#[cfg(feature = "parallel")]
pub(crate) fn map_rows<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    if n >= 64 {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_rows<T>(n: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..n).map(f).collect()
}
