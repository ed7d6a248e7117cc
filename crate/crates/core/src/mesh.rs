//! Uniform interval meshes and nodal grid functions.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::powf;

/// Uniform partition of `(a, b)` into `n` cells; unknowns live at cell
/// midpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    a: f64,
    b: f64,
    h: f64,
    cell_edges: Vec<f64>,
    nodes: Vec<f64>,
    dist: Vec<f64>,
}

pub fn build_mesh(a: f64, b: f64, n: usize) -> Result<Mesh1D> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidMesh(format!("endpoints must be finite, got ({a}, {b})")));
    }
    if a >= b {
        return Err(Error::InvalidMesh(format!("need a < b, got a = {a}, b = {b}")));
    }
    if n < 2 {
        return Err(Error::InvalidMesh(format!("need at least 2 cells, got {n}")));
    }
    let h = (b - a) / n as f64;
    let cell_edges: Vec<f64> = (0..=n)
        .map(|k| if k == n { b } else { a + k as f64 * h })
        .collect();
    // Midpoint distances are evaluated in cell units so that symmetric meshes
    // give exactly symmetric distances.
    let nodes: Vec<f64> = (0..n).map(|i| a + (i as f64 + 0.5) * h).collect();
    let dist: Vec<f64> = (0..n)
        .map(|i| {
            let left = i as f64 + 0.5;
            let right = (n - i) as f64 - 0.5;
            left.min(right) * h
        })
        .collect();
    Ok(Mesh1D { a, b, h, cell_edges, nodes, dist })
}

impl Mesh1D {
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn cell_edges(&self) -> &[f64] {
        &self.cell_edges
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Distance from each node to the complement of the domain.
    pub fn dist(&self) -> &[f64] {
        &self.dist
    }

    /// `d(x_i)^s` at every node.
    pub fn dist_pow(&self, s: f64) -> Vec<f64> {
        self.dist.iter().map(|&d| powf(d, s)).collect()
    }

    /// Evaluates `g` at every node.
    pub fn sample(&self, g: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::new(self.nodes.iter().map(|&x| g(x)).collect())
    }
}

/// Nodal values of a piecewise-constant function, extended by zero outside
/// the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Self {
        GridFunction { values }
    }

    pub fn zeros(n: usize) -> Self {
        GridFunction { values: alloc::vec![0.0; n] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn sup_norm(&self) -> f64 {
        crate::math::sup_norm(&self.values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::new(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn positive_part(&self) -> GridFunction {
        self.map(|v| v.max(0.0))
    }

    /// `u⁻ = max(-u, 0)`, so that `u = u⁺ - u⁻`.
    pub fn negative_part(&self) -> GridFunction {
        self.map(|v| (-v).max(0.0))
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        self.map(|v| c * v)
    }

    pub fn axpy(&self, alpha: f64, other: &GridFunction) -> GridFunction {
        GridFunction::new(
            self.values.iter().zip(&other.values).map(|(x, y)| x + alpha * y).collect(),
        )
    }

    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        self.axpy(-1.0, other)
    }

    pub fn max(&self, other: &GridFunction) -> GridFunction {
        GridFunction::new(self.values.iter().zip(&other.values).map(|(x, y)| x.max(*y)).collect())
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.values.len() != n {
            return Err(Error::MeshMismatch { expected: n, found: self.values.len() });
        }
        Ok(())
    }
}

impl From<Vec<f64>> for GridFunction {
    fn from(values: Vec<f64>) -> Self {
        GridFunction::new(values)
    }
}
