//! Box domains, interior node layout and sampled grid functions.
//!
//! Nodes are the interior points of a uniform grid on `[0, L_0] x [0, L_1]`
//! (or an interval). Boundary values are implicitly zero. Flat indices are
//! lexicographic with the first axis slowest: `idx = i_0 * n_1 + i_1`.

use std::ops::{Add, Mul, Sub};

use serde::Serialize;

use crate::error::{Error, Result};

/// Interval or rectangle with a uniform interior grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DomainSpec {
    dim: usize,
    lengths: [f64; 2],
    cells: [usize; 2],
}

impl DomainSpec {
    pub fn new(lengths: &[f64], cells: &[usize]) -> Result<Self> {
        let dim = lengths.len();
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidDomain(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        if cells.len() != dim {
            return Err(Error::InvalidDomain(format!(
                "{dim} lengths but {} node counts",
                cells.len()
            )));
        }
        let mut spec = DomainSpec {
            dim,
            lengths: [1.0; 2],
            cells: [1; 2],
        };
        for axis in 0..dim {
            let (l, n) = (lengths[axis], cells[axis]);
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidDomain(format!(
                    "length along axis {axis} must be positive, got {l}"
                )));
            }
            if n < 2 {
                return Err(Error::InvalidDomain(format!(
                    "need at least 2 interior nodes along axis {axis}, got {n}"
                )));
            }
            spec.lengths[axis] = l;
            spec.cells[axis] = n;
        }
        Ok(spec)
    }

    pub fn interval(length: f64, nodes: usize) -> Result<Self> {
        Self::new(&[length], &[nodes])
    }

    pub fn rectangle(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::new(&[lx, ly], &[nx, ny])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths[..self.dim]
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells[..self.dim]
    }

    /// Total number of interior nodes.
    pub fn len(&self) -> usize {
        self.cells().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing `L / (n + 1)` along `axis`.
    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / (self.cells[axis] + 1) as f64
    }

    /// Cell volume, used as the uniform quadrature weight.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    /// Per-axis (1-based) grid indices of a flat node index.
    pub fn multi_index(&self, idx: usize) -> [usize; 2] {
        match self.dim {
            1 => [idx + 1, 0],
            _ => [idx / self.cells[1] + 1, idx % self.cells[1] + 1],
        }
    }

    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let mi = self.multi_index(idx);
        let mut x = [0.0; 2];
        for axis in 0..self.dim {
            x[axis] = mi[axis] as f64 * self.spacing(axis);
        }
        x
    }

    /// Distance from node `idx` to the nearest boundary face.
    pub fn boundary_distance(&self, idx: usize) -> f64 {
        let x = self.coords(idx);
        (0..self.dim)
            .map(|a| x[a].min(self.lengths[a] - x[a]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Euclidean distance between two nodes.
    pub fn node_distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.coords(i), self.coords(j));
        (0..self.dim)
            .map(|k| (a[k] - b[k]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Applies the second-order finite-difference Dirichlet Laplacian `-Δ_h`.
    pub fn neg_laplacian(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        let stride = [if self.dim == 2 { self.cells[1] } else { 1 }, 1];
        for (idx, o) in out.iter_mut().enumerate() {
            let mi = self.multi_index(idx);
            let mut acc = 0.0;
            for axis in 0..self.dim {
                let h2 = self.spacing(axis).powi(2);
                let lo = if mi[axis] > 1 { v[idx - stride[axis]] } else { 0.0 };
                let hi = if mi[axis] < self.cells[axis] {
                    v[idx + stride[axis]]
                } else {
                    0.0
                };
                acc += (2.0 * v[idx] - lo - hi) / h2;
            }
            *o = acc;
        }
        out
    }
}

/// Real values at the interior nodes of a domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction {
    domain: DomainSpec,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(domain: DomainSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::LengthMismatch {
                expected: domain.len(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "grid function",
                index,
            });
        }
        Ok(GridFunction { domain, values })
    }

    pub fn zeros(domain: DomainSpec) -> Self {
        Self::constant(domain, 0.0)
    }

    pub fn constant(domain: DomainSpec, c: f64) -> Self {
        GridFunction {
            domain,
            values: vec![c; domain.len()],
        }
    }

    /// Samples `f` at node coordinates. Non-finite samples are rejected.
    pub fn from_fn(domain: DomainSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..domain.len())
            .map(|i| f(&domain.coords(i)[..domain.dim()]))
            .collect();
        Self::new(domain, values)
    }

    /// Internal constructor for values produced by finite arithmetic.
    pub(crate) fn from_raw(domain: DomainSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), domain.len());
        GridFunction { domain, values }
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
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

    pub fn ensure_same_domain(&self, other: &GridFunction) -> Result<()> {
        if self.domain == other.domain {
            Ok(())
        } else {
            Err(Error::DomainMismatch("grid functions live on different grids"))
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.domain, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same_domain(other)?;
        Ok(Self::from_raw(
            self.domain,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    /// Entrywise `max(v, 0)`.
    pub fn positive_part(&self) -> Self {
        self.map(|v| v.max(0.0))
    }

    /// Entrywise `-min(v, 0)`, so that `v = v₊ - v₋` with both parts nonnegative.
    pub fn negative_part(&self) -> Self {
        self.map(|v| (-v).max(0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Discrete L² inner product `h · Σ v_i w_i`.
    pub fn l2_dot(&self, other: &GridFunction) -> Result<f64> {
        self.ensure_same_domain(other)?;
        Ok(self.domain.cell_volume() * dot(&self.values, &other.values))
    }

    pub fn l2_norm(&self) -> f64 {
        (self.domain.cell_volume() * dot(&self.values, &self.values)).sqrt()
    }

    /// `true` when `self ≤ other + tol` at every node.
    pub fn le_within(&self, other: &GridFunction, tol: f64) -> Result<bool> {
        self.ensure_same_domain(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .all(|(a, b)| *a <= *b + tol))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Add for &GridFunction {
    type Output = GridFunction;

    /// Panics if the domains differ; use [`GridFunction::zip_map`] for a fallible sum.
    fn add(self, rhs: &GridFunction) -> GridFunction {
        self.zip_map(rhs, |a, b| a + b)
            .expect("adding grid functions on different domains")
    }
}

impl Sub for &GridFunction {
    type Output = GridFunction;

    fn sub(self, rhs: &GridFunction) -> GridFunction {
        self.zip_map(rhs, |a, b| a - b)
            .expect("subtracting grid functions on different domains")
    }
}

impl Mul<f64> for &GridFunction {
    type Output = GridFunction;

    fn mul(self, rhs: f64) -> GridFunction {
        self.map(|v| v * rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_domains() {
        assert!(DomainSpec::interval(1.0, 1).is_err());
        assert!(DomainSpec::interval(0.0, 4).is_err());
        assert!(DomainSpec::new(&[1.0, 1.0], &[4]).is_err());
        assert!(DomainSpec::new(&[1.0, 1.0, 1.0], &[2, 2, 2]).is_err());
    }

    #[test]
    fn lexicographic_layout() {
        let d = DomainSpec::rectangle(2.0, 1.0, 3, 4).unwrap();
        assert_eq!(d.len(), 12);
        assert_eq!(d.multi_index(0), [1, 1]);
        assert_eq!(d.multi_index(5), [2, 2]);
        let x = d.coords(11);
        assert!((x[0] - 1.5).abs() < 1e-15 && (x[1] - 0.8).abs() < 1e-15);
        assert!((d.cell_volume() - 0.5 * 0.2).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_finite_values() {
        let d = DomainSpec::interval(1.0, 3).unwrap();
        let err = GridFunction::new(d, vec![0.0, f64::NAN, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 1, .. }));
        assert!(GridFunction::new(d, vec![0.0; 2]).is_err());
    }

    #[test]
    fn positive_and_negative_parts_recombine() {
        let d = DomainSpec::interval(1.0, 4).unwrap();
        let v = GridFunction::new(d, vec![1.0, -2.0, 0.5, -0.1]).unwrap();
        let back = &v.positive_part() - &v.negative_part();
        assert_eq!(back, v);
        assert!(v.negative_part().min_value() >= 0.0);
    }

    #[test]
    fn laplacian_of_constant_only_sees_the_boundary() {
        let d = DomainSpec::interval(1.0, 4).unwrap();
        let h2 = d.spacing(0).powi(2);
        let out = d.neg_laplacian(&[1.0; 4]);
        assert_eq!(out, vec![1.0 / h2, 0.0, 0.0, 1.0 / h2]);
    }
}
