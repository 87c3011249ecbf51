//! Exact eigenbasis of the finite-difference Dirichlet Laplacian on a box.
//!
//! In 1D with `n` interior nodes and spacing `h = L/(n+1)` the eigenpairs are
//!
//! ```text
//! λ_k = (2/h²)(1 − cos(kπh/L)),   φ_k(x_j) = √(2/L) sin(kπ x_j / L),   k = 1..n
//! ```
//!
//! which are orthonormal under the discrete inner product `h Σ v_j w_j`.
//! Rectangles use tensor products with summed eigenvalues. Because the basis
//! diagonalizes `-Δ_h` exactly, every spectral operator built on top of it is
//! an exact matrix function of the finite-difference Laplacian.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_order, Error, Result};
use crate::grid::{DomainSpec, GridFunction};

#[derive(Debug, Clone)]
pub struct EigenBasis {
    domain: DomainSpec,
    eigenvalues: Vec<f64>,
    /// Column `k` holds `φ_k` sampled at the interior nodes.
    vectors: DMatrix<f64>,
    weight: f64,
}

/// 1D eigenpairs along one axis: eigenvalues and row-major vectors (`k`-th row).
fn axis_pairs(length: f64, n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let h = length / (n + 1) as f64;
    let c = (2.0 / length).sqrt();
    let values = (1..=n)
        .map(|k| 2.0 / (h * h) * (1.0 - (k as f64 * PI / (n + 1) as f64).cos()))
        .collect();
    let vectors = (1..=n)
        .map(|k| {
            (1..=n)
                .map(|j| c * (k as f64 * j as f64 * PI / (n + 1) as f64).sin())
                .collect()
        })
        .collect();
    (values, vectors)
}

impl EigenBasis {
    pub fn build(domain: DomainSpec) -> Result<Self> {
        // Re-validate in case the spec was built by hand elsewhere.
        let domain = DomainSpec::new(domain.lengths(), domain.cells())?;
        let n = domain.len();
        let axes: Vec<_> = (0..domain.dim())
            .map(|a| axis_pairs(domain.lengths()[a], domain.cells()[a]))
            .collect();

        // (eigenvalue, per-axis mode numbers) in enumeration order.
        let mut modes: Vec<(f64, [usize; 2])> = match domain.dim() {
            1 => axes[0].0.iter().enumerate().map(|(k, &l)| (l, [k, 0])).collect(),
            _ => {
                let mut m = Vec::with_capacity(n);
                for (k0, l0) in axes[0].0.iter().enumerate() {
                    for (k1, l1) in axes[1].0.iter().enumerate() {
                        m.push((l0 + l1, [k0, k1]));
                    }
                }
                m
            }
        };
        // Stable: equal eigenvalues keep enumeration order.
        modes.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut vectors = DMatrix::zeros(n, n);
        for (col, (_, k)) in modes.iter().enumerate() {
            for idx in 0..n {
                let mi = domain.multi_index(idx);
                let mut v = axes[0].1[k[0]][mi[0] - 1];
                if domain.dim() == 2 {
                    v *= axes[1].1[k[1]][mi[1] - 1];
                }
                vectors[(idx, col)] = v;
            }
        }

        Ok(EigenBasis {
            domain,
            eigenvalues: modes.iter().map(|m| m.0).collect(),
            vectors,
            weight: domain.cell_volume(),
        })
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// Quadrature weight `h` (cell volume).
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// The `k`-th eigenfunction (0-based, ascending eigenvalue order).
    pub fn mode(&self, k: usize) -> GridFunction {
        GridFunction::from_raw(self.domain, self.vectors.column(k).iter().copied().collect())
    }

    pub(crate) fn check(&self, v: &GridFunction) -> Result<()> {
        if *v.domain() == self.domain {
            Ok(())
        } else {
            Err(Error::DomainMismatch("grid function does not match the basis grid"))
        }
    }

    /// Coefficients `v_k = h φ_kᵀ v` of a raw node vector.
    pub(crate) fn analyze(&self, v: &[f64]) -> Vec<f64> {
        let coeffs = self.vectors.tr_mul(&DVector::from_column_slice(v)) * self.weight;
        coeffs.as_slice().to_vec()
    }

    /// Node values `Σ c_k φ_k` of a raw coefficient vector.
    pub(crate) fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        (&self.vectors * DVector::from_column_slice(coeffs))
            .as_slice()
            .to_vec()
    }

    pub fn to_spectral(&self, v: &GridFunction) -> Result<Vec<f64>> {
        self.check(v)?;
        Ok(self.analyze(v.values()))
    }

    pub fn from_spectral(&self, coeffs: &[f64]) -> Result<GridFunction> {
        if coeffs.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: coeffs.len(),
            });
        }
        GridFunction::new(self.domain, self.synthesize(coeffs))
    }

    pub fn l2_inner(&self, v: &GridFunction, w: &GridFunction) -> Result<f64> {
        self.check(v)?;
        v.l2_dot(w)
    }

    /// `Σ_k λ_k^s v_k²`, the square of `‖(−Δ)^{s/2} v‖_{L²}`.
    pub fn hs_norm_sq(&self, s: f64, v: &GridFunction) -> Result<f64> {
        check_order(s)?;
        let c = self.to_spectral(v)?;
        Ok(c
            .iter()
            .zip(&self.eigenvalues)
            .map(|(ck, lk)| lk.powf(s) * ck * ck)
            .sum())
    }

    pub fn hs_norm(&self, s: f64, v: &GridFunction) -> Result<f64> {
        Ok(self.hs_norm_sq(s, v)?.sqrt())
    }

    /// `‖(−Δ)^s v‖_{L²}`, used as the norm of the graph space of `(−Δ)^s`.
    ///
    /// Unsquared: the quantity is used as a norm, so it must be homogeneous.
    pub fn x2s_norm(&self, s: f64, v: &GridFunction) -> Result<f64> {
        check_order(s)?;
        let c = self.to_spectral(v)?;
        Ok(c
            .iter()
            .zip(&self.eigenvalues)
            .map(|(ck, lk)| (lk.powf(s) * ck).powi(2))
            .sum::<f64>()
            .sqrt())
    }

    /// Squared discrete Gagliardo seminorm
    /// `h² Σ_{i≠j} (v_i − v_j)² / |x_i − x_j|^{d+2s}` over interior nodes.
    ///
    /// Diagnostic only: the boundary jump is not part of the sum, so it is
    /// comparable to, not equal to, [`hs_norm_sq`](Self::hs_norm_sq).
    pub fn gagliardo_seminorm(&self, s: f64, v: &GridFunction) -> Result<f64> {
        check_order(s)?;
        self.check(v)?;
        let d = &self.domain;
        let p = d.dim() as f64 + 2.0 * s;
        let x = v.values();
        let mut sum = 0.0;
        for i in 0..x.len() {
            for j in (i + 1)..x.len() {
                sum += (x[i] - x[j]).powi(2) / d.node_distance(i, j).powf(p);
            }
        }
        Ok(2.0 * self.weight * self.weight * sum)
    }

    /// `h Σ_j v_j² / dist(x_j, ∂Ω)`.
    pub fn lions_magenes_functional(&self, v: &GridFunction) -> Result<f64> {
        self.check(v)?;
        Ok(self.weight
            * v.values()
                .iter()
                .enumerate()
                .map(|(j, vj)| vj * vj / self.domain.boundary_distance(j))
                .sum::<f64>())
    }

    /// Largest `‖(−Δ_h)φ_k − λ_k φ_k‖∞ / λ_k` over all modes.
    pub fn eigen_residual(&self) -> f64 {
        (0..self.len())
            .map(|k| {
                let phi: Vec<f64> = self.vectors.column(k).iter().copied().collect();
                let lap = self.domain.neg_laplacian(&phi);
                let lk = self.eigenvalues[k];
                lap.iter()
                    .zip(&phi)
                    .map(|(a, p)| (a - lk * p).abs())
                    .fold(0.0, f64::max)
                    / lk
            })
            .fold(0.0, f64::max)
    }

    /// Largest entry of `|Φᵀ(hI)Φ − I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.vectors.tr_mul(&self.vectors) * self.weight;
        let n = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - target).abs());
            }
        }
        worst
    }
}
