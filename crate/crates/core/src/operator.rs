//! The spectral fractional Laplacian `(−Δ)^s` and the shifted operator
//! `A = (−Δ)^s + λI`.
//!
//! Every application goes through the eigenbasis: analyze, scale each
//! coefficient by `λ_k^s + λ`, synthesize. The dense matrix of the unshifted
//! power is assembled at most once per `(basis, s)` and shared by every
//! shifted copy created through [`FracOperator::with_shift`].

use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{check_order, Error, Result};
use crate::grid::{dot, GridFunction};
use crate::spectral::EigenBasis;

pub const DEFAULT_DENSE_CAP: usize = 4096;

#[derive(Debug, Default)]
struct DensePower {
    matrix: OnceLock<DMatrix<f64>>,
}

#[derive(Debug, Clone)]
pub struct FracOperator {
    basis: Arc<EigenBasis>,
    s: f64,
    shift: f64,
    /// `λ_k^s` per mode.
    powers: Arc<Vec<f64>>,
    dense: Arc<DensePower>,
    dense_cap: usize,
}

impl FracOperator {
    pub fn new(basis: Arc<EigenBasis>, s: f64, shift: f64) -> Result<Self> {
        check_order(s)?;
        if !(shift.is_finite() && shift >= 0.0) {
            return Err(Error::param("shift", shift, "shift must be finite and nonnegative"));
        }
        let powers = basis.eigenvalues().iter().map(|l| l.powf(s)).collect();
        Ok(FracOperator {
            basis,
            s,
            shift,
            powers: Arc::new(powers),
            dense: Arc::default(),
            dense_cap: DEFAULT_DENSE_CAP,
        })
    }

    /// The unshifted power `(−Δ)^s`.
    pub fn power(basis: Arc<EigenBasis>, s: f64) -> Result<Self> {
        Self::new(basis, s, 0.0)
    }

    /// Same basis and order with a different shift; shares the dense cache.
    pub fn with_shift(&self, shift: f64) -> Result<Self> {
        if !(shift.is_finite() && shift >= 0.0) {
            return Err(Error::param("shift", shift, "shift must be finite and nonnegative"));
        }
        Ok(FracOperator {
            shift,
            ..self.clone()
        })
    }

    pub fn with_dense_cap(mut self, cap: usize) -> Self {
        self.dense_cap = cap;
        self
    }

    pub fn basis(&self) -> &Arc<EigenBasis> {
        &self.basis
    }

    pub fn order(&self) -> f64 {
        self.s
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Symbol `λ_k^s + shift` per mode.
    pub fn symbol(&self) -> impl Iterator<Item = f64> + '_ {
        self.powers.iter().map(move |p| p + self.shift)
    }

    /// Smallest eigenvalue of `A`.
    pub fn min_eigenvalue(&self) -> f64 {
        self.powers[0] + self.shift
    }

    /// True when both operators act on the same grid with the same order and shift.
    pub fn same_as(&self, other: &FracOperator) -> bool {
        self.basis.domain() == other.basis.domain()
            && self.s == other.s
            && self.shift == other.shift
    }

    pub(crate) fn apply_raw(&self, v: &[f64]) -> Vec<f64> {
        let mut c = self.basis.analyze(v);
        for (ck, m) in c.iter_mut().zip(self.symbol()) {
            *ck *= m;
        }
        self.basis.synthesize(&c)
    }

    pub(crate) fn solve_raw(&self, f: &[f64]) -> Vec<f64> {
        let mut c = self.basis.analyze(f);
        for (ck, m) in c.iter_mut().zip(self.symbol()) {
            *ck /= m;
        }
        self.basis.synthesize(&c)
    }

    pub fn apply(&self, v: &GridFunction) -> Result<GridFunction> {
        self.basis.check(v)?;
        Ok(GridFunction::from_raw(*v.domain(), self.apply_raw(v.values())))
    }

    /// Unique `u` with `A u = f`, by diagonal division in spectral space.
    pub fn solve(&self, f: &GridFunction) -> Result<GridFunction> {
        self.basis.check(f)?;
        Ok(GridFunction::from_raw(*f.domain(), self.solve_raw(f.values())))
    }

    /// Quadratic form `⟨A v, v⟩ = h vᵀ A v`.
    pub fn energy(&self, v: &GridFunction) -> Result<f64> {
        self.basis.check(v)?;
        Ok(self.energy_raw(v.values()))
    }

    pub(crate) fn energy_raw(&self, v: &[f64]) -> f64 {
        let c = self.basis.analyze(v);
        c.iter().zip(self.symbol()).map(|(ck, m)| m * ck * ck).sum()
    }

    fn check_cap(&self) -> Result<()> {
        let n = self.len();
        if n > self.dense_cap {
            Err(Error::CapExceeded {
                n,
                cap: self.dense_cap,
            })
        } else {
            Ok(())
        }
    }

    /// `Φ diag(λ_k^s) Φᵀ h` without symmetrization.
    pub fn assemble_power_unsymmetrized(&self) -> Result<DMatrix<f64>> {
        self.check_cap()?;
        let phi = self.basis.vectors();
        let mut scaled = phi.clone();
        for (k, p) in self.powers.iter().enumerate() {
            scaled.column_mut(k).scale_mut(*p * self.basis.weight());
        }
        Ok(scaled * phi.transpose())
    }

    /// Memoized, symmetrized dense matrix of the unshifted power `(−Δ)^s`.
    pub fn power_matrix(&self) -> Result<&DMatrix<f64>> {
        if let Some(m) = self.dense.matrix.get() {
            return Ok(m);
        }
        let raw = self.assemble_power_unsymmetrized()?;
        let sym = (&raw + raw.transpose()) * 0.5;
        Ok(self.dense.matrix.get_or_init(|| sym))
    }

    /// Dense symmetric `A = (−Δ)^s + shift·I`.
    pub fn assemble_dense(&self) -> Result<DMatrix<f64>> {
        let mut a = self.power_matrix()?.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += self.shift;
        }
        Ok(a)
    }

    /// Sign structure of the dense matrix plus a randomized check of
    /// `⟨A u₊, u₋⟩ ≤ 0`.
    pub fn sign_structure_report<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        trials: usize,
    ) -> Result<SignStructureReport> {
        let b = self.power_matrix()?;
        let n = b.nrows();
        let mut max_off = f64::NEG_INFINITY;
        let mut min_diag = f64::INFINITY;
        let mut norm_inf: f64 = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                let a = b[(i, j)] + if i == j { self.shift } else { 0.0 };
                row += a.abs();
                if i == j {
                    min_diag = min_diag.min(a);
                } else {
                    max_off = max_off.max(a);
                }
            }
            norm_inf = norm_inf.max(row);
        }
        let mut max_bilinear = f64::NEG_INFINITY;
        for _ in 0..trials {
            let u: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let plus: Vec<f64> = u.iter().map(|x| x.max(0.0)).collect();
            let minus: Vec<f64> = u.iter().map(|x| (-x).max(0.0)).collect();
            let a_plus = self.apply_raw(&plus);
            max_bilinear = max_bilinear.max(self.basis.weight() * dot(&a_plus, &minus));
        }
        Ok(SignStructureReport {
            max_off_diagonal: max_off,
            min_diagonal: min_diag,
            norm_inf,
            max_bilinear: if trials == 0 { 0.0 } else { max_bilinear },
            trials,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SignStructureReport {
    pub max_off_diagonal: f64,
    pub min_diagonal: f64,
    /// Row-sum norm `‖A‖∞`.
    pub norm_inf: f64,
    /// Largest sampled `⟨A u₊, u₋⟩`.
    pub max_bilinear: f64,
    pub trials: usize,
}

impl SignStructureReport {
    /// Off-diagonals nonpositive up to `rel_tol · ‖A‖∞`, bilinear form up to `bilinear_tol`.
    pub fn holds(&self, rel_tol: f64, bilinear_tol: f64) -> bool {
        self.max_off_diagonal <= rel_tol * self.norm_inf && self.max_bilinear <= bilinear_tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DomainSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn op(n: usize, s: f64, shift: f64) -> FracOperator {
        let b = Arc::new(EigenBasis::build(DomainSpec::interval(1.0, n).unwrap()).unwrap());
        FracOperator::new(b, s, shift).unwrap()
    }

    #[test]
    fn eigenfunction_scales_by_power() {
        let a = op(8, 0.3, 0.0);
        let phi = a.basis().mode(0);
        let out = a.apply(&phi).unwrap();
        let l = a.basis().eigenvalues()[0].powf(0.3);
        for (o, p) in out.values().iter().zip(phi.values()) {
            assert!((o - l * p).abs() < 1e-12);
        }
        let u = a.solve(&phi).unwrap();
        for (o, p) in u.values().iter().zip(phi.values()) {
            assert!((o - p / l).abs() < 1e-12);
        }
    }

    #[test]
    fn near_one_matches_finite_differences() {
        let a = op(16, 0.999, 0.0);
        for k in 0..16 {
            let phi = a.basis().mode(k);
            let lk = a.basis().eigenvalues()[k];
            let lap = a.basis().domain().neg_laplacian(phi.values());
            let out = a.apply(&phi).unwrap();
            for (o, l) in out.values().iter().zip(&lap) {
                assert!((o - l).abs() <= 1e-2 * lk);
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let b = Arc::new(EigenBasis::build(DomainSpec::interval(1.0, 4).unwrap()).unwrap());
        assert!(FracOperator::new(b.clone(), 1.0, 0.0).is_err());
        assert!(FracOperator::new(b.clone(), 0.5, -1.0).is_err());
        let a = FracOperator::new(b, 0.5, 0.0).unwrap();
        let other = GridFunction::zeros(DomainSpec::interval(1.0, 5).unwrap());
        assert!(a.apply(&other).is_err());
        assert!(a.solve(&other).is_err());
    }

    #[test]
    fn cap_is_enforced() {
        let a = op(8, 0.5, 0.0).with_dense_cap(4);
        assert!(matches!(a.assemble_dense(), Err(Error::CapExceeded { n: 8, cap: 4 })));
    }

    #[test]
    fn shifted_copies_share_the_cache() {
        let a = op(6, 0.5, 0.0);
        let m0 = a.power_matrix().unwrap() as *const _;
        let b = a.with_shift(2.0).unwrap();
        assert_eq!(b.power_matrix().unwrap() as *const _, m0);
        let d = b.assemble_dense().unwrap();
        assert!((d[(0, 0)] - a.power_matrix().unwrap()[(0, 0)] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn nonnegative_input_has_zero_bilinear() {
        let a = op(16, 0.7, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rep = a.sign_structure_report(&mut rng, 100).unwrap();
        assert!(rep.max_off_diagonal <= 1e-12, "{rep:?}");
        assert!(rep.max_bilinear <= 1e-10);
        assert!(rep.min_diagonal > 0.0);

        let u = GridFunction::constant(*a.basis().domain(), 1.0);
        let plus = u.positive_part();
        let minus = u.negative_part();
        assert_eq!(a.apply(&plus).unwrap().l2_dot(&minus).unwrap(), 0.0);
    }
}
