//! Unilateral obstacle problems for `A = (−Δ)^s + λI`.
//!
//! The discrete problem is the linear complementarity system
//!
//! ```text
//! u ≥ ψ,   A u − f ≥ 0,   (A u − f)(u − ψ) = 0   (componentwise)
//! ```
//!
//! equivalently the minimization of `J(v) = ½⟨Av, v⟩ − ⟨f, v⟩` over
//! `K₀ = {v ≥ ψ}`. Two independent solvers are provided: projected SOR and
//! a primal-dual active-set iteration used as the exactness oracle.

mod active_set;
mod psor;
mod verify;

pub use active_set::solve_vi_active_set;
pub use psor::{solve_vi_psor, solve_vi_psor_from};
pub(crate) use verify::ordering_report;
pub use verify::{
    check_equivalent_conditions, compare_solutions, positive_part_lemmas_check,
    verify_lewy_stampacchia, ComparisonReport, ConditionsReport, LsReport, PositivePartReport,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{dot, GridFunction};
use crate::operator::FracOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Psor,
    ActiveSet,
}

/// Which solver [`solve_vi`] dispatches to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    /// Active set up to `oracle_cap` nodes, projected SOR beyond.
    #[default]
    Auto,
    Psor,
    ActiveSet,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    /// PSOR relaxation factor, in `(0, 2)`.
    pub omega: f64,
    /// PSOR stops once the sup-norm change of a sweep drops below this.
    pub tol: f64,
    /// Acceptance tolerance for residual checks.
    pub residual_tol: f64,
    /// Nodes with `u − ψ ≤ act_tol` are reported as active.
    pub act_tol: f64,
    pub max_iter: usize,
    /// Largest problem the active-set oracle accepts.
    pub oracle_cap: usize,
    /// Sampled directions per condition in [`check_equivalent_conditions`].
    pub trials: usize,
    pub seed: u64,
    pub method: SolverMethod,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            omega: 1.5,
            tol: 1e-10,
            residual_tol: 1e-7,
            act_tol: 1e-8,
            max_iter: 200_000,
            oracle_cap: 512,
            trials: 64,
            seed: 0,
            method: SolverMethod::Auto,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega < 2.0) {
            return Err(Error::param("omega", self.omega, "relaxation must lie in (0, 2)"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::param("tol", self.tol, "tolerance must be positive"));
        }
        if !(self.residual_tol > 0.0) {
            return Err(Error::param("residual_tol", self.residual_tol, "tolerance must be positive"));
        }
        if !(self.act_tol >= 0.0) {
            return Err(Error::param("act_tol", self.act_tol, "tolerance must be nonnegative"));
        }
        if self.max_iter == 0 {
            return Err(Error::param("max_iter", 0.0, "need at least one iteration"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ObstacleProblem {
    op: FracOperator,
    force: GridFunction,
    obstacle: GridFunction,
}

impl ObstacleProblem {
    pub fn new(op: FracOperator, force: GridFunction, obstacle: GridFunction) -> Result<Self> {
        op.basis().check(&force)?;
        op.basis().check(&obstacle)?;
        Ok(ObstacleProblem {
            op,
            force,
            obstacle,
        })
    }

    pub fn op(&self) -> &FracOperator {
        &self.op
    }

    pub fn force(&self) -> &GridFunction {
        &self.force
    }

    pub fn obstacle(&self) -> &GridFunction {
        &self.obstacle
    }

    pub fn len(&self) -> usize {
        self.force.len()
    }

    pub fn is_empty(&self) -> bool {
        self.force.is_empty()
    }

    /// `f̂ = Aψ`.
    pub fn obstacle_force(&self) -> GridFunction {
        GridFunction::from_raw(
            *self.obstacle.domain(),
            self.op.apply_raw(self.obstacle.values()),
        )
    }

    /// Upper Lewy–Stampacchia bound `max(f, Aψ)`.
    pub fn ls_upper_bound(&self) -> GridFunction {
        self.force
            .zip_map(&self.obstacle_force(), f64::max)
            .expect("same domain by construction")
    }

    /// `J(v) = ½⟨Av, v⟩ − ⟨f, v⟩`.
    pub fn energy(&self, v: &[f64]) -> f64 {
        0.5 * self.op.energy_raw(v) - self.weight() * dot(self.force.values(), v)
    }

    /// `Ĵ(v) = ½⟨Av, v⟩ − ⟨Aψ, v⟩`.
    pub fn energy_hat(&self, v: &[f64]) -> f64 {
        0.5 * self.op.energy_raw(v) - self.weight() * dot(self.obstacle_force().values(), v)
    }

    pub(crate) fn weight(&self) -> f64 {
        self.op.basis().weight()
    }
}

/// KKT residual block of a computed solution.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Residuals {
    /// `min(u − ψ)`.
    pub feasibility: f64,
    /// `min(Au − f)`.
    pub dual_feasibility: f64,
    /// `max |(Au − f)(u − ψ)|`.
    pub complementarity: f64,
    /// `max(Au − max(f, Aψ))`.
    pub ls_upper: f64,
}

#[derive(Debug, Clone)]
pub struct VISolution {
    pub u: GridFunction,
    pub au: GridFunction,
    pub active_set: Vec<bool>,
    pub residuals: Residuals,
    pub iterations: usize,
    pub solver: SolverKind,
    pub converged: bool,
}

impl VISolution {
    pub(crate) fn assemble(
        prob: &ObstacleProblem,
        u: Vec<f64>,
        iterations: usize,
        solver: SolverKind,
        converged: bool,
        act_tol: f64,
    ) -> Self {
        let domain = *prob.force.domain();
        let au = prob.op.apply_raw(&u);
        let f = prob.force.values();
        let psi = prob.obstacle.values();
        let upper = prob.ls_upper_bound();

        let mut r = Residuals {
            feasibility: f64::INFINITY,
            dual_feasibility: f64::INFINITY,
            complementarity: 0.0,
            ls_upper: f64::NEG_INFINITY,
        };
        let mut active_set = Vec::with_capacity(u.len());
        for i in 0..u.len() {
            let gap = u[i] - psi[i];
            let dual = au[i] - f[i];
            r.feasibility = r.feasibility.min(gap);
            r.dual_feasibility = r.dual_feasibility.min(dual);
            r.complementarity = r.complementarity.max((gap * dual).abs());
            r.ls_upper = r.ls_upper.max(au[i] - upper.values()[i]);
            active_set.push(gap <= act_tol);
        }
        VISolution {
            u: GridFunction::from_raw(domain, u),
            au: GridFunction::from_raw(domain, au),
            active_set,
            residuals: r,
            iterations,
            solver,
            converged,
        }
    }

    pub fn active_count(&self) -> usize {
        self.active_set.iter().filter(|a| **a).count()
    }

    /// `u ∈ K₀ ∩ K₁` and pointwise complementarity, all within `tol`
    /// (complementarity relative to `1 + ‖Au‖∞`).
    pub fn satisfies_kkt(&self, tol: f64) -> bool {
        let r = &self.residuals;
        r.feasibility >= -tol
            && r.dual_feasibility >= -tol
            && r.complementarity <= tol * (1.0 + self.au.max_abs())
    }
}

/// Solves with the method selected in `cfg`.
pub fn solve_vi(prob: &ObstacleProblem, cfg: &SolverConfig) -> Result<VISolution> {
    match cfg.method {
        SolverMethod::Psor => solve_vi_psor(prob, cfg),
        SolverMethod::ActiveSet => solve_vi_active_set(prob, cfg),
        SolverMethod::Auto if prob.len() <= cfg.oracle_cap => solve_vi_active_set(prob, cfg),
        SolverMethod::Auto => solve_vi_psor(prob, cfg),
    }
}

/// Like [`solve_vi`] but turns a non-converged result into an error.
pub fn solve_vi_strict(prob: &ObstacleProblem, cfg: &SolverConfig) -> Result<VISolution> {
    let sol = solve_vi(prob, cfg)?;
    if sol.converged {
        Ok(sol)
    } else {
        Err(Error::NotConverged {
            iterations: sol.iterations,
            last_change: f64::NAN,
        })
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::grid::DomainSpec;
    use crate::spectral::EigenBasis;

    /// The hat-obstacle instance: n = 16, s = 1/2, f = −10, ψ = max(0, 0.2 − |x − 0.5|).
    pub(crate) fn hat_problem() -> ObstacleProblem {
        let d = DomainSpec::interval(1.0, 16).unwrap();
        let b = Arc::new(EigenBasis::build(d).unwrap());
        let op = FracOperator::new(b, 0.5, 0.0).unwrap();
        let f = GridFunction::constant(d, -10.0);
        let psi = GridFunction::from_fn(d, |x| (0.2 - (x[0] - 0.5).abs()).max(0.0)).unwrap();
        ObstacleProblem::new(op, f, psi).unwrap()
    }

    /// Zero obstacle under a sign-changing force: a proper contact set.
    pub(crate) fn mixed_problem() -> ObstacleProblem {
        let d = DomainSpec::interval(1.0, 24).unwrap();
        let b = Arc::new(EigenBasis::build(d).unwrap());
        let op = FracOperator::new(b, 0.5, 0.0).unwrap();
        let f = GridFunction::from_fn(d, |x| 10.0 * (2.0 * std::f64::consts::PI * x[0]).sin()).unwrap();
        ObstacleProblem::new(op, f, GridFunction::zeros(d)).unwrap()
    }

    #[test]
    fn solvers_agree_on_hat_instance() {
        let prob = hat_problem();
        let cfg = SolverConfig::default();
        let p = solve_vi_psor(&prob, &cfg).unwrap();
        let a = solve_vi_active_set(&prob, &cfg).unwrap();
        assert!(p.converged && a.converged);
        let diff = (&p.u - &a.u).max_abs();
        assert!(diff < 1e-8, "diff {diff}");
        // The downward force pins the solution to the hat.
        assert_eq!(a.active_count(), prob.len());
        assert!(p.satisfies_kkt(1e-7) && a.satisfies_kkt(1e-7));

        let prob = mixed_problem();
        let p = solve_vi_psor(&prob, &cfg).unwrap();
        let a = solve_vi_active_set(&prob, &cfg).unwrap();
        assert!((&p.u - &a.u).max_abs() < 1e-8);
        assert!(a.active_count() > 0 && a.active_count() < prob.len());
        assert!(p.satisfies_kkt(1e-7) && a.satisfies_kkt(1e-7));
    }

    #[test]
    fn zero_obstacle_with_downward_force_gives_zero() {
        let d = DomainSpec::interval(1.0, 12).unwrap();
        let b = Arc::new(EigenBasis::build(d).unwrap());
        let op = FracOperator::new(b, 0.4, 1.0).unwrap();
        let f = GridFunction::from_fn(d, |x| -1.0 - x[0]).unwrap();
        let prob = ObstacleProblem::new(op, f, GridFunction::zeros(d)).unwrap();
        for sol in [
            solve_vi_psor(&prob, &SolverConfig::default()).unwrap(),
            solve_vi_active_set(&prob, &SolverConfig::default()).unwrap(),
        ] {
            assert!(sol.u.max_abs() < 1e-12);
            assert_eq!(sol.active_count(), 12);
        }
    }

    #[test]
    fn inactive_constraint_returns_unconstrained_solve() {
        let d = DomainSpec::interval(1.0, 12).unwrap();
        let b = Arc::new(EigenBasis::build(d).unwrap());
        let op = FracOperator::new(b, 0.6, 0.0).unwrap();
        let f = GridFunction::constant(d, 3.0);
        let free = op.solve(&f).unwrap();
        let psi = free.map(|v| v - 0.05);
        let prob = ObstacleProblem::new(op, f, psi).unwrap();
        for sol in [
            solve_vi_psor(&prob, &SolverConfig::default()).unwrap(),
            solve_vi_active_set(&prob, &SolverConfig::default()).unwrap(),
        ] {
            assert!((&sol.u - &free).max_abs() < 1e-8);
            assert_eq!(sol.active_count(), 0);
        }
    }

    #[test]
    fn obstacle_above_everything_is_the_solution() {
        let d = DomainSpec::interval(1.0, 10).unwrap();
        let b = Arc::new(EigenBasis::build(d).unwrap());
        let op = FracOperator::new(b, 0.5, 0.0).unwrap();
        let f = GridFunction::constant(d, -1.0);
        // ψ = A⁻¹(1) dominates A⁻¹f and Aψ = 1 ≥ f.
        let psi = op.solve(&GridFunction::constant(d, 1.0)).unwrap();
        let prob = ObstacleProblem::new(op, f, psi.clone()).unwrap();
        let sol = solve_vi_active_set(&prob, &SolverConfig::default()).unwrap();
        assert!((&sol.u - &psi).max_abs() < 1e-14);
        assert_eq!(sol.active_count(), 10);
    }

    #[test]
    fn config_validation() {
        let prob = hat_problem();
        let cfg = SolverConfig {
            omega: 2.0,
            ..Default::default()
        };
        assert!(solve_vi_psor(&prob, &cfg).is_err());
        let cfg = SolverConfig {
            max_iter: 0,
            ..Default::default()
        };
        assert!(solve_vi_psor(&prob, &cfg).is_err());
    }

    #[test]
    fn non_convergence_is_flagged() {
        let prob = mixed_problem();
        let cfg = SolverConfig {
            max_iter: 2,
            ..Default::default()
        };
        let sol = solve_vi_psor(&prob, &cfg).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 2);
    }

    #[test]
    fn oracle_cap_is_enforced() {
        let prob = hat_problem();
        let cfg = SolverConfig {
            oracle_cap: 8,
            ..Default::default()
        };
        assert!(matches!(
            solve_vi_active_set(&prob, &cfg),
            Err(Error::CapExceeded { n: 16, cap: 8 })
        ));
        // Auto falls back to PSOR.
        assert_eq!(solve_vi(&prob, &cfg).unwrap().solver, SolverKind::Psor);
    }
}
