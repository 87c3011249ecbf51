use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{dot, GridFunction};
use crate::obstacle::{
    solve_vi_active_set, solve_vi_psor, ComparisonReport, ObstacleProblem, SolverConfig,
};
use crate::operator::FracOperator;

use super::verify_ordering;
use super::{average_source, euler_step, evolve_with_sources, EvolutionState, Source, TimeGrid};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StabilityReport {
    /// `Σ τ‖Δw/τ‖² + max_ℓ ‖w_ℓ‖²_B` for `w = u₁ − u₂`.
    pub lhs_sq: f64,
    /// `‖w₀‖²_B + Σ τ‖f₁,k − f₂,k‖²`.
    pub rhs_sq: f64,
    /// `lhs_sq / (2 rhs_sq)`; at most one when the estimate holds.
    pub ratio: f64,
}

impl StabilityReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.ratio <= 1.0 + tol
    }
}

fn same_run_setup(a: &EvolutionState, b: &EvolutionState) -> Result<()> {
    if !a.op.same_as(&b.op) {
        return Err(Error::Precondition("runs use different operators".to_string()));
    }
    if a.grid != b.grid {
        return Err(Error::Precondition("runs use different time grids".to_string()));
    }
    if a.steps() != b.steps() {
        return Err(Error::Precondition("runs have different lengths".to_string()));
    }
    Ok(())
}

/// Both sides of the `L²`-in-time / `H^s`-in-space stability estimate for
/// two runs on the same grid, with constant `C² = 2`.
pub fn stability_check(run1: &EvolutionState, run2: &EvolutionState) -> Result<StabilityReport> {
    same_run_setup(run1, run2)?;
    let op = &run1.op;
    let w: Vec<GridFunction> = run1
        .snapshots
        .iter()
        .zip(&run2.snapshots)
        .map(|(a, b)| a - b)
        .collect();
    let mut lhs_rate = 0.0;
    let mut lhs_max = op.energy_raw(w[0].values());
    let mut rhs = lhs_max;
    for (k, &tau) in run1.grid.taus().iter().enumerate() {
        let rate = (&w[k + 1] - &w[k]).l2_norm() / tau;
        lhs_rate += tau * rate * rate;
        lhs_max = lhs_max.max(op.energy_raw(w[k + 1].values()));
        let df = (&run1.sources[k] - &run2.sources[k]).l2_norm();
        rhs += tau * df * df;
    }
    let lhs_sq = lhs_rate + lhs_max;
    let ratio = if rhs > 0.0 {
        lhs_sq / (2.0 * rhs)
    } else if lhs_sq == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(StabilityReport {
        lhs_sq,
        rhs_sq: rhs,
        ratio,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChainRuleReport {
    /// `max_k |Δ‖u‖²_B − ⟨u_k − u_{k−1}, B(u_k + u_{k−1})⟩|`.
    pub polarization_defect: f64,
    /// Scale for the defect: `1 + max_k ‖u_k‖²_B`.
    pub energy_scale: f64,
    /// `max_k |Δ‖u‖²_B/τ − 2⟨Δu/τ, B u_k⟩|`; first order in `τ`.
    pub deviation: f64,
    /// The same with `B` evaluated at the midpoint; roundoff only.
    pub midpoint_deviation: f64,
    pub tau_max: f64,
    /// `deviation / tau_max`.
    pub c_run: f64,
}

impl ChainRuleReport {
    pub fn polarization_holds(&self, tol: f64) -> bool {
        self.polarization_defect <= tol * self.energy_scale
    }
}

/// Compares the discrete derivative of `t ↦ ‖u(t)‖²_B` against
/// `2⟨∂ₜu, B u⟩` step by step.
pub fn chain_rule_check(state: &EvolutionState) -> ChainRuleReport {
    let op = &state.op;
    let h = op.basis().weight();
    let mut rep = ChainRuleReport {
        polarization_defect: 0.0,
        energy_scale: 1.0 + state.hs_energy.iter().copied().fold(0.0, f64::max),
        deviation: 0.0,
        midpoint_deviation: 0.0,
        tau_max: state.grid.tau_max(),
        c_run: 0.0,
    };
    for (k, &tau) in state.grid.taus().iter().enumerate().take(state.steps()) {
        let (a, b) = (state.snapshots[k].values(), state.snapshots[k + 1].values());
        let du: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
        let sum: Vec<f64> = b.iter().zip(a).map(|(x, y)| x + y).collect();
        let d_energy = state.hs_energy[k + 1] - state.hs_energy[k];
        let polar = h * dot(&du, &op.apply_raw(&sum));
        rep.polarization_defect = rep.polarization_defect.max((d_energy - polar).abs());
        rep.midpoint_deviation = rep.midpoint_deviation.max((d_energy - polar).abs() / tau);
        let endpoint = 2.0 * h * dot(&du, &op.apply_raw(b)) / tau;
        rep.deviation = rep.deviation.max((d_energy / tau - endpoint).abs());
    }
    rep.c_run = if rep.tau_max > 0.0 {
        rep.deviation / rep.tau_max
    } else {
        0.0
    };
    rep
}

/// Runs two evolutions with ordered data and checks `u₁,k ≤ u₂,k + tol`.
///
/// The force ordering is checked on the step averages.
#[allow(clippy::too_many_arguments)]
pub fn comparison_evolution(
    u01: &GridFunction,
    src1: &Source,
    u02: &GridFunction,
    src2: &Source,
    grid: &TimeGrid,
    op: &FracOperator,
    cfg: &SolverConfig,
    tol: f64,
) -> Result<ComparisonReport> {
    if !u01.le_within(u02, 0.0)? {
        return Err(Error::Precondition("initial data are not ordered".to_string()));
    }
    let f1 = average_source(src1, grid)?;
    let f2 = average_source(src2, grid)?;
    for (k, (a, b)) in f1.iter().zip(&f2).enumerate() {
        if !a.le_within(b, 0.0)? {
            return Err(Error::Precondition(format!("sources are not ordered at step {}", k + 1)));
        }
    }
    let r1 = evolve_with_sources(u01, f1, grid, op, cfg)?;
    let r2 = evolve_with_sources(u02, f2, grid, op, cfg)?;
    Ok(verify_ordering(&r1, &r2, tol))
}

/// Largest excess `max(f_k − f*)` of the step sources over a bound `f*`.
pub fn force_bound_check(sources: &[GridFunction], f_star: &GridFunction) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for f in sources {
        worst = worst.max((f - f_star).max_value());
        f.ensure_same_domain(f_star)?;
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AsymptoticConfig {
    pub horizon: f64,
    pub tau: f64,
    /// Stop once `‖u_k − u_{k−1}‖∞ / τ` drops below this.
    pub stop_tol: f64,
    /// Acceptance bound on `‖u_final − ū‖` in the energy norm.
    pub asymp_tol: f64,
    /// Slack for `u_final ≥ u₀` and `B u_final ≥ f`.
    pub order_tol: f64,
}

impl Default for AsymptoticConfig {
    fn default() -> Self {
        AsymptoticConfig {
            horizon: 100.0,
            tau: 0.1,
            stop_tol: 1e-8,
            asymp_tol: 1e-3,
            order_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticReport {
    pub steps: usize,
    pub time: f64,
    /// Stopped on the rate criterion rather than the horizon.
    pub stationary: bool,
    pub last_rate: f64,
    /// `⟨B(u − ū), u − ū⟩^{1/2}`.
    pub distance: f64,
    /// `min(u_final − u₀)`.
    pub above_initial: f64,
    /// `min(B u_final − f)`.
    pub dual_margin: f64,
    pub asymp_tol: f64,
    pub order_tol: f64,
    #[serde(skip)]
    pub u_final: GridFunction,
    #[serde(skip)]
    pub stationary_solution: GridFunction,
}

impl AsymptoticReport {
    /// Stationary, close to the obstacle solution, above `u₀`, and
    /// supersolution within tolerance.
    pub fn holds(&self) -> bool {
        self.stationary
            && self.distance <= self.asymp_tol
            && self.above_initial >= -self.order_tol
            && self.dual_margin >= -self.order_tol
    }
}

/// Evolves with a time-constant force until stationary and compares against
/// the obstacle problem `min ½⟨Bv, v⟩ − ⟨f, v⟩` over `v ≥ u₀`.
pub fn asymptotic_limit(
    u0: &GridFunction,
    f_inf: &GridFunction,
    op: &FracOperator,
    acfg: &AsymptoticConfig,
    cfg: &SolverConfig,
) -> Result<AsymptoticReport> {
    if !(acfg.tau > 0.0 && acfg.horizon >= acfg.tau) {
        return Err(Error::param("tau", acfg.tau, "need 0 < tau <= horizon"));
    }
    op.basis().check(u0)?;
    op.basis().check(f_inf)?;
    let max_steps = (acfg.horizon / acfg.tau).round() as usize;
    let mut u = u0.clone();
    let mut steps = 0;
    let mut rate = f64::INFINITY;
    while steps < max_steps {
        let out = euler_step(&u, f_inf, acfg.tau, op, cfg).map_err(|e| Error::NotConverged {
            iterations: steps + 1,
            last_change: match e {
                Error::NotConverged { last_change, .. } => last_change,
                _ => f64::NAN,
            },
        })?;
        steps += 1;
        rate = (&out.u - &u).max_abs() / acfg.tau;
        u = out.u;
        if rate < acfg.stop_tol {
            break;
        }
    }

    let prob = ObstacleProblem::new(op.clone(), f_inf.clone(), u0.clone())?;
    let sol = if prob.len() <= cfg.oracle_cap {
        solve_vi_active_set(&prob, cfg)?
    } else {
        solve_vi_psor(&prob, cfg)?
    };
    let diff = &u - &sol.u;
    let bu = op.apply(&u)?;
    Ok(AsymptoticReport {
        steps,
        time: steps as f64 * acfg.tau,
        stationary: rate < acfg.stop_tol,
        last_rate: rate,
        distance: op.energy(&diff)?.max(0.0).sqrt(),
        above_initial: (&u - u0).min_value(),
        dual_margin: (&bu - f_inf).min_value(),
        asymp_tol: acfg.asymp_tol,
        order_tol: acfg.order_tol,
        u_final: u,
        stationary_solution: sol.u,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct InterpolantReport {
    /// `max_k ‖u_k − u_{k−1}‖_{L²}`, the sup-in-time gap between the linear
    /// and piecewise-constant interpolants.
    pub max_gap: f64,
    /// `sqrt(‖u₀‖²_B + Σ τ‖f_k‖²)`.
    pub constant: f64,
    pub tau_max: f64,
    /// `constant · tau_max^{1/2}`.
    pub envelope: f64,
}

impl InterpolantReport {
    pub fn holds(&self) -> bool {
        self.max_gap <= self.envelope * (1.0 + 1e-12)
    }
}

pub fn interpolant_gap(state: &EvolutionState) -> InterpolantReport {
    let max_gap = state
        .snapshots
        .windows(2)
        .map(|w| (&w[1] - &w[0]).l2_norm())
        .fold(0.0, f64::max);
    let constant = state.energy_constant();
    let tau_max = state.grid.tau_max();
    InterpolantReport {
        max_gap,
        constant,
        tau_max,
        envelope: constant * tau_max.sqrt(),
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TwoGridReport {
    /// `max_k ‖u^τ_k − u^{τ/2}_{2k}‖_{L²}`.
    pub max_gap: f64,
    /// The coarse run's interpolant envelope.
    pub envelope: f64,
}

impl TwoGridReport {
    pub fn holds(&self) -> bool {
        self.max_gap <= self.envelope
    }
}

/// Compares a run with its run on the once-refined grid at the coarse times.
pub fn two_grid_gap(coarse: &EvolutionState, fine: &EvolutionState) -> Result<TwoGridReport> {
    if !coarse.op.same_as(&fine.op) {
        return Err(Error::Precondition("runs use different operators".to_string()));
    }
    let expected = coarse.grid.refine();
    let matches = expected.times().len() == fine.grid.times().len()
        && expected
            .times()
            .iter()
            .zip(fine.grid.times())
            .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    if !matches || fine.steps() != 2 * coarse.steps() {
        return Err(Error::Precondition(
            "fine run is not on the refined coarse grid".to_string(),
        ));
    }
    let max_gap = (0..coarse.snapshots.len())
        .map(|k| (&coarse.snapshots[k] - &fine.snapshots[2 * k]).l2_norm())
        .fold(0.0, f64::max);
    Ok(TwoGridReport {
        max_gap,
        envelope: interpolant_gap(coarse).envelope,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::evolution::evolve;
    use crate::grid::DomainSpec;
    use crate::spectral::EigenBasis;

    fn op(n: usize, s: f64) -> FracOperator {
        let b = Arc::new(EigenBasis::build(DomainSpec::interval(1.0, n).unwrap()).unwrap());
        FracOperator::new(b, s, 0.0).unwrap()
    }

    fn run(op: &FracOperator, u0: &GridFunction, src: &Source, grid: &TimeGrid) -> EvolutionState {
        evolve(u0, src, grid, op, &SolverConfig::default()).unwrap()
    }

    #[test]
    fn identical_runs_are_trivially_stable() {
        let a = op(12, 0.5);
        let d = *a.basis().domain();
        let grid = TimeGrid::uniform(1.0, 10).unwrap();
        let src = Source::Constant(GridFunction::constant(d, 1.0));
        let r = run(&a, &GridFunction::zeros(d), &src, &grid);
        let rep = stability_check(&r, &r).unwrap();
        assert_eq!(rep.lhs_sq, 0.0);
        assert_eq!(rep.ratio, 0.0);
    }

    #[test]
    fn perturbed_initial_data_respect_the_bound() {
        let a = op(16, 0.5);
        let d = *a.basis().domain();
        let grid = TimeGrid::uniform(1.0, 20).unwrap();
        let src = Source::analytic(d, |x, _| 4.0 * (std::f64::consts::PI * x[0]).sin() - 1.0);
        let u0 = GridFunction::zeros(d);
        let base = run(&a, &u0, &src, &grid);
        let eps = 1e-2;
        let bumped = &u0 + &(&a.basis().mode(0) * eps);
        let pert = run(&a, &bumped, &src, &grid);
        let rep = stability_check(&pert, &base).unwrap();
        assert!(rep.holds(1e-6), "{rep:?}");
        let lam = a.basis().eigenvalues()[0];
        assert!(rep.lhs_sq.sqrt() <= 2f64.sqrt() * eps * lam.powf(0.25) * (1.0 + 1e-9));
    }

    #[test]
    fn stationary_run_has_no_chain_rule_deviation() {
        let a = op(8, 0.5);
        let d = *a.basis().domain();
        let u0 = a.basis().mode(0);
        let grid = TimeGrid::uniform(1.0, 5).unwrap();
        let r = run(&a, &u0, &Source::Constant(GridFunction::constant(d, -1.0)), &grid);
        let rep = chain_rule_check(&r);
        assert_eq!(rep.deviation, 0.0);
        assert!(rep.polarization_holds(1e-12));
    }

    #[test]
    fn chain_rule_deviation_is_first_order() {
        let a = op(16, 0.5);
        let d = *a.basis().domain();
        let src = Source::analytic(d, |x, _| 5.0 * (std::f64::consts::PI * x[0]).sin());
        let u0 = GridFunction::zeros(d);
        let coarse = run(&a, &u0, &src, &TimeGrid::uniform(1.0, 20).unwrap());
        let fine = run(&a, &u0, &src, &TimeGrid::uniform(1.0, 40).unwrap());
        let (c, f) = (chain_rule_check(&coarse), chain_rule_check(&fine));
        let ratio = f.deviation / c.deviation;
        assert!((0.3..=0.7).contains(&ratio), "ratio {ratio}");
        assert!(c.polarization_holds(1e-9) && f.polarization_holds(1e-9));
    }

    #[test]
    fn ordered_runs_stay_ordered() {
        let a = op(12, 0.4);
        let d = *a.basis().domain();
        let grid = TimeGrid::uniform(1.0, 10).unwrap();
        let f1 = GridFunction::from_fn(d, |x| 2.0 * x[0] - 1.0).unwrap();
        let s1 = Source::Constant(f1.clone());
        let s2 = Source::Constant(f1.map(|v| v + 1.0));
        let u0 = GridFunction::zeros(d);
        let rep = comparison_evolution(&u0, &s1, &u0, &s2, &grid, &a, &SolverConfig::default(), 1e-7).unwrap();
        assert!(rep.holds());
        assert!(rep.max_excess <= 0.0 && rep.max_gap > 0.0);
        let same = comparison_evolution(&u0, &s1, &u0, &s1, &grid, &a, &SolverConfig::default(), 1e-7).unwrap();
        assert_eq!(same.max_excess, 0.0);
        assert!(comparison_evolution(&u0, &s2, &u0, &s1, &grid, &a, &SolverConfig::default(), 1e-7).is_err());
    }

    #[test]
    fn nonpositive_force_from_rest_has_zero_limit() {
        let a = op(8, 0.5);
        let d = *a.basis().domain();
        let f = GridFunction::constant(d, -1.0);
        let rep = asymptotic_limit(&GridFunction::zeros(d), &f, &a, &AsymptoticConfig::default(), &SolverConfig::default())
            .unwrap();
        assert!(rep.holds() && rep.steps == 1 && rep.distance == 0.0);
    }

    #[test]
    fn supersolution_start_is_already_stationary() {
        let a = op(16, 0.5);
        let d = *a.basis().domain();
        let f = GridFunction::from_fn(d, |x| 3.0 * x[0]).unwrap();
        let u0 = a.solve(&f.map(|v| v + 0.5)).unwrap();
        let rep = asymptotic_limit(&u0, &f, &a, &AsymptoticConfig::default(), &SolverConfig::default()).unwrap();
        assert!(rep.holds(), "{rep:?}");
        assert_eq!(rep.steps, 1);
        assert!((&rep.u_final - &u0).max_abs() == 0.0);
    }

    #[test]
    fn interpolant_and_two_grid_envelopes() {
        let a = op(16, 0.5);
        let d = *a.basis().domain();
        let src = Source::analytic(d, |x, t| 3.0 * (std::f64::consts::PI * x[0]).sin() * (1.0 + t));
        let u0 = GridFunction::zeros(d);
        let grid = TimeGrid::uniform(1.0, 16).unwrap();
        let coarse = run(&a, &u0, &src, &grid);
        let fine = run(&a, &u0, &src, &grid.refine());
        assert!(interpolant_gap(&coarse).holds());
        assert!(interpolant_gap(&fine).holds());
        let tg = two_grid_gap(&coarse, &fine).unwrap();
        assert!(tg.holds(), "{tg:?}");
        assert!(two_grid_gap(&coarse, &coarse).is_err());
    }

    #[test]
    fn force_bound_excess() {
        let d = DomainSpec::interval(1.0, 4).unwrap();
        let fs = vec![GridFunction::constant(d, 1.0), GridFunction::constant(d, 2.0)];
        let star = GridFunction::constant(d, 1.5);
        assert!((force_bound_check(&fs, &star).unwrap() - 0.5).abs() < 1e-15);
    }
}
