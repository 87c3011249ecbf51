//! Implicit Euler integration of the unidirectional diffusion equation
//!
//! ```text
//! ∂ₜu = [−B u + f]₊,   u(0) = u₀,
//! ```
//!
//! with `B` a [`FracOperator`] (normally the unshifted `(−Δ)^s`). Step `k`
//! minimizes `½τ‖(v − u_{k−1})/τ‖² + ½⟨Bv, v⟩ − ⟨f_k, v⟩` over
//! `v ≥ u_{k−1}`, an obstacle problem for `B + 1/τ` with force
//! `f_k + u_{k−1}/τ` and obstacle `u_{k−1}`.

mod checks;
mod source;

pub use checks::{
    asymptotic_limit, chain_rule_check, comparison_evolution, force_bound_check, interpolant_gap,
    stability_check, two_grid_gap, AsymptoticConfig, AsymptoticReport, ChainRuleReport,
    InterpolantReport, StabilityReport, TwoGridReport,
};
pub use source::{average_source, AnalyticFn, Source};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{dot, GridFunction};
use crate::obstacle::{ordering_report, solve_vi, ComparisonReport, ObstacleProblem, SolverConfig};
use crate::operator::FracOperator;

/// `0 = t₀ < t₁ < … < t_m = T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeGrid {
    t: Vec<f64>,
    tau: Vec<f64>,
}

impl TimeGrid {
    pub fn new(t: Vec<f64>) -> Result<Self> {
        if t.len() < 2 {
            return Err(Error::InvalidTimeGrid("need at least one step".to_string()));
        }
        if t[0] != 0.0 {
            return Err(Error::InvalidTimeGrid(format!("grid must start at 0, got {}", t[0])));
        }
        if t.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidTimeGrid("non-finite time".to_string()));
        }
        let tau: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
        if let Some(k) = tau.iter().position(|d| !(*d > 0.0)) {
            return Err(Error::InvalidTimeGrid(format!("step {} has τ = {}", k + 1, tau[k])));
        }
        Ok(TimeGrid { t, tau })
    }

    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) || steps == 0 {
            return Err(Error::InvalidTimeGrid(format!(
                "horizon {horizon} with {steps} steps"
            )));
        }
        let dt = horizon / steps as f64;
        let mut t: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
        t[steps] = horizon;
        Self::new(t)
    }

    /// Splits every step in two.
    pub fn refine(&self) -> Self {
        let mut t = Vec::with_capacity(2 * self.t.len() - 1);
        for w in self.t.windows(2) {
            t.push(w[0]);
            t.push(0.5 * (w[0] + w[1]));
        }
        t.push(self.horizon());
        Self::new(t).expect("midpoints keep the grid valid")
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    /// `τ_k` for `k = 1..=m`, stored at index `k − 1`.
    pub fn taus(&self) -> &[f64] {
        &self.tau
    }

    pub fn steps(&self) -> usize {
        self.tau.len()
    }

    pub fn horizon(&self) -> f64 {
        *self.t.last().unwrap()
    }

    pub fn tau_max(&self) -> f64 {
        self.tau.iter().copied().fold(0.0, f64::max)
    }

    pub fn tau_min(&self) -> f64 {
        self.tau.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Per-step margins of the discrete step laws.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepLaws {
    /// `min(u_k − u_{k−1})`.
    pub monotone: f64,
    pub g_min: f64,
    pub g_max: f64,
    /// `|⟨g_k, u_k − u_{k−1}⟩|`.
    pub complementarity: f64,
    /// `1 + ‖g_k‖‖u_k − u_{k−1}‖`.
    pub complementarity_scale: f64,
    /// `max(g_k − [B u_{k−1} − f_k]₊)`.
    pub ls_excess: f64,
    /// `‖(u_k − u_{k−1})/τ_k − [−B u_k + f_k]₊‖∞`.
    pub strong_residual: f64,
    pub vi_iterations: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepLawTolerances {
    pub monotone: f64,
    pub g: f64,
    pub complementarity: f64,
    pub ls: f64,
    pub strong: f64,
    pub energy: f64,
}

impl Default for StepLawTolerances {
    fn default() -> Self {
        StepLawTolerances {
            monotone: 1e-9,
            g: 1e-9,
            complementarity: 1e-8,
            ls: 1e-7,
            strong: 1e-7,
            energy: 1e-8,
        }
    }
}

/// Worst values of [`StepLaws`] over a run, plus the energy-bound slack.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepLawSummary {
    pub steps: usize,
    pub min_monotone: f64,
    pub min_g: f64,
    /// Largest `complementarity / complementarity_scale`.
    pub max_complementarity: f64,
    pub max_ls_excess: f64,
    pub max_strong_residual: f64,
    pub min_energy_slack: f64,
}

impl StepLawSummary {
    pub fn violations(&self, tol: &StepLawTolerances) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.min_monotone < -tol.monotone {
            out.push("monotone");
        }
        if self.min_g < -tol.g {
            out.push("g-nonnegative");
        }
        if self.max_complementarity > tol.complementarity {
            out.push("complementarity");
        }
        if self.max_ls_excess > tol.ls {
            out.push("step-ls");
        }
        if self.max_strong_residual > tol.strong {
            out.push("strong-solution");
        }
        if self.min_energy_slack < -tol.energy {
            out.push("energy-bound");
        }
        out
    }

    pub fn holds(&self, tol: &StepLawTolerances) -> bool {
        self.violations(tol).is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub u: GridFunction,
    pub g: GridFunction,
    pub laws: StepLaws,
}

/// One implicit Euler step from `u_prev` with step source `f_k`.
///
/// Law violations are recorded in the outcome, not raised; a failing inner
/// solve is an error.
pub fn euler_step(
    u_prev: &GridFunction,
    f_k: &GridFunction,
    tau: f64,
    op: &FracOperator,
    cfg: &SolverConfig,
) -> Result<StepOutcome> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::param("tau", tau, "step must be positive"));
    }
    op.basis().check(u_prev)?;
    op.basis().check(f_k)?;
    let a_sigma = op.with_shift(op.shift() + 1.0 / tau)?;
    let force = f_k.zip_map(u_prev, |f, u| f + u / tau)?;
    let prob = ObstacleProblem::new(a_sigma, force, u_prev.clone())?;
    let sol = solve_vi(&prob, cfg)?;
    if !sol.converged {
        return Err(Error::NotConverged {
            iterations: sol.iterations,
            last_change: f64::NAN,
        });
    }

    let h = op.basis().weight();
    let u = sol.u;
    let (up, uk, f) = (u_prev.values(), u.values(), f_k.values());
    let bu = op.apply_raw(uk);
    let bu_prev = op.apply_raw(up);
    let n = uk.len();
    let du: Vec<f64> = (0..n).map(|i| uk[i] - up[i]).collect();
    let g: Vec<f64> = (0..n).map(|i| du[i] / tau + bu[i] - f[i]).collect();

    let norm = |v: &[f64]| (h * dot(v, v)).sqrt();
    let laws = StepLaws {
        monotone: du.iter().copied().fold(f64::INFINITY, f64::min),
        g_min: g.iter().copied().fold(f64::INFINITY, f64::min),
        g_max: g.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        complementarity: (h * dot(&g, &du)).abs(),
        complementarity_scale: 1.0 + norm(&g) * norm(&du),
        ls_excess: (0..n)
            .map(|i| g[i] - (bu_prev[i] - f[i]).max(0.0))
            .fold(f64::NEG_INFINITY, f64::max),
        strong_residual: (0..n)
            .map(|i| (du[i] / tau - (f[i] - bu[i]).max(0.0)).abs())
            .fold(0.0, f64::max),
        vi_iterations: sol.iterations,
    };
    let d = *u.domain();
    Ok(StepOutcome {
        u,
        g: GridFunction::from_raw(d, g),
        laws,
    })
}

/// A completed (or partial) run.
#[derive(Debug, Clone)]
pub struct EvolutionState {
    pub op: FracOperator,
    pub grid: TimeGrid,
    /// `u_0, u_1, …`; index `k` is time `t_k`.
    pub snapshots: Vec<GridFunction>,
    /// `f_k` at index `k − 1`.
    pub sources: Vec<GridFunction>,
    /// `g_k` at index `k − 1`.
    pub residuals: Vec<GridFunction>,
    pub laws: Vec<StepLaws>,
    /// `‖u_k‖²_B` at index `k`.
    pub hs_energy: Vec<f64>,
    /// `Σ_{j≤k} τ_j ‖(u_j − u_{j−1})/τ_j‖²` at index `k`.
    pub dissipation: Vec<f64>,
    /// `Σ_{j≤k} τ_j ‖f_j‖²` at index `k`.
    pub forcing: Vec<f64>,
}

impl EvolutionState {
    fn start(op: &FracOperator, grid: &TimeGrid, u0: &GridFunction) -> Self {
        EvolutionState {
            op: op.clone(),
            grid: grid.clone(),
            snapshots: vec![u0.clone()],
            sources: Vec::new(),
            residuals: Vec::new(),
            laws: Vec::new(),
            hs_energy: vec![op.energy_raw(u0.values())],
            dissipation: vec![0.0],
            forcing: vec![0.0],
        }
    }

    fn push(&mut self, f_k: GridFunction, out: StepOutcome, tau: f64) {
        let prev = self.snapshots.last().unwrap();
        let rate = (&out.u - prev).l2_norm() / tau;
        let fnorm = f_k.l2_norm();
        self.dissipation.push(self.dissipation.last().unwrap() + tau * rate * rate);
        self.forcing.push(self.forcing.last().unwrap() + tau * fnorm * fnorm);
        self.hs_energy.push(self.op.energy_raw(out.u.values()));
        self.snapshots.push(out.u);
        self.residuals.push(out.g);
        self.laws.push(out.laws);
        self.sources.push(f_k);
    }

    /// Number of completed steps.
    pub fn steps(&self) -> usize {
        self.laws.len()
    }

    pub fn initial(&self) -> &GridFunction {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &GridFunction {
        self.snapshots.last().unwrap()
    }

    /// `min_ℓ` of `‖u₀‖²_B + Σ τ‖f_k‖² − Σ τ‖Δu/τ‖² − ‖u_ℓ‖²_B`.
    pub fn energy_slack(&self) -> f64 {
        (0..self.hs_energy.len())
            .map(|l| self.hs_energy[0] + self.forcing[l] - self.dissipation[l] - self.hs_energy[l])
            .fold(f64::INFINITY, f64::min)
    }

    /// `sqrt(‖u₀‖²_B + Σ τ‖f_k‖²)` over the whole run.
    pub fn energy_constant(&self) -> f64 {
        (self.hs_energy[0] + self.forcing.last().unwrap()).sqrt()
    }

    pub fn law_summary(&self) -> StepLawSummary {
        let mut s = StepLawSummary {
            steps: self.steps(),
            min_monotone: f64::INFINITY,
            min_g: f64::INFINITY,
            max_complementarity: 0.0,
            max_ls_excess: f64::NEG_INFINITY,
            max_strong_residual: 0.0,
            min_energy_slack: self.energy_slack(),
        };
        for l in &self.laws {
            s.min_monotone = s.min_monotone.min(l.monotone);
            s.min_g = s.min_g.min(l.g_min);
            s.max_complementarity = s
                .max_complementarity
                .max(l.complementarity / l.complementarity_scale);
            s.max_ls_excess = s.max_ls_excess.max(l.ls_excess);
            s.max_strong_residual = s.max_strong_residual.max(l.strong_residual);
        }
        s
    }
}

/// `u₁,k ≤ u₂,k + tol` over all snapshots of two runs of equal length.
pub(crate) fn verify_ordering(r1: &EvolutionState, r2: &EvolutionState, tol: f64) -> ComparisonReport {
    let mut rep = ordering_report(&[], &[], tol);
    for (a, b) in r1.snapshots.iter().zip(&r2.snapshots) {
        let k = ordering_report(a.values(), b.values(), tol);
        rep.max_excess = rep.max_excess.max(k.max_excess);
        rep.max_gap = rep.max_gap.max(k.max_gap);
        rep.violations += k.violations;
    }
    rep
}

/// Runs the scheme over `grid` with step sources averaged from `src`.
pub fn evolve(
    u0: &GridFunction,
    src: &Source,
    grid: &TimeGrid,
    op: &FracOperator,
    cfg: &SolverConfig,
) -> Result<EvolutionState> {
    let sources = average_source(src, grid)?;
    evolve_with_sources(u0, sources, grid, op, cfg)
}

/// Runs the scheme with precomputed step sources `f_1, …, f_m`.
///
/// A failed step returns [`Error::StepFailed`] carrying the state up to the
/// last completed step.
pub fn evolve_with_sources(
    u0: &GridFunction,
    sources: Vec<GridFunction>,
    grid: &TimeGrid,
    op: &FracOperator,
    cfg: &SolverConfig,
) -> Result<EvolutionState> {
    op.basis().check(u0)?;
    if sources.len() != grid.steps() {
        return Err(Error::LengthMismatch {
            expected: grid.steps(),
            got: sources.len(),
        });
    }
    let mut state = EvolutionState::start(op, grid, u0);
    for (k, (f_k, &tau)) in sources.into_iter().zip(grid.taus()).enumerate() {
        match euler_step(state.last(), &f_k, tau, op, cfg) {
            Ok(out) => state.push(f_k, out, tau),
            Err(e) => {
                return Err(Error::StepFailed {
                    step: k + 1,
                    source: Box::new(e),
                    partial: Box::new(state),
                })
            }
        }
    }
    Ok(state)
}
