//! Report-only verifiers: Lewy–Stampacchia sandwich, the equivalent
//! characterizations of the solution, comparison of ordered problems, and
//! positive-part inequalities.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{check_order, Error, Result};
use crate::grid::{dot, GridFunction};
use crate::spectral::EigenBasis;

use super::{solve_vi, ObstacleProblem, SolverConfig, VISolution};

#[derive(Debug, Clone, Serialize)]
pub struct LsReport {
    /// `min(Au − f)`.
    pub lower_margin: f64,
    /// `min(max(f, Aψ) − Au)`.
    pub upper_margin: f64,
    /// Nodes where either side is violated by more than `tol`.
    pub violations: usize,
    pub tol: f64,
}

impl LsReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Componentwise check of `f − tol ≤ Au ≤ max(f, Aψ) + tol`.
pub fn verify_lewy_stampacchia(sol: &VISolution, prob: &ObstacleProblem, tol: f64) -> Result<LsReport> {
    sol.u.ensure_same_domain(prob.force())?;
    let upper = prob.ls_upper_bound();
    let f = prob.force().values();
    let mut rep = LsReport {
        lower_margin: f64::INFINITY,
        upper_margin: f64::INFINITY,
        violations: 0,
        tol,
    };
    for (i, au) in sol.au.values().iter().enumerate() {
        let lo = au - f[i];
        let hi = upper.values()[i] - au;
        rep.lower_margin = rep.lower_margin.min(lo);
        rep.upper_margin = rep.upper_margin.min(hi);
        if lo < -tol || hi < -tol {
            rep.violations += 1;
        }
    }
    Ok(rep)
}

/// Worst sampled margin per characterization; nonnegative means satisfied.
///
/// (a)/(b) sample `v ∈ K₀`, (d)/(e) sample `v ∈ K₁`, (f)/(g) sample
/// `v ∈ K₂`. Sampling is a statistical check of a "for all v" statement.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionsReport {
    /// `J(v) − J(u)`, `v ∈ K₀`.
    pub a: f64,
    /// `⟨Au − f, v − u⟩`, `v ∈ K₀`.
    pub b: f64,
    /// `u ∈ K₀ ∩ K₁` and `−|⟨Au − f, u − ψ⟩|`.
    pub c: f64,
    /// `u ∈ K₁` and `⟨Au − Aψ, v − u⟩`, `v ∈ K₁`.
    pub d: f64,
    /// `u ∈ K₁` and `Ĵ(v) − Ĵ(u)`, `v ∈ K₁`.
    pub e: f64,
    /// `u ∈ K₂` and `Ĵ(v) − Ĵ(u)`, `v ∈ K₂`.
    pub f: f64,
    /// `u ∈ K₂` and `⟨Au − Aψ, v − u⟩`, `v ∈ K₂`.
    pub g: f64,
    /// `u ∈ K₀ ∩ K₂` and `−max |(Au − f)(u − ψ)|`.
    pub h: f64,
    pub samples: usize,
}

impl ConditionsReport {
    pub fn worst(&self) -> f64 {
        [self.a, self.b, self.c, self.d, self.e, self.f, self.g, self.h]
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }
}

fn min_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::INFINITY, f64::min)
}

/// Evaluates the equivalent characterizations of the obstacle solution at
/// `sol.u` using `samples` random feasible comparison points per family.
pub fn check_equivalent_conditions<R: Rng + ?Sized>(
    sol: &VISolution,
    prob: &ObstacleProblem,
    samples: usize,
    rng: &mut R,
) -> Result<ConditionsReport> {
    sol.u.ensure_same_domain(prob.force())?;
    let op = prob.op();
    let h = prob.weight();
    let n = prob.len();
    let u = sol.u.values();
    let f = prob.force().values();
    let psi = prob.obstacle().values();
    let au = op.apply_raw(u);
    let fhat = prob.obstacle_force();
    let fhat = fhat.values();
    let upper: Vec<f64> = f.iter().zip(fhat).map(|(a, b)| a.max(*b)).collect();
    let dual: Vec<f64> = au.iter().zip(f).map(|(a, b)| a - b).collect();
    let gap: Vec<f64> = u.iter().zip(psi).map(|(a, b)| a - b).collect();
    let inner = |x: &[f64], y: &[f64]| h * dot(x, y);
    let diff = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(a, b)| a - b).collect() };
    let scale = 1.0 + u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let force_scale = 1.0 + au.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let amplitudes = [1e-3, 1e-2, 1e-1, 1.0];
    let mut noise = |amp: f64| -> Vec<f64> { (0..n).map(|_| amp * rng.sample::<f64, _>(StandardNormal)).collect() };

    let in_k0 = min_of(gap.iter().copied());
    let in_k1 = min_of(dual.iter().copied());
    let in_k2 = in_k1.min(min_of(upper.iter().zip(&au).map(|(a, b)| a - b)));
    let j_u = prob.energy(u);
    let jh_u = prob.energy_hat(u);

    // K₀ samples: projections of perturbations, plus ψ and 2u − ψ.
    let mut k0: Vec<Vec<f64>> = vec![psi.to_vec(), u.iter().zip(psi).map(|(a, b)| 2.0 * a - b).collect()];
    for t in 0..samples {
        let d = noise(amplitudes[t % amplitudes.len()] * scale);
        k0.push(u.iter().zip(&d).zip(psi).map(|((a, b), p)| (a + b).max(*p)).collect());
    }
    let cond_a = min_of(k0.iter().map(|v| prob.energy(v) - j_u));
    let cond_b = min_of(k0.iter().map(|v| inner(&dual, &diff(v, u))));

    let cond_c = in_k0.min(in_k1).min(-inner(&dual, &gap).abs());

    // K₁ samples: v = A⁻¹t with t ≥ f, plus A⁻¹f and 2u − A⁻¹f.
    let free = op.solve_raw(f);
    let mut k1: Vec<Vec<f64>> = vec![free.clone(), u.iter().zip(&free).map(|(a, b)| 2.0 * a - b).collect()];
    for t in 0..samples {
        let d = noise(amplitudes[t % amplitudes.len()] * force_scale);
        let target: Vec<f64> = au.iter().zip(&d).zip(f).map(|((a, b), c)| (a + b).max(*c)).collect();
        k1.push(op.solve_raw(&target));
    }
    let au_minus_fhat = diff(&au, fhat);
    let cond_d = in_k1.min(min_of(k1.iter().map(|v| inner(&au_minus_fhat, &diff(v, u)))));
    let cond_e = in_k1.min(min_of(k1.iter().map(|v| prob.energy_hat(v) - jh_u)));

    // K₂ samples: v = A⁻¹t with f ≤ t ≤ max(f, Aψ).
    let mut k2: Vec<Vec<f64>> = vec![free];
    for t in 0..samples {
        let d = noise(amplitudes[t % amplitudes.len()] * force_scale);
        let target: Vec<f64> = (0..n).map(|i| (au[i] + d[i]).clamp(f[i], upper[i])).collect();
        k2.push(op.solve_raw(&target));
    }
    let cond_f = in_k2.min(min_of(k2.iter().map(|v| prob.energy_hat(v) - jh_u)));
    let cond_g = in_k2.min(min_of(k2.iter().map(|v| inner(&au_minus_fhat, &diff(v, u)))));

    let pointwise = gap.iter().zip(&dual).fold(0.0f64, |m, (a, b)| m.max((a * b).abs()));
    let cond_h = in_k0.min(in_k2).min(-pointwise);

    Ok(ConditionsReport {
        a: cond_a,
        b: cond_b,
        c: cond_c,
        d: cond_d,
        e: cond_e,
        f: cond_f,
        g: cond_g,
        h: cond_h,
        samples,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    /// `max(u₁ − u₂)`; the ordering holds when this is `≤ tol`.
    pub max_excess: f64,
    /// `max(u₂ − u₁)`.
    pub max_gap: f64,
    pub violations: usize,
    pub tol: f64,
}

impl ComparisonReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

pub(crate) fn ordering_report(lower: &[f64], upper: &[f64], tol: f64) -> ComparisonReport {
    let mut rep = ComparisonReport {
        max_excess: f64::NEG_INFINITY,
        max_gap: f64::NEG_INFINITY,
        violations: 0,
        tol,
    };
    for (a, b) in lower.iter().zip(upper) {
        rep.max_excess = rep.max_excess.max(a - b);
        rep.max_gap = rep.max_gap.max(b - a);
        if a - b > tol {
            rep.violations += 1;
        }
    }
    rep
}

/// Solves two problems with `f₁ ≤ f₂`, `ψ₁ ≤ ψ₂` and checks `u₁ ≤ u₂ + tol`.
pub fn compare_solutions(
    p1: &ObstacleProblem,
    p2: &ObstacleProblem,
    cfg: &SolverConfig,
    tol: f64,
) -> Result<ComparisonReport> {
    if !p1.op().same_as(p2.op()) {
        return Err(Error::Precondition(
            "compared problems must share the operator".to_string(),
        ));
    }
    if !p1.force().le_within(p2.force(), 0.0)? {
        return Err(Error::Precondition("forces are not ordered (f1 <= f2)".to_string()));
    }
    if !p1.obstacle().le_within(p2.obstacle(), 0.0)? {
        return Err(Error::Precondition(
            "obstacles are not ordered (psi1 <= psi2)".to_string(),
        ));
    }
    let u1 = solve_vi(p1, cfg)?;
    let u2 = solve_vi(p2, cfg)?;
    Ok(ordering_report(u1.u.values(), u2.u.values(), tol))
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PositivePartReport {
    pub trials: usize,
    /// `‖[μ+ζ]₊‖ ≤ ‖[μ]₊‖ + ‖[ζ]₊‖` and the same for negative parts.
    pub triangle_violations: usize,
    /// `‖v₊‖_{L²} ≤ ‖v‖_{L²}`.
    pub l2_violations: usize,
    /// `[v₊] ≤ [v]` in the discrete Gagliardo seminorm.
    pub gagliardo_violations: usize,
    /// `‖v₊‖_{H^s} ≤ ‖v‖_{H^s}` in the spectral norm.
    pub spectral_violations: usize,
    /// `h Σ v₊²/dist ≤ h Σ v²/dist`.
    pub lions_magenes_violations: usize,
    /// Largest `[v₊] / [v]` seen on sign-changing samples.
    pub max_gagliardo_ratio: f64,
    /// Smallest slack of the positive-part triangle inequality.
    pub min_triangle_slack: f64,
}

impl PositivePartReport {
    pub fn violations(&self) -> usize {
        self.triangle_violations
            + self.l2_violations
            + self.gagliardo_violations
            + self.spectral_violations
            + self.lions_magenes_violations
    }
}

/// Randomized check of the positive-part inequalities used in the comparison
/// and regularity arguments. Inputs mix white noise with smooth modes.
pub fn positive_part_lemmas_check<R: Rng + ?Sized>(
    basis: &EigenBasis,
    s: f64,
    trials: usize,
    rng: &mut R,
) -> Result<PositivePartReport> {
    check_order(s)?;
    let d = *basis.domain();
    let n = basis.len();
    let tol = 1e-12;
    let draw = |rng: &mut R| -> GridFunction {
        let smooth: Vec<f64> = (0..n)
            .map(|k| rng.sample::<f64, _>(StandardNormal) / (1.0 + k as f64))
            .collect();
        let mut v = basis.synthesize(&smooth);
        let shift: f64 = rng.random_range(-0.5..0.5);
        for x in v.iter_mut() {
            *x += shift + 0.3 * rng.sample::<f64, _>(StandardNormal);
        }
        GridFunction::from_raw(d, v)
    };

    let mut rep = PositivePartReport {
        trials,
        max_gagliardo_ratio: 0.0,
        min_triangle_slack: f64::INFINITY,
        ..Default::default()
    };
    for _ in 0..trials {
        let mu = draw(rng);
        let zeta = draw(rng);
        let sum = &mu + &zeta;
        for part in [GridFunction::positive_part, GridFunction::negative_part] {
            let slack = part(&mu).l2_norm() + part(&zeta).l2_norm() - part(&sum).l2_norm();
            rep.min_triangle_slack = rep.min_triangle_slack.min(slack);
            if slack < -tol {
                rep.triangle_violations += 1;
            }
        }

        let v = mu;
        let vp = v.positive_part();
        if vp.l2_norm() > v.l2_norm() + tol {
            rep.l2_violations += 1;
        }
        let g = basis.gagliardo_seminorm(s, &v)?;
        let gp = basis.gagliardo_seminorm(s, &vp)?;
        if gp > g * (1.0 + tol) + tol {
            rep.gagliardo_violations += 1;
        }
        if g > 0.0 {
            rep.max_gagliardo_ratio = rep.max_gagliardo_ratio.max((gp / g).sqrt());
        }
        if basis.hs_norm_sq(s, &vp)? > basis.hs_norm_sq(s, &v)? * (1.0 + tol) + tol {
            rep.spectral_violations += 1;
        }
        if basis.lions_magenes_functional(&vp)? > basis.lions_magenes_functional(&v)? * (1.0 + tol) {
            rep.lions_magenes_violations += 1;
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::super::tests::hat_problem;
    use super::super::{solve_vi_active_set, ObstacleProblem, SolverConfig, VISolution};
    use super::*;
    use crate::grid::DomainSpec;
    use crate::operator::FracOperator;

    #[test]
    fn hat_instance_satisfies_ls_and_all_conditions() {
        let prob = hat_problem();
        let sol = solve_vi_active_set(&prob, &SolverConfig::default()).unwrap();
        let ls = verify_lewy_stampacchia(&sol, &prob, 1e-7).unwrap();
        assert!(ls.holds(), "{ls:?}");
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rep = check_equivalent_conditions(&sol, &prob, 64, &mut rng).unwrap();
        assert!(rep.worst() >= -1e-7, "{rep:?}");
    }

    #[test]
    fn inactive_instance_is_tight_below() {
        let d = DomainSpec::interval(1.0, 12).unwrap();
        let b = Arc::new(EigenBasis::build(d).unwrap());
        let op = FracOperator::new(b, 0.5, 1.0).unwrap();
        let f = GridFunction::from_fn(d, |x| 2.0 + x[0]).unwrap();
        let psi = op.solve(&f).unwrap().map(|v| v - 1.0);
        let prob = ObstacleProblem::new(op, f, psi).unwrap();
        let sol = solve_vi_active_set(&prob, &SolverConfig::default()).unwrap();
        let ls = verify_lewy_stampacchia(&sol, &prob, 1e-7).unwrap();
        assert!(ls.holds() && ls.lower_margin.abs() < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rep = check_equivalent_conditions(&sol, &prob, 64, &mut rng).unwrap();
        assert!(rep.worst() >= -1e-8, "{rep:?}");
    }

    #[test]
    fn corrupted_solution_fails_the_minimization() {
        let prob = hat_problem();
        let sol = solve_vi_active_set(&prob, &SolverConfig::default()).unwrap();
        let bumped = &sol.u + &(&prob.op().basis().mode(0) * 0.1);
        let fake = VISolution::assemble(&prob, bumped.into_values(), 0, sol.solver, true, 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rep = check_equivalent_conditions(&fake, &prob, 64, &mut rng).unwrap();
        assert!(rep.a < 0.0, "{rep:?}");
        assert!(rep.c < 0.0);
    }

    #[test]
    fn comparison_of_identical_and_raised_problems() {
        let prob = hat_problem();
        let cfg = SolverConfig::default();
        let same = compare_solutions(&prob, &prob, &cfg, 1e-8).unwrap();
        assert!(same.holds() && same.max_excess.abs() < 1e-14);

        let raised = ObstacleProblem::new(
            prob.op().clone(),
            prob.force().map(|v| v + 1.0),
            prob.obstacle().clone(),
        )
        .unwrap();
        let rep = compare_solutions(&prob, &raised, &cfg, 1e-8).unwrap();
        assert!(rep.holds());
        assert!(compare_solutions(&raised, &prob, &cfg, 1e-8).is_err());
    }

    #[test]
    fn raised_force_is_strictly_above_when_unconstrained() {
        let d = DomainSpec::interval(1.0, 16).unwrap();
        let b = Arc::new(EigenBasis::build(d).unwrap());
        let op = FracOperator::new(b, 0.5, 0.0).unwrap();
        let f1 = GridFunction::constant(d, 1.0);
        let psi = GridFunction::constant(d, -5.0);
        let p1 = ObstacleProblem::new(op.clone(), f1.clone(), psi.clone()).unwrap();
        let p2 = ObstacleProblem::new(op, f1.map(|v| v + 1.0), psi).unwrap();
        let rep = compare_solutions(&p1, &p2, &SolverConfig::default(), 1e-8).unwrap();
        assert!(rep.holds());
        assert!(rep.max_excess < 0.0);
    }

    #[test]
    fn positive_parts_of_nonnegative_are_identity() {
        let b = EigenBasis::build(DomainSpec::interval(1.0, 16).unwrap()).unwrap();
        let v = b.mode(0);
        let g = b.gagliardo_seminorm(0.4, &v).unwrap();
        assert_eq!(b.gagliardo_seminorm(0.4, &v.positive_part()).unwrap(), g);

        let neg = &b.mode(1) * -1.0;
        let gp = b.gagliardo_seminorm(0.4, &neg.positive_part()).unwrap();
        assert!(gp < b.gagliardo_seminorm(0.4, &neg).unwrap());

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rep = positive_part_lemmas_check(&b, 0.4, 100, &mut rng).unwrap();
        assert_eq!(rep.violations(), 0, "{rep:?}");
    }
}
