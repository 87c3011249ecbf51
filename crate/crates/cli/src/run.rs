//! Command implementations. Each returns a [`Report`]; solver and
//! precondition errors are recorded in `Report::failure` together with any
//! artifacts produced before the failure.

use std::sync::Arc;

use anyhow::Context;
use fracvi::evolution::{
    asymptotic_limit, chain_rule_check, evolve_with_sources, interpolant_gap,
    StepLawTolerances,
};
use fracvi::extension::{
    energy_kappa_batch, errors_decrease, refinement_study_with, sinh_oracle_error, solve_extension,
    solve_extension_direct, ExtensionMesh,
};
use fracvi::obstacle::{
    check_equivalent_conditions, compare_solutions, positive_part_lemmas_check, solve_vi,
    solve_vi_active_set, solve_vi_psor, verify_lewy_stampacchia,
};
use fracvi::random::{random_obstacle_problem, smooth_field, white_noise};
use fracvi::{
    EigenBasis, Error, EvolutionState, FracOperator, GridFunction, ObstacleProblem,
    TimeGrid, VISolution,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{Command, Profile, RunConfig, TimeProfile};
use crate::report::{float, Invariant, Report, Table};

/// Off-diagonal sign tolerance relative to `‖A‖∞`, and the bilinear-form tolerance.
const SIGN_REL_TOL: f64 = 1e-12;
const BILINEAR_TOL: f64 = 1e-10;
const POLARIZATION_TOL: f64 = 1e-9;

struct Setup {
    basis: Arc<EigenBasis>,
    op: FracOperator,
}

impl Setup {
    fn new(cfg: &RunConfig) -> anyhow::Result<Self> {
        let d = cfg.domain.spec()?;
        let basis = Arc::new(EigenBasis::build(d)?);
        let op = FracOperator::new(basis.clone(), cfg.s, cfg.shift)?;
        Ok(Setup { basis, op })
    }

    fn sample(&self, p: &Profile, what: &str) -> anyhow::Result<GridFunction> {
        p.sample(&self.basis).with_context(|| format!("sampling `{what}`"))
    }

    fn node_columns(&self) -> Vec<String> {
        let mut c = vec!["index".to_string(), "x".to_string()];
        if self.basis.domain().dim() == 2 {
            c.push("y".to_string());
        }
        c
    }

    fn node_prefix(&self, i: usize) -> Vec<String> {
        let d = self.basis.domain();
        let x = d.coords(i);
        let mut row = vec![i.to_string(), float(x[0])];
        if d.dim() == 2 {
            row.push(float(x[1]));
        }
        row
    }

    fn nodal_table(&self, name: &str, fields: &[(&str, &GridFunction)]) -> Table {
        let mut cols = self.node_columns();
        cols.extend(fields.iter().map(|(n, _)| n.to_string()));
        let mut t = Table::with_columns(name, cols);
        for i in 0..self.basis.len() {
            let mut row = self.node_prefix(i);
            row.extend(fields.iter().map(|(_, g)| float(g.values()[i])));
            t.push(row);
        }
        t
    }
}

pub fn run(cfg: &RunConfig, command: Command) -> anyhow::Result<Report> {
    let mut rep = Report::new(command, cfg.seed);
    rep.fact("s", cfg.s);
    rep.fact("shift", cfg.shift);
    rep.fact("nodes", cfg.domain.cells.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("x"));
    let setup = Setup::new(cfg)?;
    let result = match command {
        Command::SolvePoisson => solve_poisson(cfg, &setup, &mut rep),
        Command::SolveObstacle => solve_obstacle(cfg, &setup, &mut rep),
        Command::Evolve => evolve(cfg, &setup, &mut rep),
        Command::VerifyLs => verify_ls(cfg, &setup, &mut rep),
        Command::Compare => compare(cfg, &setup, &mut rep),
        Command::Asymptotic => asymptotic(cfg, &setup, &mut rep),
        Command::ExtensionCheck => extension_check(cfg, &setup, &mut rep),
        Command::Suite => suite(cfg, &setup, &mut rep),
    };
    match result {
        Ok(()) => Ok(rep),
        Err(e) => match e.downcast::<Error>() {
            Ok(solver_err) => {
                rep.failure = Some(solver_err.to_string());
                Ok(rep)
            }
            Err(other) => Err(other),
        },
    }
}

fn solve_poisson(cfg: &RunConfig, st: &Setup, rep: &mut Report) -> anyhow::Result<()> {
    let f = st.sample(&cfg.problem.force, "force")?;
    let u = st.op.solve(&f)?;
    let res = (&st.op.apply(&u)? - &f).max_abs() / (1.0 + f.max_abs());
    rep.fact("hs_norm", float(st.basis.hs_norm(cfg.s, &u)?));
    rep.check(Invariant::at_most("poisson_residual", res, 1e-10));
    if f.min_value() >= 0.0 {
        rep.check(Invariant::at_least("nonnegative_solution", u.min_value(), -1e-12));
    }
    rep.tables.push(st.nodal_table("solution", &[("f", &f), ("u", &u)]));
    Ok(())
}

fn obstacle_problem(cfg: &RunConfig, st: &Setup) -> anyhow::Result<ObstacleProblem> {
    let f = st.sample(&cfg.problem.force, "force")?;
    let psi = st.sample(&cfg.problem.obstacle, "obstacle")?;
    Ok(ObstacleProblem::new(st.op.clone(), f, psi)?)
}

fn kkt_invariants(sol: &VISolution, tol: f64, rep: &mut Report) {
    let r = &sol.residuals;
    rep.check(Invariant::flag("converged", sol.converged));
    rep.check(Invariant::at_least("feasibility", r.feasibility, -tol));
    rep.check(Invariant::at_least("dual_feasibility", r.dual_feasibility, -tol));
    rep.check(Invariant::at_most(
        "complementarity",
        r.complementarity / (1.0 + sol.au.max_abs()),
        tol,
    ));
}

fn solution_table(st: &Setup, prob: &ObstacleProblem, sol: &VISolution) -> Table {
    let active = GridFunction::new(
        *st.basis.domain(),
        sol.active_set.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect(),
    )
    .expect("matching length");
    let upper = prob.ls_upper_bound();
    st.nodal_table(
        "solution",
        &[
            ("f", prob.force()),
            ("psi", prob.obstacle()),
            ("u", &sol.u),
            ("au", &sol.au),
            ("ls_upper", &upper),
            ("active", &active),
        ],
    )
}

fn solve_and_record(cfg: &RunConfig, st: &Setup, rep: &mut Report) -> anyhow::Result<(ObstacleProblem, VISolution)> {
    let prob = obstacle_problem(cfg, st)?;
    let sol = solve_vi(&prob, &cfg.solver)?;
    rep.fact("solver", format!("{:?}", sol.solver));
    rep.fact("iterations", sol.iterations);
    rep.fact("active_nodes", sol.active_count());
    rep.tables.push(solution_table(st, &prob, &sol));
    kkt_invariants(&sol, cfg.solver.residual_tol, rep);
    if !sol.converged {
        rep.failure = Some(format!("obstacle solver stopped after {} iterations without converging", sol.iterations));
    }
    Ok((prob, sol))
}

fn solve_obstacle(cfg: &RunConfig, st: &Setup, rep: &mut Report) -> anyhow::Result<()> {
    solve_and_record(cfg, st, rep).map(|_| ())
}

fn verify_ls(cfg: &RunConfig, st: &Setup, rep: &mut Report) -> anyhow::Result<()> {
    let tol = cfg.solver.residual_tol;
    let (prob, sol) = solve_and_record(cfg, st, rep)?;
    let ls = verify_lewy_stampacchia(&sol, &prob, tol)?;
    rep.check(Invariant::at_least("ls_lower_margin", ls.lower_margin, -tol));
    rep.check(Invariant::at_least("ls_upper_margin", ls.upper_margin, -tol));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let c = check_equivalent_conditions(&sol, &prob, cfg.solver.trials, &mut rng)?;
    rep.fact("condition_samples", c.samples);
    for (name, v) in [
        ("condition_a", c.a),
        ("condition_b", c.b),
        ("condition_c", c.c),
        ("condition_d", c.d),
        ("condition_e", c.e),
        ("condition_f", c.f),
        ("condition_g", c.g),
        ("condition_h", c.h),
    ] {
        rep.check(Invariant::at_least(name, v, -tol));
    }
    let sign = st.op.sign_structure_report(&mut rng, cfg.solver.trials)?;
    rep.check(Invariant::at_most(
        "offdiagonal_sign",
        sign.max_off_diagonal / sign.norm_inf,
        SIGN_REL_TOL,
    ));
    rep.check(Invariant::at_most("positive_negative_pairing", sign.max_bilinear, BILINEAR_TOL));
    Ok(())
}

fn nonnegative(g: &GridFunction, what: &str) -> anyhow::Result<()> {
    if g.min_value() < 0.0 {
        anyhow::bail!("`{what}` must be nonnegative so the compared data are ordered");
    }
    Ok(())
}

fn compare(cfg: &RunConfig, st: &Setup, rep: &mut Report) -> anyhow::Result<()> {
    let tol = cfg.solver.residual_tol;
    let pr = &cfg.problem;
    let p1 = obstacle_problem(cfg, st)?;
    let df = st.sample(&pr.force_delta, "force_delta")?;
    let dpsi = st.sample(&pr.obstacle_delta, "obstacle_delta")?;
    let du0 = st.sample(&pr.initial_delta, "initial_delta")?;
    nonnegative(&df, "force_delta")?;
    nonnegative(&dpsi, "obstacle_delta")?;
    nonnegative(&du0, "initial_delta")?;
    let p2 = ObstacleProblem::new(st.op.clone(), p1.force() + &df, p1.obstacle() + &dpsi)?;

    let stationary = compare_solutions(&p1, &p2, &cfg.solver, tol)?;
    rep.fact("stationary_max_gap", float(stationary.max_gap));
    rep.check(Invariant::at_most("stationary_order", stationary.max_excess, tol));
    let s1 = solve_vi(&p1, &cfg.solver)?;
    let s2 = solve_vi(&p2, &cfg.solver)?;
    rep.tables.push(st.nodal_table("compare", &[("u1", &s1.u), ("u2", &s2.u)]));

    let (horizon, steps) = cfg.time.evolve_grid();
    let grid = TimeGrid::uniform(horizon, steps)?;
    let u01 = st.sample(&pr.initial, "initial")?;
    let u02 = &u01 + &du0;
    let f1 = step_sources(p1.force(), pr.force_time, &grid);
    let f2 = step_sources(p2.force(), pr.force_time, &grid);
    for (a, b) in f1.iter().zip(&f2) {
        if !a.le_within(b, 0.0)? {
            anyhow::bail!("time factor changes sign, so force_delta does not order the evolution sources");
        }
    }
    let r1 = evolve_with_sources(&u01, f1, &grid, &st.op, &cfg.solver)?;
    let r2 = evolve_with_sources(&u02, f2, &grid, &st.op, &cfg.solver)?;
    let excess = r1
        .snapshots
        .iter()
        .zip(&r2.snapshots)
        .map(|(a, b)| (a - b).max_value())
        .fold(f64::NEG_INFINITY, f64::max);
    rep.check(Invariant::at_most("evolution_order", excess, tol));
    Ok(())
}

/// Exact step averages of `φ(t)·f(x)` for the supported time factors.
fn step_sources(f: &GridFunction, tp: TimeProfile, grid: &TimeGrid) -> Vec<GridFunction> {
    grid.times()
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let avg = match tp {
                TimeProfile::Constant => 1.0,
                TimeProfile::Ramp(r) => 1.0 + 0.5 * r * (a + b),
                TimeProfile::Oscillate(om) if om != 0.0 => ((om * b).sin() - (om * a).sin()) / (om * (b - a)),
                TimeProfile::Oscillate(_) => 1.0,
            };
            f * avg
        })
        .collect()
}

fn evolution_tables(st: &Setup, s: f64, state: &EvolutionState, rep: &mut Report) -> anyhow::Result<()> {
    let mut t = Table::new(
        "evolution",
        &[
            "k",
            "t_k",
            "l2_norm",
            "hs_norm",
            "min_g",
            "max_g",
            "monotone",
            "complementarity",
            "ls_excess",
            "strong_residual",
        ],
    );
    let times = state.grid.times();
    for (k, u) in state.snapshots.iter().enumerate() {
        let mut row = vec![k.to_string(), float(times[k]), float(u.l2_norm()), float(st.basis.hs_norm(s, u)?)];
        match k.checked_sub(1).and_then(|j| state.laws.get(j)) {
            Some(l) => row.extend(
                [l.g_min, l.g_max, l.monotone, l.complementarity, l.ls_excess, l.strong_residual].map(float),
            ),
            None => row.extend(std::iter::repeat_n(String::new(), 6)),
        }
        t.push(row);
    }
    rep.tables.push(t);

    let names: Vec<String> = (0..state.snapshots.len()).map(|k| format!("u_{k}")).collect();
    let fields: Vec<(&str, &GridFunction)> = names.iter().map(String::as_str).zip(&state.snapshots).collect();
    rep.tables.push(st.nodal_table("snapshots", &fields));
    Ok(())
}

fn evolve(cfg: &RunConfig, st: &Setup, rep: &mut Report) -> anyhow::Result<()> {
    let (horizon, steps) = cfg.time.evolve_grid();
    let grid = TimeGrid::uniform(horizon, steps)?;
    let u0 = st.sample(&cfg.problem.initial, "initial")?;
    let f = st.sample(&cfg.problem.force, "force")?;
    let sources = step_sources(&f, cfg.problem.force_time, &grid);
    rep.fact("horizon", horizon);
    rep.fact("steps", steps);
    let state = match evolve_with_sources(&u0, sources, &grid, &st.op, &cfg.solver) {
        Ok(state) => state,
        Err(Error::StepFailed { step, source, partial }) => {
            evolution_tables(st, cfg.s, &partial, rep)?;
            rep.failure = Some(format!("step {step} failed: {source}"));
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    evolution_tables(st, cfg.s, &state, rep)?;

    let tol = StepLawTolerances::default();
    let sum = state.law_summary();
    rep.check(Invariant::at_least("monotone", sum.min_monotone, -tol.monotone));
    rep.check(Invariant::at_least("g_nonnegative", sum.min_g, -tol.g));
    rep.check(Invariant::at_most("complementarity", sum.max_complementarity, tol.complementarity));
    rep.check(Invariant::at_most("step_ls_excess", sum.max_ls_excess, tol.ls));
    rep.check(Invariant::at_most("strong_residual", sum.max_strong_residual, tol.strong));
    rep.check(Invariant::at_least("energy_slack", sum.min_energy_slack, -tol.energy));

    let chain = chain_rule_check(&state);
    rep.fact("chain_rule_deviation", float(chain.deviation));
    rep.check(Invariant::at_most(
        "polarization_defect",
        chain.polarization_defect / chain.energy_scale.max(f64::MIN_POSITIVE),
        POLARIZATION_TOL,
    ));
    let gap = interpolant_gap(&state);
    rep.check(Invariant::at_most("interpolant_gap", gap.max_gap, gap.envelope));
    Ok(())
}

fn asymptotic(cfg: &RunConfig, st: &Setup, rep: &mut Report) -> anyhow::Result<()> {
    let u0 = st.sample(&cfg.problem.initial, "initial")?;
    let f = st.sample(&cfg.problem.force, "force")?;
    let acfg = cfg.time.asymptotic();
    rep.fact("horizon", acfg.horizon);
    rep.fact("tau", acfg.tau);
    let r = asymptotic_limit(&u0, &f, &st.op, &acfg, &cfg.solver)?;
    rep.fact("steps_taken", r.steps);
    rep.fact("stop_time", float(r.time));
    rep.fact("last_rate", float(r.last_rate));
    rep.check(Invariant::flag("stationary", r.stationary));
    rep.check(Invariant::at_most("limit_distance", r.distance, r.asymp_tol));
    rep.check(Invariant::at_least("above_initial", r.above_initial, -r.order_tol));
    rep.check(Invariant::at_least("dual_margin", r.dual_margin, -r.order_tol));
    rep.tables.push(st.nodal_table(
        "asymptotic",
        &[("u0", &u0), ("u_final", &r.u_final), ("u_limit", &r.stationary_solution)],
    ));
    Ok(())
}

fn extension_check(cfg: &RunConfig, st: &Setup, rep: &mut Report) -> anyhow::Result<()> {
    let ex = &cfg.extension;
    let v = st.sample(&ex.data, "data")?;
    let rows = refinement_study_with(&st.basis, cfg.s, &v, &ex.levels, ex.height, ex.ratio)?;
    let mut t = Table::new(
        "refinement",
        &["M", "Y", "s", "mode_count", "trace_rel_error", "energy_kappa"],
    );
    for r in &rows {
        t.push(vec![
            r.m.to_string(),
            float(r.height),
            float(r.s),
            r.mode_count.to_string(),
            float(r.trace_rel_error),
            float(r.energy_kappa),
        ]);
    }
    rep.tables.push(t);
    if rows.len() > 1 {
        rep.check(Invariant::flag("errors_decrease", errors_decrease(&rows)));
    }
    let finest = rows.last().expect("at least one level");
    rep.check(Invariant::at_most("finest_trace_error", finest.trace_rel_error, 0.05));

    let m = *ex.levels.iter().max().expect("nonempty levels");
    let mesh = ExtensionMesh::graded(st.basis.clone(), cfg.s, m, ex.height, ex.ratio)?;
    let modal = solve_extension(&mesh, &v)?;
    rep.fact("extension_constant", float(fracvi::extension::extension_constant(cfg.s)));
    if (cfg.s - 0.5).abs() < 1e-12 {
        rep.check(Invariant::at_most("sinh_oracle_error", sinh_oracle_error(&modal, &mesh, &v)?, 0.02));
    }

    let coarse_m = *ex.levels.iter().min().expect("nonempty levels");
    let coarse = ExtensionMesh::graded(st.basis.clone(), cfg.s, coarse_m, ex.height, ex.ratio)?;
    match solve_extension_direct(&coarse, &v) {
        Ok((_, trace)) => {
            let m_sol = solve_extension(&coarse, &v)?;
            let diff = (&trace - &m_sol.neumann_trace).max_abs() / (1.0 + trace.max_abs());
            rep.check(Invariant::at_most("modal_vs_direct", diff, 1e-6));
        }
        Err(Error::CapExceeded { .. }) => rep.fact("modal_vs_direct", "skipped (grid too large for the dense solve)"),
        Err(e) => return Err(e.into()),
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let data: Vec<GridFunction> = (0..ex.batch).map(|_| smooth_field(&st.basis, 1.0, 1.0, &mut rng)).collect();
    let kb = energy_kappa_batch(&mesh, &data)?;
    rep.fact("kappa_mean", float(kb.mean));
    rep.check(Invariant::at_most("kappa_spread", kb.spread, 0.02));
    Ok(())
}

fn suite(cfg: &RunConfig, st: &Setup, rep: &mut Report) -> anyhow::Result<()> {
    let tol = cfg.solver.residual_tol;
    let n = st.basis.len();
    let mut t = Table::new(
        "suite",
        &[
            "instance",
            "s",
            "shift",
            "active_nodes",
            "ls_lower_margin",
            "ls_upper_margin",
            "conditions_worst",
            "psor_oracle_diff",
            "complementarity",
            "comparison_excess",
        ],
    );
    let mut ls_violations = 0usize;
    let mut worst_conditions = f64::INFINITY;
    let mut worst_diff: f64 = 0.0;
    let mut worst_comp: f64 = 0.0;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_sign = f64::NEG_INFINITY;
    let mut worst_bilinear = f64::NEG_INFINITY;
    let mut lemma_violations = 0usize;
    let mut unconverged = 0usize;
    let mut instance = 0usize;

    for (case, &s) in cfg.suite.orders.iter().enumerate() {
        let mut lemma_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (0x9e37 + case as u64));
        let lemmas = positive_part_lemmas_check(&st.basis, s, cfg.suite.instances, &mut lemma_rng)?;
        lemma_violations += lemmas.violations();
        for (j, shift) in [0.0, 1.0].into_iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(31).wrapping_add((2 * case + j) as u64));
            let op = FracOperator::new(st.basis.clone(), s, shift)?;
            let sign = op.sign_structure_report(&mut rng, cfg.solver.trials)?;
            worst_sign = worst_sign.max(sign.max_off_diagonal / sign.norm_inf);
            worst_bilinear = worst_bilinear.max(sign.max_bilinear);
            for _ in 0..cfg.suite.instances {
                let prob = random_obstacle_problem(&op, &mut rng)?;
                let psor = solve_vi_psor(&prob, &cfg.solver)?;
                if !psor.converged {
                    unconverged += 1;
                }
                let (sol, diff) = if n <= cfg.solver.oracle_cap {
                    let a = solve_vi_active_set(&prob, &cfg.solver)?;
                    let d = (&a.u - &psor.u).max_abs();
                    worst_diff = worst_diff.max(d);
                    (a, float(d))
                } else {
                    (psor.clone(), String::new())
                };
                let ls = verify_lewy_stampacchia(&sol, &prob, tol)?;
                ls_violations += ls.violations;
                let cond = check_equivalent_conditions(&sol, &prob, cfg.solver.trials, &mut rng)?;
                worst_conditions = worst_conditions.min(cond.worst());
                let comp = sol.residuals.complementarity.max(psor.residuals.complementarity);
                worst_comp = worst_comp.max(comp);

                let df = white_noise(*st.basis.domain(), 1.0, &mut rng).map(f64::abs);
                let dpsi = white_noise(*st.basis.domain(), 0.05, &mut rng).map(f64::abs);
                let raised = ObstacleProblem::new(op.clone(), prob.force() + &df, prob.obstacle() + &dpsi)?;
                let cmp = compare_solutions(&prob, &raised, &cfg.solver, tol)?;
                worst_excess = worst_excess.max(cmp.max_excess);

                t.push(vec![
                    instance.to_string(),
                    float(s),
                    float(shift),
                    sol.active_count().to_string(),
                    float(ls.lower_margin),
                    float(ls.upper_margin),
                    float(cond.worst()),
                    diff,
                    float(comp),
                    float(cmp.max_excess),
                ]);
                instance += 1;
            }
        }
    }
    rep.tables.push(t);
    rep.fact("instances", instance);
    rep.check(Invariant::at_most("ls_violations", ls_violations as f64, 0.0));
    rep.check(Invariant::at_least("conditions_worst", worst_conditions, -tol));
    if n <= cfg.solver.oracle_cap {
        rep.check(Invariant::at_most("psor_oracle_diff", worst_diff, tol));
    }
    rep.check(Invariant::at_most("psor_unconverged", unconverged as f64, 0.0));
    rep.check(Invariant::at_most("complementarity", worst_comp, tol));
    rep.check(Invariant::at_most("comparison_excess", worst_excess, tol));
    rep.check(Invariant::at_most("offdiagonal_sign", worst_sign, SIGN_REL_TOL));
    rep.check(Invariant::at_most("positive_negative_pairing", worst_bilinear, BILINEAR_TOL));
    rep.check(Invariant::at_most("positive_part_lemma_violations", lemma_violations as f64, 0.0));
    Ok(())
}
