use crate::error::{Error, Result};
use crate::grid::GridFunction;

use super::{ObstacleProblem, SolverConfig, SolverKind, VISolution};

/// Projected SOR started from the obstacle.
pub fn solve_vi_psor(prob: &ObstacleProblem, cfg: &SolverConfig) -> Result<VISolution> {
    solve_vi_psor_from(prob, cfg, prob.obstacle())
}

/// Projected SOR from an arbitrary initial guess (projected onto `K₀` first).
///
/// Each sweep updates `u_i ← max(ψ_i, (1 − ω)u_i + ω (f_i − Σ_{j≠i} a_ij u_j) / a_ii)`.
/// Hitting `max_iter` is not an error: the result comes back with
/// `converged = false`.
pub fn solve_vi_psor_from(
    prob: &ObstacleProblem,
    cfg: &SolverConfig,
    init: &GridFunction,
) -> Result<VISolution> {
    cfg.validate()?;
    init.ensure_same_domain(prob.obstacle())?;
    let op = prob.op();
    let b = op.power_matrix()?;
    let shift = op.shift();
    let n = prob.len();
    let f = prob.force().values();
    let psi = prob.obstacle().values();

    let diag: Vec<f64> = (0..n).map(|i| b[(i, i)] + shift).collect();
    if let Some(i) = diag.iter().position(|d| !(*d > 0.0)) {
        return Err(Error::NotPositiveDefinite(format!(
            "diagonal entry {i} is {}",
            diag[i]
        )));
    }

    let mut u: Vec<f64> = init
        .values()
        .iter()
        .zip(psi)
        .map(|(a, p)| a.max(*p))
        .collect();
    let omega = cfg.omega;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        iterations += 1;
        let mut change: f64 = 0.0;
        for i in 0..n {
            // The matrix is symmetric, so column i doubles as row i and is contiguous.
            let col = b.column(i);
            let row_dot: f64 = col.iter().zip(&u).map(|(a, x)| a * x).sum();
            let off = row_dot + shift * u[i] - diag[i] * u[i];
            let gs = (f[i] - off) / diag[i];
            let next = ((1.0 - omega) * u[i] + omega * gs).max(psi[i]);
            change = change.max((next - u[i]).abs());
            u[i] = next;
        }
        if !change.is_finite() {
            return Err(Error::NotPositiveDefinite(
                "projected SOR diverged".to_string(),
            ));
        }
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(VISolution::assemble(
        prob,
        u,
        iterations,
        SolverKind::Psor,
        converged,
        cfg.act_tol,
    ))
}
