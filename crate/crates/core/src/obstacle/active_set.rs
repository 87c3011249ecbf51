use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::{ObstacleProblem, SolverConfig, SolverKind, VISolution};

/// Primal-dual active-set iteration.
///
/// Given a guess `S` of the contact set, solve `(Au)_i = f_i` off `S` with
/// `u = ψ` on `S`, then rebuild `S` from sign violations: active nodes with a
/// negative multiplier `Au − f` are released, inactive nodes below the
/// obstacle are added. Stops when `S` repeats. For an M-matrix this settles
/// in at most `N + 1` rounds; anything longer is reported as cycling.
pub fn solve_vi_active_set(prob: &ObstacleProblem, cfg: &SolverConfig) -> Result<VISolution> {
    cfg.validate()?;
    let n = prob.len();
    if n > cfg.oracle_cap {
        return Err(Error::CapExceeded {
            n,
            cap: cfg.oracle_cap,
        });
    }
    let op = prob.op();
    let a = op.assemble_dense()?;
    let f = prob.force().values();
    let psi = prob.obstacle().values();
    let free = op.solve_raw(f);

    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    // Roundoff guards; biactive nodes stay active.
    let eps_primal = 1e-12 * (1.0 + sup(psi) + sup(&free));
    let eps_dual = 1e-12 * (1.0 + sup(f) + sup(prob.obstacle_force().values()));

    let mut active: Vec<bool> = free.iter().zip(psi).map(|(u, p)| u < p).collect();
    for round in 1..=n + 1 {
        let u = restricted_solve(&a, f, psi, &active)?;
        let au = &a * DVector::from_column_slice(&u);
        let next: Vec<bool> = (0..n)
            .map(|i| {
                if active[i] {
                    au[i] - f[i] >= -eps_dual
                } else {
                    u[i] < psi[i] - eps_primal
                }
            })
            .collect();
        if next == active {
            return Ok(VISolution::assemble(
                prob,
                u,
                round,
                SolverKind::ActiveSet,
                true,
                cfg.act_tol,
            ));
        }
        active = next;
    }
    Err(Error::Cycling { iterations: n + 1 })
}

/// Solves `A_II u_I = f_I − A_IS ψ_S`, `u_S = ψ_S`.
fn restricted_solve(a: &DMatrix<f64>, f: &[f64], psi: &[f64], active: &[bool]) -> Result<Vec<f64>> {
    let mut u: Vec<f64> = psi.to_vec();
    let free: Vec<usize> = (0..f.len()).filter(|&i| !active[i]).collect();
    if free.is_empty() {
        return Ok(u);
    }
    let m = free.len();
    let sub = DMatrix::from_fn(m, m, |r, c| a[(free[r], free[c])]);
    let rhs = DVector::from_fn(m, |r, _| {
        let i = free[r];
        f[i] - (0..f.len())
            .filter(|&j| active[j])
            .map(|j| a[(i, j)] * psi[j])
            .sum::<f64>()
    });
    let chol = sub.cholesky().ok_or_else(|| {
        Error::NotPositiveDefinite(format!("inactive block of size {m} has no Cholesky factor"))
    })?;
    let x = chol.solve(&rhs);
    for (r, &i) in free.iter().enumerate() {
        u[i] = x[r];
    }
    Ok(u)
}
