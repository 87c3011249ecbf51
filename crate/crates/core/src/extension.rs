//! Caffarelli–Silvestre extension on a truncated half-cylinder `Ω × (0, Y)`.
//!
//! The weighted problem `div(y^a ∇V) = 0`, `a = 1 − 2s`, with `V = v` at
//! `y = 0` and `V = 0` at `y = Y`, decouples in the eigenbasis of `−Δ_h`
//! into two-point problems `(y^a θ′)′ = λ_k y^a θ`, `θ(0) = 1`, `θ(Y) = 0`.
//! Each is discretized by a conservative finite-volume scheme on a mesh
//! graded geometrically toward `y = 0`. Cell conductances are the exact
//! harmonic averages `∫ y^{−a}` and node masses the exact dual-cell
//! integrals of `y^a`, so the scheme is the Euler–Lagrange system of the
//! discrete energy and the Neumann trace is its discrete Dirichlet-to-Neumann
//! map.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{check_order, Error, Result};
use crate::grid::GridFunction;
use crate::operator::FracOperator;
use crate::spectral::EigenBasis;

/// `c_s = Γ(1 − s) / (4^{s − 1/2} Γ(s))`.
pub fn extension_constant(s: f64) -> f64 {
    gamma(1.0 - s) / (4f64.powf(s - 0.5) * gamma(s))
}

/// Default grading ratio for `m` cells: `1.15^{128/m}`, capped at 2, so the
/// smallest cell shrinks at the same rate as the mesh is refined.
pub fn default_ratio(m: usize) -> f64 {
    1.15f64.powf(128.0 / m as f64).min(2.0)
}

/// Smallest accepted number of cells in `y`.
pub const MIN_CELLS: usize = 8;

#[derive(Debug, Clone)]
pub struct ExtensionMesh {
    base: Arc<EigenBasis>,
    s: f64,
    y: Vec<f64>,
    /// `k_i = 1 / ∫_{y_i}^{y_{i+1}} y^{−a}`.
    cond: Vec<f64>,
    /// `m_i = ∫ y^a` over the dual cell of node `i`.
    mass: Vec<f64>,
}

impl ExtensionMesh {
    /// Mesh on explicit nodes `0 = y₀ < … < y_M`.
    pub fn new(base: Arc<EigenBasis>, s: f64, y: Vec<f64>) -> Result<Self> {
        check_order(s)?;
        let m = y.len().saturating_sub(1);
        if m < MIN_CELLS {
            return Err(Error::param("M", m as f64, "extension mesh needs at least 8 cells"));
        }
        if y[0] != 0.0 || y.windows(2).any(|w| !(w[1] > w[0])) || !y[m].is_finite() {
            return Err(Error::InvalidDomain(
                "y nodes must start at 0 and increase strictly".to_string(),
            ));
        }
        let p = 2.0 * s;
        let cond: Vec<f64> = y.windows(2).map(|w| p / (w[1].powf(p) - w[0].powf(p))).collect();
        let q = 2.0 - 2.0 * s;
        let anti = |z: f64| z.powf(q) / q;
        let mut mass = Vec::with_capacity(m + 1);
        for i in 0..=m {
            let lo = if i == 0 { 0.0 } else { 0.5 * (y[i - 1] + y[i]) };
            let hi = if i == m { y[m] } else { 0.5 * (y[i] + y[i + 1]) };
            mass.push(anti(hi) - anti(lo));
        }
        Ok(ExtensionMesh {
            base,
            s,
            y,
            cond,
            mass,
        })
    }

    /// `y_i = Y (r^i − 1)/(r^M − 1)`; `height` defaults to `12/√λ₁` and
    /// `ratio` to [`default_ratio`].
    pub fn graded(base: Arc<EigenBasis>, s: f64, m: usize, height: Option<f64>, ratio: Option<f64>) -> Result<Self> {
        let height = height.unwrap_or_else(|| 12.0 / base.eigenvalues()[0].sqrt());
        if !(height.is_finite() && height > 0.0) {
            return Err(Error::param("Y", height, "truncation height must be positive"));
        }
        let r = ratio.unwrap_or_else(|| default_ratio(m));
        if !(r > 1.0 && r <= 2.0) {
            return Err(Error::param("ratio", r, "grading ratio must lie in (1, 2]"));
        }
        if m < MIN_CELLS {
            return Err(Error::param("M", m as f64, "extension mesh needs at least 8 cells"));
        }
        let denom = r.powi(m as i32) - 1.0;
        let mut y: Vec<f64> = (0..=m).map(|i| height * (r.powi(i as i32) - 1.0) / denom).collect();
        y[m] = height;
        Self::new(base, s, y)
    }

    pub fn base(&self) -> &Arc<EigenBasis> {
        &self.base
    }

    pub fn order(&self) -> f64 {
        self.s
    }

    pub fn nodes(&self) -> &[f64] {
        &self.y
    }

    pub fn cells(&self) -> usize {
        self.y.len() - 1
    }

    pub fn height(&self) -> f64 {
        *self.y.last().unwrap()
    }

    /// Solves the mode problem for eigenvalue `lambda`; returns the nodal
    /// profile `θ` and the discrete trace `k₀(1 − θ₁) + λ m₀`.
    pub fn mode_profile(&self, lambda: f64) -> Option<(Vec<f64>, f64)> {
        let m = self.cells();
        let (k, w) = (&self.cond, &self.mass);
        // Thomas algorithm on unknowns θ_1..θ_{M−1}.
        let n = m - 1;
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for r in 0..n {
            let i = r + 1;
            let diag = k[i - 1] + k[i] + lambda * w[i];
            let lower = if r == 0 { 0.0 } else { -k[i - 1] };
            let rhs = if r == 0 { k[0] } else { 0.0 };
            let piv = diag - lower * if r == 0 { 0.0 } else { c[r - 1] };
            if !(piv > 0.0 && piv.is_finite()) {
                return None;
            }
            c[r] = -k[i] / piv;
            d[r] = (rhs - lower * if r == 0 { 0.0 } else { d[r - 1] }) / piv;
        }
        let mut theta = vec![0.0; m + 1];
        theta[0] = 1.0;
        for r in (0..n).rev() {
            theta[r + 1] = d[r] - c[r] * theta[r + 2];
        }
        let trace = k[0] * (1.0 - theta[1]) + lambda * w[0];
        Some((theta, trace))
    }

    /// Discrete energy `h Σ_j [Σ_i k_i (ΔV)² + Σ_i m_i V_i·(−Δ_h V_i)]` of a
    /// field stored as an `N × (M+1)` matrix.
    pub fn energy(&self, field: &DMatrix<f64>) -> f64 {
        let d = self.base.domain();
        let h = self.base.weight();
        let m = self.cells();
        let mut e = 0.0;
        for i in 0..m {
            let diff = field.column(i + 1) - field.column(i);
            e += self.cond[i] * diff.norm_squared();
        }
        for i in 0..=m {
            let col: Vec<f64> = field.column(i).iter().copied().collect();
            let lap = d.neg_laplacian(&col);
            e += self.mass[i] * col.iter().zip(&lap).map(|(a, b)| a * b).sum::<f64>();
        }
        h * e
    }
}

#[derive(Debug, Clone)]
pub struct ExtensionSolution {
    /// `V(x_j, y_i)` at row `j`, column `i`.
    pub field: DMatrix<f64>,
    pub energy: f64,
    pub neumann_trace: GridFunction,
    /// Per-mode traces `T_k`, so that the trace of `φ_k` is `T_k φ_k`.
    pub mode_traces: Vec<f64>,
}

/// Mode-by-mode solve of the extension with boundary datum `v`.
pub fn solve_extension(mesh: &ExtensionMesh, v: &GridFunction) -> Result<ExtensionSolution> {
    let basis = &mesh.base;
    basis.check(v)?;
    let n = basis.len();
    let m = mesh.cells();
    let coeffs = basis.analyze(v.values());
    let mut profiles = DMatrix::zeros(n, m + 1);
    let mut mode_traces = Vec::with_capacity(n);
    for (k, &lambda) in basis.eigenvalues().iter().enumerate() {
        let (theta, t) = mesh.mode_profile(lambda).ok_or(Error::ModeSolve { mode: k })?;
        for (i, th) in theta.iter().enumerate() {
            profiles[(k, i)] = coeffs[k] * th;
        }
        mode_traces.push(t);
    }
    let field = basis.vectors() * profiles;
    let scaled: Vec<f64> = coeffs.iter().zip(&mode_traces).map(|(c, t)| c * t).collect();
    let trace = GridFunction::from_raw(*v.domain(), basis.synthesize(&scaled));
    Ok(ExtensionSolution {
        energy: mesh.energy(&field),
        field,
        neumann_trace: trace,
        mode_traces,
    })
}

/// Largest coupled system [`solve_extension_direct`] accepts.
pub const DIRECT_CAP: usize = 4096;

/// Reference solve of the coupled weighted five-point scheme, without the
/// modal decomposition. Returns the field and the nodal trace
/// `k₀(v − V₁) + m₀(−Δ_h v)`.
pub fn solve_extension_direct(mesh: &ExtensionMesh, v: &GridFunction) -> Result<(DMatrix<f64>, GridFunction)> {
    let basis = &mesh.base;
    basis.check(v)?;
    let d = *basis.domain();
    let n = basis.len();
    let m = mesh.cells();
    let unknowns = n * (m - 1);
    if unknowns > DIRECT_CAP {
        return Err(Error::CapExceeded {
            n: unknowns,
            cap: DIRECT_CAP,
        });
    }
    // −Δ_h as a dense matrix, column by column.
    let mut lap = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for c in 0..n {
        e[c] = 1.0;
        for (r, val) in d.neg_laplacian(&e).into_iter().enumerate() {
            lap[(r, c)] = val;
        }
        e[c] = 0.0;
    }
    let idx = |j: usize, i: usize| (i - 1) * n + j;
    let (k, w) = (&mesh.cond, &mesh.mass);
    let mut a = DMatrix::zeros(unknowns, unknowns);
    let mut rhs = DVector::zeros(unknowns);
    for i in 1..m {
        for j in 0..n {
            let row = idx(j, i);
            a[(row, row)] += k[i - 1] + k[i];
            if i > 1 {
                a[(row, idx(j, i - 1))] -= k[i - 1];
            } else {
                rhs[row] += k[0] * v.values()[j];
            }
            if i + 1 < m {
                a[(row, idx(j, i + 1))] -= k[i];
            }
            for jj in 0..n {
                a[(row, idx(jj, i))] += w[i] * lap[(j, jj)];
            }
        }
    }
    let x = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NotPositiveDefinite("coupled extension system is singular".to_string()))?;
    let mut field = DMatrix::zeros(n, m + 1);
    for j in 0..n {
        field[(j, 0)] = v.values()[j];
        for i in 1..m {
            field[(j, i)] = x[idx(j, i)];
        }
    }
    let lv = d.neg_laplacian(v.values());
    let trace = (0..n)
        .map(|j| k[0] * (v.values()[j] - field[(j, 1)]) + w[0] * lv[j])
        .collect();
    Ok((field, GridFunction::from_raw(d, trace)))
}

fn rel_l2(got: &GridFunction, want: &GridFunction) -> f64 {
    let err = (got - want).l2_norm();
    let scale = want.l2_norm();
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceReport {
    pub c_s: f64,
    /// `‖trace − c_s (−Δ)^s v‖ / ‖c_s (−Δ)^s v‖` (absolute when `v = 0`).
    pub rel_error: f64,
}

/// Compares the Neumann trace against `c_s (−Δ)^s v` for the unshifted
/// operator of the mesh order.
pub fn verify_trace_identity(sol: &ExtensionSolution, op: &FracOperator, v: &GridFunction) -> Result<TraceReport> {
    if op.shift() != 0.0 {
        return Err(Error::Precondition("trace identity needs the unshifted power".to_string()));
    }
    let c_s = extension_constant(op.order());
    let reference = &op.apply(v)? * c_s;
    sol.neumann_trace.ensure_same_domain(&reference)?;
    Ok(TraceReport {
        c_s,
        rel_error: rel_l2(&sol.neumann_trace, &reference),
    })
}

/// Continuum trace at `s = 1/2` for the truncated cylinder:
/// `Σ v_k √λ_k coth(√λ_k Y) φ_k`.
pub fn sinh_oracle_trace(basis: &EigenBasis, height: f64, v: &GridFunction) -> Result<GridFunction> {
    basis.check(v)?;
    let c = basis.analyze(v.values());
    let scaled: Vec<f64> = c
        .iter()
        .zip(basis.eigenvalues())
        .map(|(ck, l)| {
            let r = l.sqrt();
            ck * r / (r * height).tanh()
        })
        .collect();
    Ok(GridFunction::from_raw(*v.domain(), basis.synthesize(&scaled)))
}

/// Relative `L²` distance between the computed trace and the `s = 1/2`
/// closed form.
pub fn sinh_oracle_error(sol: &ExtensionSolution, mesh: &ExtensionMesh, v: &GridFunction) -> Result<f64> {
    if (mesh.order() - 0.5).abs() > 1e-15 {
        return Err(Error::Precondition("the sinh oracle is for s = 1/2".to_string()));
    }
    let oracle = sinh_oracle_trace(&mesh.base, mesh.height(), v)?;
    Ok(rel_l2(&sol.neumann_trace, &oracle))
}

/// `κ = 𝓔(V) / ‖v‖²_{H^s}`; `None` for `v = 0`.
pub fn energy_kappa(sol: &ExtensionSolution, basis: &EigenBasis, s: f64, v: &GridFunction) -> Result<Option<f64>> {
    let hs = basis.hs_norm_sq(s, v)?;
    Ok(if hs > 0.0 { Some(sol.energy / hs) } else { None })
}

#[derive(Debug, Clone, Serialize)]
pub struct KappaBatch {
    pub kappas: Vec<f64>,
    pub mean: f64,
    /// `(max − min) / mean`.
    pub spread: f64,
}

/// Energy proportionality constant over a batch of nonzero data.
pub fn energy_kappa_batch(mesh: &ExtensionMesh, data: &[GridFunction]) -> Result<KappaBatch> {
    let mut kappas = Vec::with_capacity(data.len());
    for v in data {
        let sol = solve_extension(mesh, v)?;
        if let Some(k) = energy_kappa(&sol, &mesh.base, mesh.s, v)? {
            kappas.push(k);
        }
    }
    if kappas.is_empty() {
        return Err(Error::Precondition("batch has no nonzero data".to_string()));
    }
    let mean = kappas.iter().sum::<f64>() / kappas.len() as f64;
    let (lo, hi) = kappas
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), k| (a.min(*k), b.max(*k)));
    Ok(KappaBatch {
        spread: (hi - lo) / mean,
        mean,
        kappas,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RefinementRow {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "Y")]
    pub height: f64,
    pub s: f64,
    pub mode_count: usize,
    pub trace_rel_error: f64,
    pub energy_kappa: f64,
}

/// Trace error and `κ` for `v` on graded meshes with each `M` in `levels`.
pub fn refinement_study(base: &Arc<EigenBasis>, s: f64, v: &GridFunction, levels: &[usize]) -> Result<Vec<RefinementRow>> {
    refinement_study_with(base, s, v, levels, None, None)
}

/// [`refinement_study`] with an explicit height and grading ratio.
pub fn refinement_study_with(
    base: &Arc<EigenBasis>,
    s: f64,
    v: &GridFunction,
    levels: &[usize],
    height: Option<f64>,
    ratio: Option<f64>,
) -> Result<Vec<RefinementRow>> {
    let op = FracOperator::power(base.clone(), s)?;
    let coeffs = base.analyze(v.values());
    let mode_count = coeffs.iter().filter(|c| c.abs() > 1e-12).count();
    levels
        .iter()
        .map(|&m| {
            let mesh = ExtensionMesh::graded(base.clone(), s, m, height, ratio)?;
            let sol = solve_extension(&mesh, v)?;
            let tr = verify_trace_identity(&sol, &op, v)?;
            Ok(RefinementRow {
                m,
                height: mesh.height(),
                s,
                mode_count,
                trace_rel_error: tr.rel_error,
                energy_kappa: energy_kappa(&sol, base, s, v)?.unwrap_or(f64::NAN),
            })
        })
        .collect()
}

/// True when each row's trace error is strictly below the previous one.
pub fn errors_decrease(rows: &[RefinementRow]) -> bool {
    rows.windows(2).all(|w| w[1].trace_rel_error < w[0].trace_rel_error)
}
