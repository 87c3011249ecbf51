use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{DomainSpec, GridFunction};

use super::TimeGrid;

/// `f(x, t)` evaluated at node coordinates (one entry per axis) and time.
pub type AnalyticFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// A time-dependent force.
#[derive(Clone)]
pub enum Source {
    /// Constant in time.
    Constant(GridFunction),
    /// Samples `(t_i, f_i)` joined by linear interpolation.
    Samples {
        times: Vec<f64>,
        values: Vec<GridFunction>,
    },
    /// Closed-form profile, averaged by composite trapezoid with `substeps`
    /// panels per time step.
    Analytic {
        domain: DomainSpec,
        f: AnalyticFn,
        substeps: usize,
    },
}

impl fmt::Debug for Source {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Constant(g) => fm.debug_tuple("Constant").field(&g.len()).finish(),
            Source::Samples { times, .. } => fm.debug_struct("Samples").field("times", times).finish(),
            Source::Analytic { substeps, .. } => {
                fm.debug_struct("Analytic").field("substeps", substeps).finish()
            }
        }
    }
}

impl Source {
    pub fn analytic(domain: DomainSpec, f: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        Source::Analytic {
            domain,
            f: Arc::new(f),
            substeps: 16,
        }
    }

    pub fn samples(times: Vec<f64>, values: Vec<GridFunction>) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(Error::InvalidSource(
                "need at least two samples, one grid function per time".to_string(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidSource("sample times must increase strictly".to_string()));
        }
        for v in &values[1..] {
            v.ensure_same_domain(&values[0])?;
        }
        Ok(Source::Samples { times, values })
    }

    pub fn domain(&self) -> DomainSpec {
        match self {
            Source::Constant(g) => *g.domain(),
            Source::Samples { values, .. } => *values[0].domain(),
            Source::Analytic { domain, .. } => *domain,
        }
    }

    /// Pointwise value at time `t` (linear interpolation for samples).
    pub fn eval(&self, t: f64) -> Result<GridFunction> {
        match self {
            Source::Constant(g) => Ok(g.clone()),
            Source::Samples { times, values } => {
                let last = times.len() - 1;
                if t < times[0] || t > times[last] {
                    return Err(Error::InvalidSource(format!(
                        "time {t} outside sampled range [{}, {}]",
                        times[0], times[last]
                    )));
                }
                let i = times.partition_point(|x| *x <= t).clamp(1, last);
                let w = (t - times[i - 1]) / (times[i] - times[i - 1]);
                values[i - 1].zip_map(&values[i], |a, b| (1.0 - w) * a + w * b)
            }
            Source::Analytic { domain, f, .. } => {
                let dim = domain.dim();
                let v = (0..domain.len())
                    .map(|j| f(&domain.coords(j)[..dim], t))
                    .collect();
                GridFunction::new(*domain, v)
            }
        }
    }
}

/// `t ↦ ∫ₐᵇ F` by trapezoid on the given breakpoints.
fn trapezoid(src: &Source, nodes: &[f64]) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; src.domain().len()];
    let mut prev = src.eval(nodes[0])?;
    for w in nodes.windows(2) {
        let next = src.eval(w[1])?;
        let dt = 0.5 * (w[1] - w[0]);
        for ((a, p), q) in acc.iter_mut().zip(prev.values()).zip(next.values()) {
            *a += dt * (p + q);
        }
        prev = next;
    }
    Ok(acc)
}

/// Step averages `f_k = (1/τ_k) ∫_{t_{k−1}}^{t_k} f(·, r) dr`.
///
/// Sampled sources are integrated exactly (the interpolant is piecewise
/// linear), but must cover `[0, T]` with spacing no coarser than the
/// smallest step.
pub fn average_source(src: &Source, grid: &TimeGrid) -> Result<Vec<GridFunction>> {
    let d = src.domain();
    let t = grid.times();
    match src {
        Source::Constant(g) => Ok(vec![g.clone(); grid.steps()]),
        Source::Samples { times, .. } => {
            let horizon = grid.horizon();
            if times[0] > 0.0 || *times.last().unwrap() < horizon {
                return Err(Error::InvalidSource(format!(
                    "samples cover [{}, {}] but the grid needs [0, {horizon}]",
                    times[0],
                    times.last().unwrap()
                )));
            }
            let lo = times.partition_point(|x| *x <= 0.0).saturating_sub(1);
            let hi = times.partition_point(|x| *x < horizon).min(times.len() - 1);
            let spacing = times[lo..=hi]
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(0.0f64, f64::max);
            if spacing > grid.tau_min() * (1.0 + 1e-12) {
                return Err(Error::InvalidSource(format!(
                    "sample spacing {spacing} is coarser than the smallest step {}",
                    grid.tau_min()
                )));
            }
            let mut out = Vec::with_capacity(grid.steps());
            for w in t.windows(2) {
                let mut nodes = vec![w[0]];
                nodes.extend(times.iter().copied().filter(|x| *x > w[0] && *x < w[1]));
                nodes.push(w[1]);
                let acc = trapezoid(src, &nodes)?;
                let tau = w[1] - w[0];
                out.push(GridFunction::new(d, acc.into_iter().map(|a| a / tau).collect())?);
            }
            Ok(out)
        }
        Source::Analytic { substeps, .. } => {
            if *substeps == 0 {
                return Err(Error::InvalidSource("substeps must be positive".to_string()));
            }
            let mut out = Vec::with_capacity(grid.steps());
            for w in t.windows(2) {
                let tau = w[1] - w[0];
                let nodes: Vec<f64> = (0..=*substeps)
                    .map(|i| w[0] + tau * i as f64 / *substeps as f64)
                    .collect();
                let acc = trapezoid(src, &nodes)?;
                out.push(GridFunction::new(d, acc.into_iter().map(|a| a / tau).collect())?);
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> DomainSpec {
        DomainSpec::interval(1.0, 5).unwrap()
    }

    #[test]
    fn constant_source_is_reproduced() {
        let g = GridFunction::from_fn(line(), |x| x[0] * 3.0).unwrap();
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let fk = average_source(&Source::Constant(g.clone()), &grid).unwrap();
        assert_eq!(fk.len(), 4);
        assert!(fk.iter().all(|f| f.values() == g.values()));
    }

    #[test]
    fn linear_in_time_averages_to_midpoint() {
        let grid = TimeGrid::uniform(1.0, 1).unwrap();
        let analytic = Source::analytic(line(), |x, t| x[0] * t);
        let f1 = &average_source(&analytic, &grid).unwrap()[0];
        let g = GridFunction::from_fn(line(), |x| x[0]).unwrap();
        assert!((f1 - &(&g * 0.5)).max_abs() < 1e-15);

        let samples = Source::samples(
            vec![0.0, 1.0],
            vec![GridFunction::zeros(line()), g.clone()],
        )
        .unwrap();
        let f1 = &average_source(&samples, &grid).unwrap()[0];
        assert!((f1 - &(&g * 0.5)).max_abs() < 1e-15);
    }

    #[test]
    fn sine_average_converges_quadratically() {
        let grid = TimeGrid::uniform(0.3, 3).unwrap();
        let exact = |k: usize| {
            let (a, b) = (0.1 * k as f64, 0.1 * (k + 1) as f64);
            (a.cos() - b.cos()) / 0.1
        };
        let err = |sub: usize| {
            let src = Source::Analytic {
                domain: line(),
                f: Arc::new(|x: &[f64], t: f64| x[0] * t.sin()),
                substeps: sub,
            };
            let fk = average_source(&src, &grid).unwrap();
            let d = line();
            (0..3)
                .flat_map(|k| {
                    let fk = &fk[k];
                    (0..5).map(move |j| (fk.values()[j] - d.coords(j)[0] * exact(k)).abs())
                })
                .fold(0.0f64, f64::max)
        };
        let (e4, e8) = (err(4), err(8));
        assert!(e8 < 1e-5);
        let ratio = e8 / e4;
        assert!((ratio - 0.25).abs() < 0.02, "ratio {ratio}");
    }

    #[test]
    fn coarse_or_short_samples_are_rejected() {
        let z = GridFunction::zeros(line());
        let src = Source::samples(vec![0.0, 1.0], vec![z.clone(), z.clone()]).unwrap();
        assert!(average_source(&src, &TimeGrid::uniform(1.0, 4).unwrap()).is_err());
        assert!(average_source(&src, &TimeGrid::uniform(2.0, 1).unwrap()).is_err());
        assert!(Source::samples(vec![0.0, 0.0], vec![z.clone(), z]).is_err());
    }

    #[test]
    fn interpolation_between_samples() {
        let a = GridFunction::constant(line(), 1.0);
        let b = GridFunction::constant(line(), 3.0);
        let src = Source::samples(vec![0.0, 2.0], vec![a, b]).unwrap();
        assert!((src.eval(0.5).unwrap().values()[0] - 1.5).abs() < 1e-15);
        assert!(src.eval(2.5).is_err());
    }
}
