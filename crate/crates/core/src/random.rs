//! Seeded generators for test and suite inputs.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::grid::{DomainSpec, GridFunction};
use crate::obstacle::ObstacleProblem;
use crate::operator::FracOperator;
use crate::spectral::EigenBasis;

/// I.i.d. normal nodal values with standard deviation `amp`.
pub fn white_noise<R: Rng + ?Sized>(domain: DomainSpec, amp: f64, rng: &mut R) -> GridFunction {
    let v = (0..domain.len())
        .map(|_| amp * rng.sample::<f64, _>(StandardNormal))
        .collect();
    GridFunction::from_raw(domain, v)
}

/// Random spectral synthesis with coefficients `N(0,1)·amp/(1+k)^decay`,
/// where `k` is the mode index.
pub fn smooth_field<R: Rng + ?Sized>(basis: &EigenBasis, amp: f64, decay: f64, rng: &mut R) -> GridFunction {
    let c: Vec<f64> = (0..basis.len())
        .map(|k| amp * rng.sample::<f64, _>(StandardNormal) / (1.0 + k as f64).powf(decay))
        .collect();
    GridFunction::from_raw(*basis.domain(), basis.synthesize(&c))
}

/// A random obstacle problem whose contact set is typically a proper,
/// nonempty subset: a smooth obstacle poking above zero, and a force that
/// mixes a smooth part, a downward offset and a little noise.
pub fn random_obstacle_problem<R: Rng + ?Sized>(op: &FracOperator, rng: &mut R) -> Result<ObstacleProblem> {
    let basis = op.basis();
    let d = *basis.domain();
    let bump = smooth_field(basis, 1.0, 1.5, rng);
    let top = bump.max_abs().max(1e-12);
    let lift: f64 = rng.random_range(-0.3..0.3);
    let psi = bump.map(|v| v / top + lift);

    let offset: f64 = rng.random_range(-10.0..2.0);
    let smooth = smooth_field(basis, 5.0, 1.0, rng);
    let noise = white_noise(d, 0.5, rng);
    let f = (&smooth + &noise).map(|v| v + offset);
    ObstacleProblem::new(op.clone(), f, psi)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn generators_are_seed_deterministic() {
        let d = DomainSpec::interval(1.0, 8).unwrap();
        let b = Arc::new(EigenBasis::build(d).unwrap());
        let op = FracOperator::new(b, 0.5, 0.0).unwrap();
        let p1 = random_obstacle_problem(&op, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let p2 = random_obstacle_problem(&op, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(p1.force().values(), p2.force().values());
        assert_eq!(p1.obstacle().values(), p2.obstacle().values());
        assert!(p1.obstacle().max_value() > 0.0);
    }
}
