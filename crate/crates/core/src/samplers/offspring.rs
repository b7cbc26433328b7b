//! Random-walk Metropolis update of the offspring parameters `(alpha, omega)`.

use rand::Rng;

use super::birth_death::accept;
use super::proposal::{reflected_step, ProposalSpec};
use crate::geometry::{Point, Window};
use crate::model::{log_kernel_product, ModelParams, PriorSpec};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OffspringOutcome {
    pub params: ModelParams,
    pub accepted: bool,
    pub log_ratio: f64,
}

/// `ln f(X | C, alpha', omega') - ln f(X | C, alpha, omega)`.
pub fn offspring_log_ratio(
    offspring: &[Point],
    parents: &[Point],
    window: &Window,
    current: &ModelParams,
    proposed: &ModelParams,
) -> f64 {
    // the |S| term cancels; leaving it out keeps the difference exact at large areas
    let part = |p: &ModelParams| {
        let product = log_kernel_product(offspring, parents, p.alpha(), p.omega());
        if product == f64::NEG_INFINITY {
            return product;
        }
        let mass: f64 = parents.iter().map(|c| window.gaussian_mass(c, p.omega())).sum();
        product - p.alpha() * mass
    };
    let new = part(proposed);
    if new == f64::NEG_INFINITY {
        return new;
    }
    let r = new - part(current);
    if r.is_nan() {
        f64::NEG_INFINITY
    } else {
        r
    }
}

/// Accept/reject for an explicit `(alpha, omega)` proposal.
pub fn offspring_step_with_proposal<R: Rng + ?Sized>(
    offspring: &[Point],
    parents: &[Point],
    window: &Window,
    current: &ModelParams,
    proposed: &ModelParams,
    rng: &mut R,
) -> OffspringOutcome {
    let log_ratio = offspring_log_ratio(offspring, parents, window, current, proposed);
    let accepted = accept(log_ratio, rng);
    OffspringOutcome {
        params: if accepted { *proposed } else { *current },
        accepted,
        log_ratio,
    }
}

/// Joint reflected random walk on `(alpha, omega)`; `scale` multiplies the
/// configured step sizes.
#[allow(clippy::too_many_arguments)]
pub fn mh_update_offspring_params<R: Rng + ?Sized>(
    offspring: &[Point],
    parents: &[Point],
    window: &Window,
    params: &ModelParams,
    priors: &PriorSpec,
    proposal: &ProposalSpec,
    scale: f64,
    rng: &mut R,
) -> OffspringOutcome {
    let proposed = propose(params, priors, proposal, scale, rng);
    offspring_step_with_proposal(offspring, parents, window, params, &proposed, rng)
}

pub(crate) fn propose<R: Rng + ?Sized>(
    params: &ModelParams,
    priors: &PriorSpec,
    proposal: &ProposalSpec,
    scale: f64,
    rng: &mut R,
) -> ModelParams {
    let alpha = reflected_step(rng, params.alpha(), scale * proposal.alpha_step, &priors.alpha);
    let omega = reflected_step(rng, params.omega(), scale * proposal.omega_step, &priors.omega);
    // reflection keeps both strictly inside a positive prior box
    params
        .with_offspring(alpha, omega)
        .expect("reflected offspring parameters are positive")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn identity_proposal_always_accepted() {
        let w = Window::square(2000.0).unwrap();
        let p = ModelParams::new(4.0, 100.0, 1e-6, 1.5, 150.0).unwrap();
        let x = [Point::new(500.0, 500.0), Point::new(520.0, 480.0)];
        let c = [Point::new(510.0, 505.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let o = offspring_step_with_proposal(&x, &c, &w, &p, &p, &mut rng);
            assert_eq!(o.log_ratio, 0.0);
            assert!(o.accepted);
        }
    }

    #[test]
    fn empty_offspring_penalizes_larger_alpha() {
        let w = Window::square(1e6).unwrap();
        let p = ModelParams::new(4.0, 100.0, 1e-6, 1.5, 150.0).unwrap();
        let q = p.with_offspring(6.0, 100.0).unwrap();
        let c = [Point::new(5e5, 5e5), Point::new(2e5, 7e5)];
        let r = offspring_log_ratio(&[], &c, &w, &p, &q);
        let mass: f64 = c.iter().map(|x| w.gaussian_mass(x, 100.0)).sum();
        assert!((r + 2.0 * mass).abs() < 1e-12);
        assert!(r < 0.0);
    }

    #[test]
    fn matches_naive_log_likelihood_difference() {
        let w = Window::square(3000.0).unwrap();
        let p = ModelParams::new(4.0, 200.0, 1e-6, 1.5, 300.0).unwrap();
        let q = p.with_offspring(5.5, 260.0).unwrap();
        let c = [Point::new(1200.0, 1500.0)];
        let x = [Point::new(1100.0, 1450.0), Point::new(1350.0, 1600.0)];
        let naive = |a: f64, om: f64| {
            let mass = w.gaussian_mass(&c[0], om);
            let mut s = -a * mass;
            for xi in &x {
                let d2 = xi.dist2(&c[0]);
                s += (a * (-d2 / (2.0 * om * om)).exp() / (2.0 * PI * om * om)).ln();
            }
            s
        };
        let r = offspring_log_ratio(&x, &c, &w, &p, &q);
        assert!((r - (naive(5.5, 260.0) - naive(4.0, 200.0))).abs() < 1e-12);
    }
}
