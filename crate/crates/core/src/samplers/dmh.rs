//! Double Metropolis-Hastings update of the parent parameters `(kappa, theta1, theta2)`.
//!
//! The parent density has an intractable normalizing function. An auxiliary
//! configuration `A` is drawn by a short birth-death chain at the proposed
//! parameters started from the current parents, and the ratio
//! `h(C|t') h(A|t) / (h(C|t) h(A|t'))` replaces the exact likelihood ratio.
//! Priors are uniform and the reflected walk is symmetric, so neither enters.

use rand::Rng;

use super::birth_death::{accept, run_prior_chain, BdSettings};
use super::proposal::{reflected_step, ProposalSpec};
use super::state::ParentConfig;
use crate::geometry::{Point, Window};
use crate::model::{log_h_points, ModelParams, PriorSpec};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DmhOutcome {
    pub params: ModelParams,
    pub accepted: bool,
    pub log_ratio: f64,
}

/// `[ln h(C|t') - ln h(C|t)] + [ln h(A|t) - ln h(A|t')]`.
pub fn dmh_log_ratio(c: &[Point], a: &[Point], current: &ModelParams, proposed: &ModelParams) -> f64 {
    let on_c = log_h_points(c, proposed) - log_h_points(c, current);
    let on_a = log_h_points(a, current) - log_h_points(a, proposed);
    let r = on_c + on_a;
    if r.is_nan() {
        f64::NEG_INFINITY
    } else {
        r
    }
}

/// Draws the auxiliary configuration at `proposed`, starting from `c`.
pub fn auxiliary_draw<R: Rng + ?Sized>(
    c: &[Point],
    proposed: &ModelParams,
    window: &Window,
    settings: &BdSettings,
    steps: usize,
    rng: &mut R,
) -> Vec<Point> {
    let mut aux = ParentConfig::new(c.to_vec(), proposed);
    run_prior_chain(&mut aux, proposed, window, settings, steps, rng);
    aux.points().to_vec()
}

/// DMH accept/reject for an explicit proposal.
pub fn dmh_step_with_proposal<R: Rng + ?Sized>(
    c: &[Point],
    current: &ModelParams,
    proposed: &ModelParams,
    window: &Window,
    settings: &BdSettings,
    inner_steps: usize,
    rng: &mut R,
) -> DmhOutcome {
    let a = auxiliary_draw(c, proposed, window, settings, inner_steps, rng);
    let log_ratio = dmh_log_ratio(c, &a, current, proposed);
    let accepted = accept(log_ratio, rng);
    DmhOutcome {
        params: if accepted { *proposed } else { *current },
        accepted,
        log_ratio,
    }
}

/// Reflected random walk on `(kappa, theta1, theta2)` followed by a DMH test.
/// `scale` multiplies the configured step sizes. A proposal whose pasting
/// constants cannot be solved is rejected.
#[allow(clippy::too_many_arguments)]
pub fn dmh_update_parent_params<R: Rng + ?Sized>(
    c: &[Point],
    params: &ModelParams,
    priors: &PriorSpec,
    proposal: &ProposalSpec,
    scale: f64,
    window: &Window,
    settings: &BdSettings,
    rng: &mut R,
) -> DmhOutcome {
    let kappa = reflected_step(rng, params.kappa(), scale * proposal.kappa_step, &priors.kappa);
    let theta1 = reflected_step(rng, params.theta1(), scale * proposal.theta1_step, &priors.theta1);
    let theta2 = reflected_step(rng, params.theta2(), scale * proposal.theta2_step, &priors.theta2);
    let proposed = match params.with_parent(kappa, theta1, theta2) {
        Ok(p) => p,
        Err(e) => {
            log::debug!("parent proposal rejected: {e}");
            return DmhOutcome {
                params: *params,
                accepted: false,
                log_ratio: f64::NEG_INFINITY,
            };
        }
    };
    let steps = proposal.inner_length(c.len());
    dmh_step_with_proposal(c, params, &proposed, window, settings, steps, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_proposal_has_zero_log_ratio() {
        let w = Window::square(5000.0).unwrap();
        let p = ModelParams::new(4.0, 300.0, 1e-6, 1.5, 400.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c: Vec<Point> = (0..15).map(|_| w.sample_uniform(&mut rng)).collect();
        for _ in 0..50 {
            let o = dmh_step_with_proposal(&c, &p, &p, &w, &BdSettings::default(), 100, &mut rng);
            assert_eq!(o.log_ratio, 0.0);
            assert!(o.accepted);
        }
    }

    #[test]
    fn stronger_attraction_favoured_when_auxiliary_is_sparser() {
        // two parents at distance theta2 in C, a single point in A
        let cur = ModelParams::new(4.0, 300.0, 1e-6, 1.5, 400.0).unwrap();
        let prop = cur.with_parent(1e-6, 2.5, 400.0).unwrap();
        let c = [Point::new(0.0, 0.0), Point::new(400.0, 0.0)];
        let a = [Point::new(100.0, 100.0)];
        let r = dmh_log_ratio(&c, &a, &cur, &prop);
        // hand evaluation: the pair sits at the parabola peak, ln phi = ln theta1
        // for each point, and the single auxiliary point has no neighbours
        let expected = 2.0 * (2.5f64.ln() - 1.5f64.ln());
        assert!((r - expected).abs() < 1e-12);
        assert!(r > 0.0);
    }

    #[test]
    fn kappa_only_ratio_depends_on_count_difference() {
        let cur = ModelParams::new(4.0, 300.0, 1e-6, 1.5, 400.0).unwrap();
        let prop = cur.with_parent(2e-6, 1.5, 400.0).unwrap();
        let c = [Point::new(0.0, 0.0), Point::new(5000.0, 0.0), Point::new(0.0, 5000.0)];
        let a = [Point::new(0.0, 0.0)];
        let r = dmh_log_ratio(&c, &a, &cur, &prop);
        assert!((r - 2.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn updates_stay_in_prior_box() {
        let w = Window::square(5000.0).unwrap();
        let priors = PriorSpec::for_area(w.area());
        let proposal = ProposalSpec::for_priors(&priors);
        let mut p = priors.midpoint().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c: Vec<Point> = (0..10).map(|_| w.sample_uniform(&mut rng)).collect();
        for _ in 0..200 {
            let o = dmh_update_parent_params(&c, &p, &priors, &proposal, 4.0, &w, &BdSettings::default(), &mut rng);
            p = o.params;
            assert!(priors.contains(&p));
        }
    }
}
