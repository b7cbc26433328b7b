use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Bounds, PriorSpec};

/// Random-walk step sizes, birth/death/move mix, and auxiliary-chain length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProposalSpec {
    pub alpha_step: f64,
    pub omega_step: f64,
    pub kappa_step: f64,
    pub theta1_step: f64,
    pub theta2_step: f64,
    #[serde(default)]
    pub mix: BdMix,
    /// Inner birth-death steps per DMH update, as a multiple of the parent count.
    #[serde(default = "default_inner_multiplier")]
    pub inner_multiplier: f64,
    #[serde(default = "default_inner_min")]
    pub inner_min: usize,
    /// Robbins-Monro tuning of the step scales during burn-in.
    #[serde(default = "default_adapt")]
    pub adapt: bool,
    #[serde(default = "default_target_acceptance")]
    pub target_acceptance: f64,
}

fn default_inner_multiplier() -> f64 {
    1.0
}
fn default_inner_min() -> usize {
    100
}
fn default_adapt() -> bool {
    true
}
fn default_target_acceptance() -> f64 {
    0.23
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BdMix {
    pub birth: f64,
    pub death: f64,
    #[serde(rename = "move")]
    pub relocate: f64,
}

impl Default for BdMix {
    fn default() -> Self {
        Self {
            birth: 1.0 / 3.0,
            death: 1.0 / 3.0,
            relocate: 1.0 / 3.0,
        }
    }
}

impl ProposalSpec {
    /// Step sizes at 5% of each prior range.
    pub fn for_priors(priors: &PriorSpec) -> Self {
        let frac = 0.05;
        Self {
            alpha_step: frac * priors.alpha.width(),
            omega_step: frac * priors.omega.width(),
            kappa_step: frac * priors.kappa.width(),
            theta1_step: frac * priors.theta1.width(),
            theta2_step: frac * priors.theta2.width(),
            mix: BdMix::default(),
            inner_multiplier: default_inner_multiplier(),
            inner_min: default_inner_min(),
            adapt: true,
            target_acceptance: default_target_acceptance(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let steps = [
            self.alpha_step,
            self.omega_step,
            self.kappa_step,
            self.theta1_step,
            self.theta2_step,
        ];
        if !steps.iter().all(|s| *s > 0.0 && s.is_finite()) {
            return Err(Error::Config("proposal step sizes must be positive".into()));
        }
        let BdMix { birth, death, relocate } = self.mix;
        if [birth, death, relocate].iter().any(|p| !(*p >= 0.0))
            || (birth + death + relocate - 1.0).abs() > 1e-9
            || birth == 0.0
            || death == 0.0
        {
            return Err(Error::Config(
                "birth/death/move mix must be non-negative, sum to 1, with birth and death > 0".into(),
            ));
        }
        if !(self.inner_multiplier >= 0.0) || self.inner_min == 0 {
            return Err(Error::Config("auxiliary chain length must be positive".into()));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(Error::Config("target acceptance must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// Number of elementary steps in the auxiliary chain for `m` current parents.
    pub fn inner_length(&self, m: usize) -> usize {
        ((self.inner_multiplier * m as f64).ceil() as usize).max(self.inner_min)
    }
}

/// Gaussian random walk folded back into the prior interval. Reflection keeps
/// the proposal symmetric.
pub fn reflected_step<R: Rng + ?Sized>(rng: &mut R, value: f64, step: f64, bounds: &Bounds) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    bounds.reflect(value + step * z)
}

/// Robbins-Monro adaptation of a log step scale toward a target acceptance rate.
#[derive(Clone, Copy, Debug)]
pub struct StepAdapter {
    log_scale: f64,
    target: f64,
    frozen: bool,
}

impl StepAdapter {
    pub fn new(target: f64) -> Self {
        Self {
            log_scale: 0.0,
            target,
            frozen: false,
        }
    }

    pub fn scale(&self) -> f64 {
        self.log_scale.exp()
    }

    pub fn update(&mut self, iteration: usize, accepted: bool) {
        if self.frozen {
            return;
        }
        let gain = 1.0 / ((iteration + 1) as f64).powf(0.6);
        let hit = if accepted { 1.0 } else { 0.0 };
        self.log_scale = (self.log_scale + gain * (hit - self.target)).clamp(-30.0, 5.0);
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reflected_steps_stay_in_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = Bounds::new(1.0, 3.0);
        let mut v = 2.9;
        for _ in 0..10_000 {
            v = reflected_step(&mut rng, v, 5.0, &b);
            assert!(b.contains(v));
        }
    }

    #[test]
    fn default_spec_is_valid() {
        let p = ProposalSpec::for_priors(&PriorSpec::for_area(6.0516e8));
        p.validate().unwrap();
        assert_eq!(p.inner_length(56), 100);
        assert_eq!(p.inner_length(140), 140);
        let mut bad = p;
        bad.mix.birth = 0.5;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn adapter_moves_toward_target() {
        let mut a = StepAdapter::new(0.23);
        for t in 0..200 {
            a.update(t, false);
        }
        assert!(a.scale() < 1.0);
        let s = a.scale();
        a.freeze();
        a.update(300, true);
        assert_eq!(a.scale(), s);
    }
}
