//! Birth-death-move Metropolis-Hastings over parent configurations.
//!
//! Two targets share the same mechanics: the parent density alone (used to
//! draw auxiliary configurations and to simulate parents), and the parent
//! density times the offspring likelihood (the latent-parent update).
//!
//! A birth proposes a point uniformly on the window and is accepted with
//! `h(C+) |S| / (h(C) (m + 1))`. A death removes a uniformly chosen point and
//! is accepted with `h(C-) k / (h(C) |S|)`, where `k = m` for the textbook
//! sampler and `k = m - 1` for the variant selected by
//! [`BdConvention::Shifted`]. A move relocates one point uniformly and is
//! accepted with `h(C') / h(C)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::proposal::BdMix;
use super::state::{BdMove, OffspringCache, ParentConfig};
use crate::geometry::{Point, Window};
use crate::model::ModelParams;

/// Which count enters the death acceptance ratio.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BdConvention {
    /// `(m - 1) / |S|` with `m` the pre-removal count. A single point can
    /// never be removed and the stationary law is not the parent density.
    Shifted,
    /// `m / |S|`; reversible with respect to the parent density.
    #[default]
    Standard,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BdSettings {
    #[serde(default)]
    pub convention: BdConvention,
    #[serde(default)]
    pub mix: BdMix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    Birth,
    Death,
    Move,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepOutcome {
    pub kind: StepKind,
    pub accepted: bool,
}

/// Proposal and acceptance counts per step kind.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BdTally {
    pub proposed: [u64; 3],
    pub accepted: [u64; 3],
}

impl BdTally {
    pub fn record(&mut self, o: StepOutcome) {
        let k = o.kind as usize;
        self.proposed[k] += 1;
        if o.accepted {
            self.accepted[k] += 1;
        }
    }

    pub fn rate(&self, kind: StepKind) -> f64 {
        let k = kind as usize;
        if self.proposed[k] == 0 {
            0.0
        } else {
            self.accepted[k] as f64 / self.proposed[k] as f64
        }
    }
}

/// A density over parent configurations that can score elementary moves.
#[allow(clippy::len_without_is_empty)]
pub trait BdTarget {
    fn len(&self) -> usize;

    /// Log-density change if `mv` were applied.
    fn log_delta(&mut self, mv: &BdMove) -> f64;

    /// Applies `mv`; must follow [`BdTarget::log_delta`] for the same move.
    fn commit(&mut self, mv: &BdMove);
}

/// `h(C | kappa, theta1, theta2)`.
pub struct PriorTarget<'a> {
    pub config: &'a mut ParentConfig,
    pub params: &'a ModelParams,
}

impl BdTarget for PriorTarget<'_> {
    fn len(&self) -> usize {
        self.config.len()
    }

    fn log_delta(&mut self, mv: &BdMove) -> f64 {
        self.config.delta(mv, self.params)
    }

    fn commit(&mut self, mv: &BdMove) {
        self.config.commit(mv, self.params);
    }
}

/// Latent parents with their offspring likelihood cache.
#[derive(Clone, Debug)]
pub struct PosteriorState {
    pub(crate) parents: ParentConfig,
    pub(crate) offspring: OffspringCache,
}

impl PosteriorState {
    pub fn new(offspring: &[Point], parents: Vec<Point>, window: &Window, params: &ModelParams) -> Self {
        let cache = OffspringCache::new(offspring, &parents, window, params.omega());
        Self {
            parents: ParentConfig::new(parents, params),
            offspring: cache,
        }
    }

    pub fn parents(&self) -> &[Point] {
        self.parents.points()
    }

    /// `ln f(X | C, alpha, omega) + ln h(C | kappa, theta1, theta2)`.
    pub fn log_target(&self, window: &Window, params: &ModelParams) -> f64 {
        self.offspring.log_f(window, params.alpha()) + self.parents.log_h(params)
    }

    pub(crate) fn refresh_parents(&mut self, params: &ModelParams) {
        self.parents.refresh(params);
    }
}

/// `f(X | C, alpha, omega) h(C | kappa, theta1, theta2)` for fixed offspring `X`.
pub struct PosteriorTarget<'a> {
    pub state: &'a mut PosteriorState,
    pub offspring: &'a [Point],
    pub window: &'a Window,
    pub params: &'a ModelParams,
}

impl BdTarget for PosteriorTarget<'_> {
    fn len(&self) -> usize {
        self.state.parents.len()
    }

    fn log_delta(&mut self, mv: &BdMove) -> f64 {
        let df = self.state.offspring.delta(
            mv,
            self.offspring,
            self.state.parents.points(),
            self.window,
            self.params.alpha(),
        );
        if df == f64::NEG_INFINITY {
            return df;
        }
        let dh = self.state.parents.delta(mv, self.params);
        if dh == f64::NEG_INFINITY {
            return dh;
        }
        df + dh
    }

    fn commit(&mut self, mv: &BdMove) {
        self.state.parents.commit(mv, self.params);
        self.state
            .offspring
            .commit(mv, self.offspring, self.state.parents.points());
    }
}

/// Log Metropolis-Hastings ratio of `mv` from the target's current state.
pub fn log_acceptance<T: BdTarget>(target: &mut T, mv: &BdMove, area: f64, settings: &BdSettings) -> f64 {
    let m = target.len() as f64;
    let mix = &settings.mix;
    let delta = target.log_delta(mv);
    match mv {
        BdMove::Birth(_) => delta + area.ln() - (m + 1.0).ln() + (mix.death / mix.birth).ln(),
        BdMove::Death(_) => {
            let k = match settings.convention {
                BdConvention::Standard => m,
                BdConvention::Shifted => m - 1.0,
            };
            delta + k.ln() - area.ln() + (mix.birth / mix.death).ln()
        }
        BdMove::Relocate(..) => delta,
    }
}

/// One birth, death or move step. Death and move on an empty configuration
/// are no-ops counted as rejections.
pub fn bd_step<T: BdTarget, R: Rng + ?Sized>(
    target: &mut T,
    window: &Window,
    settings: &BdSettings,
    rng: &mut R,
) -> StepOutcome {
    let m = target.len();
    let u: f64 = rng.random();
    let kind = if u < settings.mix.birth {
        StepKind::Birth
    } else if u < settings.mix.birth + settings.mix.death {
        StepKind::Death
    } else {
        StepKind::Move
    };
    let mv = match kind {
        StepKind::Birth => BdMove::Birth(window.sample_uniform(rng)),
        _ if m == 0 => return StepOutcome { kind, accepted: false },
        StepKind::Death => BdMove::Death(rng.random_range(0..m)),
        StepKind::Move => {
            let idx = rng.random_range(0..m);
            BdMove::Relocate(idx, window.sample_uniform(rng))
        }
    };
    let log_ratio = log_acceptance(target, &mv, window.area(), settings);
    let accepted = accept(log_ratio, rng);
    if accepted {
        target.commit(&mv);
    }
    StepOutcome { kind, accepted }
}

/// Log-space Metropolis test; NaN rejects.
#[inline]
pub(crate) fn accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    if log_ratio >= 0.0 {
        return true;
    }
    if !(log_ratio > f64::NEG_INFINITY) {
        return false;
    }
    rng.random::<f64>().ln() < log_ratio
}

/// One elementary step targeting the parent density alone.
pub fn bd_step_parent_prior<R: Rng + ?Sized>(
    config: &mut ParentConfig,
    params: &ModelParams,
    window: &Window,
    settings: &BdSettings,
    rng: &mut R,
) -> StepOutcome {
    let mut target = PriorTarget { config, params };
    bd_step(&mut target, window, settings, rng)
}

/// One elementary step targeting parents given the observed offspring.
pub fn bd_step_parent_posterior<R: Rng + ?Sized>(
    state: &mut PosteriorState,
    offspring: &[Point],
    params: &ModelParams,
    window: &Window,
    settings: &BdSettings,
    rng: &mut R,
) -> StepOutcome {
    let mut target = PosteriorTarget {
        state,
        offspring,
        window,
        params,
    };
    bd_step(&mut target, window, settings, rng)
}

/// Runs `steps` prior-target steps in place.
pub fn run_prior_chain<R: Rng + ?Sized>(
    config: &mut ParentConfig,
    params: &ModelParams,
    window: &Window,
    settings: &BdSettings,
    steps: usize,
    rng: &mut R,
) -> BdTally {
    let mut tally = BdTally::default();
    for _ in 0..steps {
        tally.record(bd_step_parent_prior(config, params, window, settings, rng));
    }
    tally
}
