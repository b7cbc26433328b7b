//! Three-block sampler: offspring parameters, parent parameters, latent parents.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::birth_death::{
    accept, bd_step, BdConvention, BdSettings, BdTally, PosteriorState, PosteriorTarget, StepKind,
};
use super::dmh::dmh_update_parent_params;
use super::offspring::propose;
use super::proposal::{ProposalSpec, StepAdapter};
use super::state::OffspringCache;
use crate::error::{Error, Result};
use crate::geometry::{Point, PointPattern, Window};
use crate::model::{ModelParams, PriorSpec};

/// Minimum number of latent-parent steps per iteration.
pub const MIN_PARENT_STEPS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSettings {
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Each sweep is `max(m, 20)` elementary birth-death steps.
    #[serde(default = "default_sweeps")]
    pub parent_sweeps_per_iter: usize,
    #[serde(default)]
    pub convention: BdConvention,
    /// Keep the parent configuration every this many post-burn-in
    /// iterations; 0 keeps none.
    #[serde(default)]
    pub parent_thin: usize,
}

fn default_sweeps() -> usize {
    1
}

impl ChainSettings {
    pub fn new(iterations: usize, burn_in: usize, seed: u64) -> Self {
        Self {
            iterations,
            burn_in,
            seed,
            parent_sweeps_per_iter: 1,
            convention: BdConvention::default(),
            parent_thin: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations <= self.burn_in {
            return Err(Error::InvalidParameter(format!(
                "iterations ({}) must exceed burn-in ({}); no samples would be recorded",
                self.iterations, self.burn_in
            )));
        }
        if self.parent_sweeps_per_iter == 0 {
            return Err(Error::InvalidParameter(
                "parent_sweeps_per_iter must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub iter: usize,
    pub alpha: f64,
    pub omega: f64,
    pub kappa: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub m: usize,
}

impl SampleRecord {
    fn new(iter: usize, p: &ModelParams, m: usize) -> Self {
        Self {
            iter,
            alpha: p.alpha(),
            omega: p.omega(),
            kappa: p.kappa(),
            theta1: p.theta1(),
            theta2: p.theta2(),
            m,
        }
    }

    pub fn values(&self) -> [f64; 5] {
        [self.alpha, self.omega, self.kappa, self.theta1, self.theta2]
    }
}

/// Post-burn-in acceptance rates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRates {
    pub offspring: f64,
    pub parent: f64,
    pub birth: f64,
    pub death: f64,
    #[serde(rename = "move")]
    pub relocate: f64,
}

/// A thinned posterior parent configuration with the offspring parameters
/// current at the same iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct ParentDraw {
    pub iter: usize,
    pub alpha: f64,
    pub omega: f64,
    pub parents: Vec<Point>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainOutput {
    /// Post-burn-in draws, one per iteration.
    pub samples: Vec<SampleRecord>,
    #[serde(skip)]
    pub final_parents: PointPattern,
    #[serde(skip)]
    pub parent_draws: Vec<ParentDraw>,
    pub acceptance: AcceptanceRates,
    pub seed: u64,
    pub chain_index: u64,
    /// Parent count after every iteration, burn-in included.
    pub m_trace: Vec<usize>,
    /// Step-size multipliers reached at the end of burn-in.
    pub offspring_scale: f64,
    pub parent_scale: f64,
    pub settings: ChainSettings,
    pub priors: PriorSpec,
    pub proposal: ProposalSpec,
}

/// Regular lattice of about `target` points inside the window.
pub fn lattice_init(window: &Window, target: usize) -> Vec<Point> {
    if target == 0 {
        return Vec::new();
    }
    let bb = window.bounding_box();
    let mut spacing = (window.area() / target as f64).sqrt();
    // shrink until the lattice hits the window often enough (polygons)
    for _ in 0..60 {
        let nx = (bb.width() / spacing).floor().max(1.0) as usize;
        let ny = (bb.height() / spacing).floor().max(1.0) as usize;
        let dx = bb.width() / nx as f64;
        let dy = bb.height() / ny as f64;
        let mut pts = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let p = Point::new(bb.x_min + (i as f64 + 0.5) * dx, bb.y_min + (j as f64 + 0.5) * dy);
                if window.contains(&p) {
                    pts.push(p);
                }
            }
        }
        if pts.len() >= target {
            pts.truncate(target);
            return pts;
        }
        spacing *= 0.9;
    }
    Vec::new()
}

struct BlockCounts {
    proposed: u64,
    accepted: u64,
}

impl BlockCounts {
    fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// Runs one chain with the generator seeded from `settings.seed`.
pub fn run_chain(
    offspring: &PointPattern,
    priors: &PriorSpec,
    proposal: &ProposalSpec,
    settings: &ChainSettings,
) -> Result<ChainOutput> {
    let rng = ChaCha8Rng::seed_from_u64(settings.seed);
    run_chain_with_rng(offspring, priors, proposal, settings, rng, 0)
}

/// Runs `chains` independent chains concurrently. Chain `i` uses stream `i`
/// of the generator seeded by `settings.seed`, so chain 0 matches [`run_chain`].
pub fn run_chains(
    offspring: &PointPattern,
    priors: &PriorSpec,
    proposal: &ProposalSpec,
    settings: &ChainSettings,
    chains: usize,
) -> Result<Vec<ChainOutput>> {
    settings.validate()?;
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..chains as u64)
            .map(|i| {
                scope.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
                    rng.set_stream(i);
                    run_chain_with_rng(offspring, priors, proposal, settings, rng, i)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain thread panicked"))
            .collect()
    })
}

fn run_chain_with_rng(
    offspring: &PointPattern,
    priors: &PriorSpec,
    proposal: &ProposalSpec,
    settings: &ChainSettings,
    mut rng: ChaCha8Rng,
    chain_index: u64,
) -> Result<ChainOutput> {
    settings.validate()?;
    priors.validate()?;
    proposal.validate()?;
    let window = offspring.window();
    let x = offspring.points();
    let bd = BdSettings {
        convention: settings.convention,
        mix: proposal.mix,
    };

    let mut params = priors.midpoint()?;
    let init_count = (x.len() as f64 / params.alpha()).ceil() as usize;
    let init = lattice_init(window, init_count);
    let mut state = PosteriorState::new(x, init, window, &params);

    let mut off_adapt = StepAdapter::new(proposal.target_acceptance);
    let mut par_adapt = StepAdapter::new(proposal.target_acceptance);
    let mut off_counts = BlockCounts {
        proposed: 0,
        accepted: 0,
    };
    let mut par_counts = BlockCounts {
        proposed: 0,
        accepted: 0,
    };
    let mut tally = BdTally::default();

    let kept = settings.iterations - settings.burn_in;
    let mut samples = Vec::with_capacity(kept);
    let mut m_trace = Vec::with_capacity(settings.iterations);
    let mut parent_draws = Vec::new();

    for t in 0..settings.iterations {
        if t == settings.burn_in {
            off_adapt.freeze();
            par_adapt.freeze();
        }
        let post = t >= settings.burn_in;
        let adapt = proposal.adapt && !post;

        // offspring parameters
        let proposed = propose(&params, priors, proposal, off_adapt.scale(), &mut rng);
        let cache = OffspringCache::new(x, state.parents(), window, proposed.omega());
        let log_ratio = cache.log_f(window, proposed.alpha()) - state.offspring.log_f(window, params.alpha());
        let ok = accept(
            if log_ratio.is_nan() {
                f64::NEG_INFINITY
            } else {
                log_ratio
            },
            &mut rng,
        );
        if ok {
            params = proposed;
            state.offspring = cache;
        }
        if adapt {
            off_adapt.update(t, ok);
        }
        if post {
            off_counts.proposed += 1;
            off_counts.accepted += ok as u64;
        }

        // parent parameters
        let o = dmh_update_parent_params(
            state.parents(),
            &params,
            priors,
            proposal,
            par_adapt.scale(),
            window,
            &bd,
            &mut rng,
        );
        if o.accepted {
            params = o.params;
            state.refresh_parents(&params);
        }
        if adapt {
            par_adapt.update(t, o.accepted);
        }
        if post {
            par_counts.proposed += 1;
            par_counts.accepted += o.accepted as u64;
        }

        // latent parents
        for _ in 0..settings.parent_sweeps_per_iter {
            let steps = state.parents().len().max(MIN_PARENT_STEPS);
            let mut target = PosteriorTarget {
                state: &mut state,
                offspring: x,
                window,
                params: &params,
            };
            for _ in 0..steps {
                let outcome = bd_step(&mut target, window, &bd, &mut rng);
                if post {
                    tally.record(outcome);
                }
            }
        }

        let m = state.parents().len();
        m_trace.push(m);
        if post {
            samples.push(SampleRecord::new(t, &params, m));
            if settings.parent_thin > 0 && (t - settings.burn_in).is_multiple_of(settings.parent_thin) {
                parent_draws.push(ParentDraw {
                    iter: t,
                    alpha: params.alpha(),
                    omega: params.omega(),
                    parents: state.parents().to_vec(),
                });
            }
        }
    }

    let final_parents = PointPattern::new(state.parents().to_vec(), window.clone())?;
    Ok(ChainOutput {
        samples,
        final_parents,
        parent_draws,
        acceptance: AcceptanceRates {
            offspring: off_counts.rate(),
            parent: par_counts.rate(),
            birth: tally.rate(StepKind::Birth),
            death: tally.rate(StepKind::Death),
            relocate: tally.rate(StepKind::Move),
        },
        seed: settings.seed,
        chain_index,
        m_trace,
        offspring_scale: off_adapt.scale(),
        parent_scale: par_adapt.scale(),
        settings: *settings,
        priors: *priors,
        proposal: *proposal,
    })
}
