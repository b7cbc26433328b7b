//! Markov chain Monte Carlo kernels and the chain driver.

pub mod birth_death;
pub mod chain;
pub mod dmh;
pub mod offspring;
pub mod proposal;
pub mod state;

pub use birth_death::{
    bd_step, bd_step_parent_posterior, bd_step_parent_prior, log_acceptance, run_prior_chain, BdConvention, BdSettings,
    BdTally, PosteriorState, StepKind, StepOutcome,
};
pub use chain::{run_chain, run_chains, AcceptanceRates, ChainOutput, ChainSettings, ParentDraw, SampleRecord};
pub use dmh::{dmh_log_ratio, dmh_step_with_proposal, dmh_update_parent_params, DmhOutcome};
pub use offspring::{mh_update_offspring_params, offspring_log_ratio, OffspringOutcome};
pub use proposal::{BdMix, ProposalSpec};
pub use state::{BdMove, ParentConfig};
