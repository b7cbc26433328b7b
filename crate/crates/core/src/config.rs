//! Run configuration, read from JSON or TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::PcfOptions;
use crate::error::{Error, Result};
use crate::geometry::Window;
use crate::ingest::IngestOptions;
use crate::model::{Bounds, PriorSpec};
use crate::risk::ThresholdSpec;
use crate::samplers::birth_death::BdConvention;
use crate::samplers::chain::ChainSettings;
use crate::samplers::proposal::{BdMix, ProposalSpec};
use crate::simulation::{scenario_window, ScenarioOptions, DEFAULT_PARENT_STEPS};

pub const SCHEMA_VERSION: u32 = 1;

/// Prior bounds; unset entries take the window-derived defaults.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorOverrides {
    pub alpha: Option<Bounds>,
    pub omega: Option<Bounds>,
    pub kappa: Option<Bounds>,
    pub theta1: Option<Bounds>,
    pub theta2: Option<Bounds>,
}

/// Proposal settings; unset step sizes take 5% of the prior range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProposalConfig {
    pub alpha_step: Option<f64>,
    pub omega_step: Option<f64>,
    pub kappa_step: Option<f64>,
    pub theta1_step: Option<f64>,
    pub theta2_step: Option<f64>,
    pub mix: BdMix,
    pub inner_multiplier: f64,
    pub inner_min: usize,
    pub adapt: bool,
    pub target_acceptance: f64,
}

impl Default for ProposalConfig {
    fn default() -> Self {
        let base = ProposalSpec::for_priors(&PriorSpec::for_area(1.0));
        Self {
            alpha_step: None,
            omega_step: None,
            kappa_step: None,
            theta1_step: None,
            theta2_step: None,
            mix: base.mix,
            inner_multiplier: base.inner_multiplier,
            inner_min: base.inner_min,
            adapt: base.adapt,
            target_acceptance: base.target_acceptance,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub chains: usize,
    pub parent_sweeps_per_iter: usize,
    pub bd_ratio_convention: BdConvention,
    /// Keep every n-th post-burn-in parent configuration (0 = none).
    pub parent_thin: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            iterations: 40_000,
            burn_in: 20_000,
            seed: 1,
            chains: 1,
            parent_sweeps_per_iter: 1,
            bd_ratio_convention: BdConvention::default(),
            parent_thin: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub scenario: u32,
    pub parent_steps: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            scenario: 3,
            parent_steps: DEFAULT_PARENT_STEPS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PcfConfig {
    pub r_max: f64,
    pub r_step: f64,
    pub bandwidth: usize,
    pub translation: bool,
}

impl Default for PcfConfig {
    fn default() -> Self {
        Self {
            r_max: 3000.0,
            r_step: 50.0,
            bandwidth: 0,
            translation: false,
        }
    }
}

impl PcfConfig {
    pub fn options(&self) -> PcfOptions {
        PcfOptions {
            bandwidth: self.bandwidth,
            translation: self.translation,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskConfig {
    pub cell_size: f64,
    pub days: f64,
    pub area_unit: f64,
    pub threshold: f64,
    /// Average the intensity over the fit's thinned parent draws instead of
    /// using the final parents with posterior-mean parameters.
    pub average: bool,
}

impl Default for RiskConfig {
    fn default() -> Self {
        let t = ThresholdSpec::default();
        Self {
            cell_size: 100.0,
            days: t.days,
            area_unit: t.area_unit,
            threshold: t.threshold,
            average: false,
        }
    }
}

impl RiskConfig {
    pub fn threshold_spec(&self) -> ThresholdSpec {
        ThresholdSpec {
            days: self.days,
            area_unit: self.area_unit,
            threshold: self.threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default = "scenario_window")]
    pub window: Window,
    #[serde(default)]
    pub priors: PriorOverrides,
    #[serde(default)]
    pub proposal: ProposalConfig,
    #[serde(default)]
    pub chain: ChainConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub pcf: PcfConfig,
    #[serde(default)]
    pub risk: RiskConfig,
    #[serde(default)]
    pub ingest: Option<IngestOptions>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            window: scenario_window(),
            priors: PriorOverrides::default(),
            proposal: ProposalConfig::default(),
            chain: ChainConfig::default(),
            simulation: SimulationConfig::default(),
            pcf: PcfConfig::default(),
            risk: RiskConfig::default(),
            ingest: None,
        }
    }
}

impl RunConfig {
    /// Reads `.toml` files as TOML and anything else as JSON.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let cfg: Self = if is_toml {
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
        } else {
            serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.priors()?;
        self.proposal()?;
        if self.chain.chains == 0 {
            return Err(Error::Config("chains must be at least 1".into()));
        }
        self.chain_settings().validate()?;
        if !(self.pcf.r_step > 0.0 && self.pcf.r_max >= 3.0 * self.pcf.r_step) {
            return Err(Error::Config("pcf grid needs r_step > 0 and at least 3 radii".into()));
        }
        if !(self.risk.cell_size > 0.0) {
            return Err(Error::Config("risk cell_size must be positive".into()));
        }
        if let Some(i) = &self.ingest {
            i.date_range()?;
        }
        Ok(())
    }

    /// Window-derived defaults with overrides applied.
    pub fn priors(&self) -> Result<PriorSpec> {
        let mut p = PriorSpec::for_window(&self.window);
        let o = &self.priors;
        for (slot, v) in [
            (&mut p.alpha, o.alpha),
            (&mut p.omega, o.omega),
            (&mut p.kappa, o.kappa),
            (&mut p.theta1, o.theta1),
            (&mut p.theta2, o.theta2),
        ] {
            if let Some(b) = v {
                *slot = b;
            }
        }
        p.validate()?;
        Ok(p)
    }

    pub fn proposal(&self) -> Result<ProposalSpec> {
        let priors = self.priors()?;
        let base = ProposalSpec::for_priors(&priors);
        let c = &self.proposal;
        let spec = ProposalSpec {
            alpha_step: c.alpha_step.unwrap_or(base.alpha_step),
            omega_step: c.omega_step.unwrap_or(base.omega_step),
            kappa_step: c.kappa_step.unwrap_or(base.kappa_step),
            theta1_step: c.theta1_step.unwrap_or(base.theta1_step),
            theta2_step: c.theta2_step.unwrap_or(base.theta2_step),
            mix: c.mix,
            inner_multiplier: c.inner_multiplier,
            inner_min: c.inner_min,
            adapt: c.adapt,
            target_acceptance: c.target_acceptance,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn chain_settings(&self) -> ChainSettings {
        ChainSettings {
            iterations: self.chain.iterations,
            burn_in: self.chain.burn_in,
            seed: self.chain.seed,
            parent_sweeps_per_iter: self.chain.parent_sweeps_per_iter,
            convention: self.chain.bd_ratio_convention,
            parent_thin: self.chain.parent_thin,
        }
    }

    pub fn scenario_options(&self) -> ScenarioOptions {
        ScenarioOptions {
            parent_steps: self.simulation.parent_steps,
            settings: crate::samplers::birth_death::BdSettings {
                convention: self.chain.bd_ratio_convention,
                mix: self.proposal.mix,
            },
        }
    }

    /// Lowercase hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
