//! Synthetic data under known parameters: parents by a long birth-death run,
//! offspring by Poisson-Gaussian scattering restricted to the window.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, PointPattern, Window};
use crate::model::ModelParams;
use crate::samplers::birth_death::{run_prior_chain, BdSettings};
use crate::samplers::state::ParentConfig;

/// Default number of elementary birth-death steps for a parent draw.
pub const DEFAULT_PARENT_STEPS: usize = 500_000;

/// Side of the default square window (area 6.0516e8 m^2).
pub const SCENARIO_SIDE: f64 = 24_600.0;

/// Terminal state of a birth-death chain started from the empty
/// configuration: an approximate draw from the parent density.
pub fn simulate_parents<R: Rng + ?Sized>(
    params: &ModelParams,
    window: &Window,
    steps: usize,
    settings: &BdSettings,
    rng: &mut R,
) -> PointPattern {
    let mut config = ParentConfig::new(Vec::new(), params);
    run_prior_chain(&mut config, params, window, settings, steps, rng);
    PointPattern::new(config.points().to_vec(), window.clone()).expect("birth-death points lie in the window")
}

/// Poisson(`alpha`) offspring per parent with Gaussian(`omega`) offsets;
/// offspring falling outside the window are discarded.
pub fn simulate_offsprings<R: Rng + ?Sized>(
    parents: &[Point],
    alpha: f64,
    omega: f64,
    window: &Window,
    rng: &mut R,
) -> Result<PointPattern> {
    if !(alpha >= 0.0 && alpha.is_finite()) || !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "offspring parameters must satisfy alpha >= 0, omega > 0 (got {alpha}, {omega})"
        )));
    }
    let mut out = Vec::new();
    if alpha == 0.0 {
        return Ok(PointPattern::empty(window.clone()));
    }
    let count = Poisson::new(alpha).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let offset = Normal::new(0.0, omega).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    for c in parents {
        let k = count.sample(rng) as u64;
        for _ in 0..k {
            let p = Point::new(c.x + offset.sample(rng), c.y + offset.sample(rng));
            if window.contains(&p) {
                out.push(p);
            }
        }
    }
    PointPattern::new(out, window.clone())
}

/// Ground-truth parameters of the three simulation scenarios.
pub fn scenario_truth(id: u32) -> Result<ModelParams> {
    let (alpha, omega, kappa, theta1, theta2) = match id {
        1 => (6.0, 360.0, 1.2e-7, 1.5, 600.0),
        2 => (5.0, 400.0, 1.0e-7, 1.5, 650.0),
        3 => (4.0, 440.0, 0.5e-7, 1.5, 700.0),
        _ => return Err(Error::UnknownScenario(id)),
    };
    ModelParams::new(alpha, omega, kappa, theta1, theta2)
}

/// The default square scenario window.
pub fn scenario_window() -> Window {
    Window::square(SCENARIO_SIDE).expect("positive side")
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub id: u32,
    pub offspring: PointPattern,
    pub parents: PointPattern,
    pub truth: ModelParams,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOptions {
    pub parent_steps: usize,
    pub settings: BdSettings,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self {
            parent_steps: DEFAULT_PARENT_STEPS,
            settings: BdSettings::default(),
        }
    }
}

pub fn make_scenario(id: u32, window: &Window, seed: u64) -> Result<Scenario> {
    make_scenario_with(id, window, seed, &ScenarioOptions::default())
}

/// Simulates parents then offspring from one generator seeded by `seed`.
pub fn make_scenario_with(id: u32, window: &Window, seed: u64, options: &ScenarioOptions) -> Result<Scenario> {
    let truth = scenario_truth(id)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parents = simulate_parents(&truth, window, options.parent_steps, &options.settings, &mut rng);
    let offspring = simulate_offsprings(parents.points(), truth.alpha(), truth.omega(), window, &mut rng)?;
    Ok(Scenario {
        id,
        offspring,
        parents,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_truths() {
        let t = scenario_truth(1).unwrap();
        assert_eq!(
            [t.alpha(), t.omega(), t.kappa(), t.theta1(), t.theta2()],
            [6.0, 360.0, 1.2e-7, 1.5, 600.0]
        );
        let t = scenario_truth(2).unwrap();
        assert_eq!(
            [t.alpha(), t.omega(), t.kappa(), t.theta1(), t.theta2()],
            [5.0, 400.0, 1.0e-7, 1.5, 650.0]
        );
        let t = scenario_truth(3).unwrap();
        assert_eq!(
            [t.alpha(), t.omega(), t.kappa(), t.theta1(), t.theta2()],
            [4.0, 440.0, 0.5e-7, 1.5, 700.0]
        );
        assert!(matches!(scenario_truth(4), Err(Error::UnknownScenario(4))));
        assert!((scenario_window().area() - 6.0516e8).abs() < 1e-3);
    }

    #[test]
    fn vanishing_intensity_gives_empty_parents() {
        let w = scenario_window();
        let p = ModelParams::new(4.0, 400.0, 1e-14, 1.5, 600.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = simulate_parents(&p, &w, 20_000, &BdSettings::default(), &mut rng);
        assert!(c.len() <= 1);
    }

    #[test]
    fn deep_interior_parent_keeps_alpha_on_average() {
        let w = scenario_window();
        let c = [Point::new(12_300.0, 12_300.0)];
        let alpha = 6.0;
        let reps = 200;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut total = 0usize;
        for _ in 0..reps {
            total += simulate_offsprings(&c, alpha, 360.0, &w, &mut rng).unwrap().len();
        }
        let mean = total as f64 / reps as f64;
        assert!(
            (mean - alpha).abs() <= 3.0 * (alpha / reps as f64).sqrt(),
            "mean {mean}"
        );
    }

    #[test]
    fn tiny_alpha_gives_empty_offspring() {
        let w = scenario_window();
        let c = [Point::new(12_300.0, 12_300.0); 10];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(simulate_offsprings(&c, 1e-12, 360.0, &w, &mut rng).unwrap().is_empty());
        assert!(simulate_offsprings(&c, 0.0, 360.0, &w, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn offspring_near_edge_are_clipped() {
        let w = Window::square(1000.0).unwrap();
        let c = [Point::new(0.0, 0.0); 50];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = simulate_offsprings(&c, 4.0, 100.0, &w, &mut rng).unwrap();
        assert!(x.points().iter().all(|p| w.contains(p)));
        // about a quarter of 200 expected draws land inside
        assert!(x.len() > 25 && x.len() < 80, "{}", x.len());
    }

    #[test]
    fn same_seed_same_scenario() {
        let w = scenario_window();
        let opts = ScenarioOptions {
            parent_steps: 50_000,
            ..Default::default()
        };
        let a = make_scenario_with(3, &w, 7, &opts).unwrap();
        let b = make_scenario_with(3, &w, 7, &opts).unwrap();
        assert_eq!(a.offspring.points(), b.offspring.points());
        assert_eq!(a.parents.points(), b.parents.points());
        let c = make_scenario_with(3, &w, 8, &opts).unwrap();
        assert_ne!(a.parents.points(), c.parents.points());
    }
}
