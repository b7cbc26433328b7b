//! The attraction-repulsion parent density and the Gaussian offspring likelihood.
//!
//! The interaction function joins a repulsion/attraction parabola peaking at
//! `(theta2, theta1)` to a decaying tail `1 + 4 / (D - d2)^2`. The join point
//! `d1` and the tail shift `d2` are chosen so the function is continuously
//! differentiable there.
//!
//! All densities are returned on the log scale. A configuration with
//! coincident parents has zero density (`-inf`), which is a legal value.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, PointPattern, Window};

/// Cap applied to each point's summed log-interaction.
pub const LOCAL_ENERGY_CAP: f64 = 2.0;

/// theta1 values at or below this are clamped before solving for d1, d2.
pub const THETA1_FLOOR: f64 = 1.0 + 1e-6;

/// Solves for the smooth-pasting constants `(d1, d2)`.
///
/// The slope condition gives `(d1 - d2)^3 = 4 theta2^2 / (theta1 (d1 - theta2))`,
/// which eliminates `d2`; the value condition is then bisected for `d1` on
/// `(theta2, theta2 (1 + sqrt((theta1 - 1) / theta1)))`, where the parabola
/// is above one and decreasing.
pub fn solve_pasting(theta1: f64, theta2: f64) -> Result<(f64, f64)> {
    if !(theta1 > 1.0) {
        return Err(Error::NoAttraction(theta1));
    }
    if !(theta2 > 0.0 && theta2.is_finite() && theta1.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "pasting needs finite theta1 > 1, theta2 > 0 (got {theta1}, {theta2})"
        )));
    }
    let gap = |d1: f64| (4.0 * theta2 * theta2 / (theta1 * (d1 - theta2))).cbrt();
    let parabola = |d: f64| {
        let u = (d - theta2) / theta2;
        theta1 * (1.0 - u * u)
    };
    // positive near theta2, negative at the upper end
    let residual = |d1: f64| {
        let s = gap(d1);
        parabola(d1) - 1.0 - 4.0 / (s * s)
    };

    let mut lo = theta2;
    let mut hi = theta2 * (1.0 + ((theta1 - 1.0) / theta1).sqrt());
    if !(hi > lo) || !(residual(hi) < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "pasting bracket failed for theta1={theta1}, theta2={theta2}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if residual(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let d1 = 0.5 * (lo + hi);
    let d2 = d1 - gap(d1);

    let value_gap = (parabola(d1) - (1.0 + 4.0 / (d1 - d2).powi(2))).abs();
    let slope_gap = (-2.0 * theta1 * (d1 - theta2) / (theta2 * theta2) + 8.0 / (d1 - d2).powi(3)).abs();
    if !(value_gap <= 1e-9 * theta1 && slope_gap <= 1e-9) {
        return Err(Error::InvalidParameter(format!(
            "pasting did not converge for theta1={theta1}, theta2={theta2} \
             (value gap {value_gap:e}, slope gap {slope_gap:e})"
        )));
    }
    Ok((d1, d2))
}

/// Θ = {alpha, omega, kappa, theta1, theta2} with the pasting constants cached.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct ModelParams {
    alpha: f64,
    omega: f64,
    kappa: f64,
    theta1: f64,
    theta2: f64,
    d1: f64,
    d2: f64,
}

#[derive(Deserialize)]
struct RawParams {
    alpha: f64,
    omega: f64,
    kappa: f64,
    theta1: f64,
    theta2: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;

    fn try_from(r: RawParams) -> Result<Self> {
        ModelParams::new(r.alpha, r.omega, r.kappa, r.theta1, r.theta2)
    }
}

impl ModelParams {
    /// theta1 below [`THETA1_FLOOR`] is clamped up to it.
    pub fn new(alpha: f64, omega: f64, kappa: f64, theta1: f64, theta2: f64) -> Result<Self> {
        check_positive("alpha", alpha)?;
        check_positive("omega", omega)?;
        check_positive("kappa", kappa)?;
        check_positive("theta2", theta2)?;
        if !(theta1 >= 1.0 && theta1.is_finite()) {
            return Err(Error::InvalidParameter(format!("theta1 must be >= 1 (got {theta1})")));
        }
        let theta1 = theta1.max(THETA1_FLOOR);
        let (d1, d2) = solve_pasting(theta1, theta2)?;
        Ok(Self {
            alpha,
            omega,
            kappa,
            theta1,
            theta2,
            d1,
            d2,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn theta1(&self) -> f64 {
        self.theta1
    }
    pub fn theta2(&self) -> f64 {
        self.theta2
    }
    pub fn d1(&self) -> f64 {
        self.d1
    }
    pub fn d2(&self) -> f64 {
        self.d2
    }

    /// Replaces the offspring parameters; the pasting constants carry over.
    pub fn with_offspring(&self, alpha: f64, omega: f64) -> Result<Self> {
        check_positive("alpha", alpha)?;
        check_positive("omega", omega)?;
        Ok(Self { alpha, omega, ..*self })
    }

    /// Replaces the parent parameters, re-solving pasting only if theta changed.
    pub fn with_parent(&self, kappa: f64, theta1: f64, theta2: f64) -> Result<Self> {
        if theta1.max(THETA1_FLOOR) == self.theta1 && theta2 == self.theta2 {
            check_positive("kappa", kappa)?;
            return Ok(Self { kappa, ..*self });
        }
        Self::new(self.alpha, self.omega, kappa, theta1, theta2)
    }

    /// Interaction value at distance `d > 0`.
    pub fn phi(&self, d: f64) -> Result<f64> {
        if !(d > 0.0) {
            return Err(Error::Domain(format!(
                "interaction distance must be positive (got {d})"
            )));
        }
        Ok(if d <= self.d1 {
            let u = (d - self.theta2) / self.theta2;
            self.theta1 * (1.0 - u * u)
        } else {
            let t = d - self.d2;
            1.0 + 4.0 / (t * t)
        })
    }

    /// `ln phi(d)`, with `d == 0` mapped to `-inf`.
    #[inline]
    pub fn log_phi(&self, d: f64) -> f64 {
        if d <= self.d1 {
            let u = (d - self.theta2) / self.theta2;
            self.theta1.ln() + (-u * u).ln_1p()
        } else {
            let t = d - self.d2;
            (4.0 / (t * t)).ln_1p()
        }
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite (got {v})"
        )))
    }
}

/// Closed interval bounds of a uniform prior, serialized as `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl From<[f64; 2]> for Bounds {
    fn from(v: [f64; 2]) -> Self {
        Self { lo: v[0], hi: v[1] }
    }
}

impl From<Bounds> for [f64; 2] {
    fn from(b: Bounds) -> Self {
        [b.lo, b.hi]
    }
}

impl Bounds {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Folds `v` back into `[lo, hi]` by repeated reflection at the ends.
    pub fn reflect(&self, v: f64) -> f64 {
        let w = self.width();
        if !v.is_finite() {
            return self.midpoint();
        }
        let mut t = (v - self.lo).rem_euclid(2.0 * w);
        if t > w {
            t = 2.0 * w - t;
        }
        (self.lo + t).clamp(self.lo, self.hi)
    }
}

/// Independent uniform priors on each parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub alpha: Bounds,
    pub omega: Bounds,
    pub kappa: Bounds,
    pub theta1: Bounds,
    pub theta2: Bounds,
}

impl PriorSpec {
    /// Defaults tied to the domain area: omega and theta2 in
    /// `[sqrt(|S|)/70, sqrt(|S|)/25]`, alpha in `[3, 30]`,
    /// kappa in `[1e-10, 1e-6]`, theta1 in `[1, 3]`.
    pub fn for_area(area: f64) -> Self {
        let root = area.sqrt();
        let scale = Bounds::new(root / 70.0, root / 25.0);
        Self {
            alpha: Bounds::new(3.0, 30.0),
            omega: scale,
            kappa: Bounds::new(1e-10, 1e-6),
            theta1: Bounds::new(1.0, 3.0),
            theta2: scale,
        }
    }

    pub fn for_window(window: &Window) -> Self {
        Self::for_area(window.area())
    }

    pub fn validate(&self) -> Result<()> {
        for (name, b) in self.named() {
            if !(b.lo > 0.0 && b.lo < b.hi && b.hi.is_finite()) {
                return Err(Error::Config(format!(
                    "prior bounds for {name} must satisfy 0 < lo < hi (got [{}, {}])",
                    b.lo, b.hi
                )));
            }
        }
        if self.theta1.lo < 1.0 {
            return Err(Error::Config("theta1 prior must lie in [1, inf)".into()));
        }
        Ok(())
    }

    pub fn named(&self) -> [(&'static str, Bounds); 5] {
        [
            ("alpha", self.alpha),
            ("omega", self.omega),
            ("kappa", self.kappa),
            ("theta1", self.theta1),
            ("theta2", self.theta2),
        ]
    }

    pub fn contains(&self, p: &ModelParams) -> bool {
        self.alpha.contains(p.alpha)
            && self.omega.contains(p.omega)
            && self.kappa.contains(p.kappa)
            && self.theta1.contains(p.theta1)
            && self.theta2.contains(p.theta2)
    }

    /// Parameters at the centre of the prior box.
    pub fn midpoint(&self) -> Result<ModelParams> {
        ModelParams::new(
            self.alpha.midpoint(),
            self.omega.midpoint(),
            self.kappa.midpoint(),
            self.theta1.midpoint(),
            self.theta2.midpoint(),
        )
    }
}

/// Per-point sums `sum_{j != i} ln phi(|c_i - c_j|)`.
pub(crate) fn local_energies(points: &[Point], params: &ModelParams) -> Vec<f64> {
    let m = points.len();
    let mut local = vec![0.0; m];
    for i in 0..m {
        for j in (i + 1)..m {
            let l = params.log_phi(points[i].dist(&points[j]));
            local[i] += l;
            local[j] += l;
        }
    }
    local
}

/// `ln h(C) = m ln kappa + sum_i min(sum_{j != i} ln phi(D_ij), 2)`.
pub fn log_h_points(points: &[Point], params: &ModelParams) -> f64 {
    let local = local_energies(points, params);
    if local.contains(&f64::NEG_INFINITY) {
        return f64::NEG_INFINITY;
    }
    points.len() as f64 * params.kappa.ln() + local.iter().map(|l| l.min(LOCAL_ENERGY_CAP)).sum::<f64>()
}

/// Unnormalized log parent density.
pub fn log_h_parent(parents: &PointPattern, params: &ModelParams) -> f64 {
    log_h_points(parents.points(), params)
}

#[inline]
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + (-(a - b).abs()).exp().ln_1p()
}

/// `ln sum_i exp(-|x - c_i|^2 / (2 omega^2))`, `-inf` for no parents.
pub(crate) fn log_kernel_sum(x: &Point, parents: &[Point], inv_two_omega2: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for c in parents {
        best = best.max(-x.dist2(c) * inv_two_omega2);
    }
    if best == f64::NEG_INFINITY {
        return best;
    }
    let s: f64 = parents
        .iter()
        .map(|c| (-x.dist2(c) * inv_two_omega2 - best).exp())
        .sum();
    best + s.ln()
}

/// `sum_j ln(sum_i alpha k(x_j - c_i, omega))`: zero for no offspring, `-inf`
/// for offspring without parents.
pub fn log_kernel_product(offspring: &[Point], parents: &[Point], alpha: f64, omega: f64) -> f64 {
    if offspring.is_empty() {
        return 0.0;
    }
    if parents.is_empty() {
        return f64::NEG_INFINITY;
    }
    let inv = 1.0 / (2.0 * omega * omega);
    let log_norm = alpha.ln() - (2.0 * PI * omega * omega).ln();
    offspring
        .iter()
        .map(|x| log_norm + log_kernel_sum(x, parents, inv))
        .sum()
}

/// `|S| - alpha sum_i mass(c_i) + sum_j ln(sum_i alpha k(x_j - c_i, omega))`.
pub fn log_f_points(offspring: &[Point], parents: &[Point], window: &Window, alpha: f64, omega: f64) -> f64 {
    let product = log_kernel_product(offspring, parents, alpha, omega);
    if product == f64::NEG_INFINITY {
        return product;
    }
    let mass: f64 = parents.iter().map(|c| window.gaussian_mass(c, omega)).sum();
    window.area() - alpha * mass + product
}

/// Offspring log-likelihood given parents.
pub fn log_f_offspring(offspring: &PointPattern, parents: &PointPattern, alpha: f64, omega: f64) -> f64 {
    log_f_points(offspring.points(), parents.points(), offspring.window(), alpha, omega)
}

/// Joint log density up to the parent normalizing function; `-inf` outside the prior box.
pub fn log_joint(offspring: &PointPattern, parents: &PointPattern, params: &ModelParams, priors: &PriorSpec) -> f64 {
    if !priors.contains(params) {
        return f64::NEG_INFINITY;
    }
    log_f_offspring(offspring, parents, params.alpha, params.omega) + log_h_parent(parents, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(theta1: f64, theta2: f64) -> ModelParams {
        ModelParams::new(5.0, 400.0, 1e-7, theta1, theta2).unwrap()
    }

    /// Independent route: scan d1, take d2 from the value condition, and
    /// zoom in on the smallest slope mismatch.
    fn pasting_by_scan(theta1: f64, theta2: f64) -> (f64, f64) {
        let parabola = |d: f64| theta1 * (1.0 - ((d - theta2) / theta2).powi(2));
        let slope_gap = |d1: f64| {
            let v = parabola(d1);
            if v <= 1.0 {
                return f64::INFINITY;
            }
            let s = 2.0 / (v - 1.0).sqrt();
            (-2.0 * theta1 * (d1 - theta2) / (theta2 * theta2) + 8.0 / s.powi(3)).abs()
        };
        let mut lo = theta2;
        let mut hi = theta2 * (1.0 + ((theta1 - 1.0) / theta1).sqrt());
        let mut best = lo;
        for _ in 0..6 {
            let n = 10_000;
            let h = (hi - lo) / n as f64;
            let mut best_gap = f64::INFINITY;
            for k in 1..n {
                let d = lo + k as f64 * h;
                let g = slope_gap(d);
                if g < best_gap {
                    best_gap = g;
                    best = d;
                }
            }
            lo = best - 2.0 * h;
            hi = best + 2.0 * h;
        }
        let v = parabola(best);
        (best, best - 2.0 / (v - 1.0).sqrt())
    }

    #[test]
    fn pasting_matches_scan_oracle() {
        let (d1, d2) = solve_pasting(1.5, 600.0).unwrap();
        let (o1, o2) = pasting_by_scan(1.5, 600.0);
        assert!(((d1 - o1) / o1).abs() < 1e-6, "{d1} vs {o1}");
        assert!(((d2 - o2) / o2).abs() < 1e-6, "{d2} vs {o2}");
        // frozen from the scan oracle
        assert!((d1 - 939.41125).abs() < 1e-3);
        assert!((d2 - 925.26912).abs() < 1e-3);
    }

    #[test]
    fn pasting_is_smooth_at_join() {
        for &(t1, t2) in &[(1.5, 600.0), (1.01, 400.0), (3.0, 900.0), (2.2, 351.4)] {
            let p = params(t1, t2);
            let (d1, d2) = (p.d1(), p.d2());
            let f = t1 * (1.0 - ((d1 - t2) / t2).powi(2));
            let g = 1.0 + 4.0 / (d1 - d2).powi(2);
            assert!((f - g).abs() <= 1e-9 * t1);
            let fp = -2.0 * t1 * (d1 - t2) / (t2 * t2);
            let gp = -8.0 / (d1 - d2).powi(3);
            assert!((fp - gp).abs() <= 1e-9);
            assert!(d1 > t2 && d1 < t2 * (1.0 + ((t1 - 1.0) / t1).sqrt()));
            assert!(d2 < d1);
        }
    }

    #[test]
    fn pasting_degenerate_and_limit() {
        assert!(matches!(solve_pasting(1.0, 600.0), Err(Error::NoAttraction(_))));
        assert!(matches!(solve_pasting(0.5, 600.0), Err(Error::NoAttraction(_))));
        let (d1, _) = solve_pasting(1.0 + 1e-8, 600.0).unwrap();
        assert!(d1 > 600.0 && d1 - 600.0 < 0.1);
        // theta1 = 1 is clamped rather than rejected
        let p = ModelParams::new(5.0, 400.0, 1e-7, 1.0, 600.0).unwrap();
        assert_eq!(p.theta1(), THETA1_FLOOR);
    }

    #[test]
    fn phi_values() {
        let p = params(1.5, 600.0);
        assert_eq!(p.phi(600.0).unwrap(), 1.5);
        assert!(p.phi(1e-9).unwrap() < 1e-11);
        assert_eq!(p.log_phi(0.0), f64::NEG_INFINITY);
        let d = 6000.0;
        let expected = 1.0 + 4.0 / (d - 925.26912_f64).powi(2);
        assert!((p.phi(d).unwrap() - expected).abs() < 1e-12);
        assert!(p.phi(0.0).is_err());
        assert!(p.phi(-1.0).is_err());
    }

    #[test]
    fn phi_tail_decreases_to_one() {
        let p = params(2.0, 500.0);
        let mut last = f64::INFINITY;
        let mut d = p.d1() + 1e-3;
        while d < 1e6 {
            let v = p.phi(d).unwrap();
            assert!(v > 1.0 && v < last);
            last = v;
            d *= 1.1;
        }
        assert!(last - 1.0 < 1e-10);
    }

    #[test]
    fn log_h_examples() {
        let w = Window::square(10_000.0).unwrap();
        let p = params(1.5, 600.0);
        let one = PointPattern::new(vec![Point::new(10.0, 10.0)], w.clone()).unwrap();
        assert_eq!(log_h_parent(&one, &p), p.kappa().ln());

        let two = PointPattern::new(vec![Point::new(1000.0, 1000.0), Point::new(1600.0, 1000.0)], w.clone()).unwrap();
        let expected = 2.0 * p.kappa().ln() + 2.0 * 1.5f64.ln();
        assert!((log_h_parent(&two, &p) - expected).abs() < 1e-12);

        // equilateral at theta2 with theta1 = 3: per-point sum 2 ln 3 > 2, so the cap binds
        let p3 = params(3.0, 600.0);
        let h = 600.0 * 3f64.sqrt() / 2.0;
        let tri = vec![
            Point::new(1000.0, 1000.0),
            Point::new(1600.0, 1000.0),
            Point::new(1300.0, 1000.0 + h),
        ];
        let capped = log_h_points(&tri, &p3);
        assert!((capped - (3.0 * p3.kappa().ln() + 6.0)).abs() < 1e-9);
        let uncapped: f64 = local_energies(&tri, &p3).iter().sum();
        assert!((uncapped - 6.0 * 3f64.ln()).abs() < 1e-9);

        let coincident = vec![Point::new(5.0, 5.0), Point::new(5.0, 5.0)];
        assert_eq!(log_h_points(&coincident, &p), f64::NEG_INFINITY);
        assert_eq!(log_h_points(&[], &p), 0.0);
    }

    #[test]
    fn log_f_examples() {
        let w = Window::square(100_000.0).unwrap();
        let area = w.area();
        let c = PointPattern::new(vec![Point::new(50_000.0, 50_000.0)], w.clone()).unwrap();
        let empty = PointPattern::empty(w.clone());
        let (alpha, omega) = (6.0, 360.0);
        assert!((log_f_offspring(&empty, &c, alpha, omega) - (area - alpha)).abs() < 1e-6);
        let x = c.clone();
        let expected = area - alpha + (alpha / (2.0 * PI * omega * omega)).ln();
        assert!((log_f_offspring(&x, &c, alpha, omega) - expected).abs() < 1e-6);
        assert_eq!(log_f_offspring(&x, &empty, alpha, omega), f64::NEG_INFINITY);
        assert_eq!(log_f_offspring(&empty, &empty, alpha, omega), area);
    }

    #[test]
    fn log_joint_prior_support_and_decomposition() {
        let w = Window::square(24_600.0).unwrap();
        let priors = PriorSpec::for_window(&w);
        let inside = ModelParams::new(5.0, 400.0, 1e-7, 1.5, 600.0).unwrap();
        let outside = ModelParams::new(50.0, 400.0, 1e-7, 1.5, 600.0).unwrap();
        let x = PointPattern::new(vec![Point::new(1000.0, 1000.0), Point::new(1200.0, 900.0)], w.clone()).unwrap();
        let c1 = PointPattern::new(vec![Point::new(1100.0, 950.0)], w.clone()).unwrap();
        let c2 = PointPattern::new(vec![Point::new(1100.0, 950.0), Point::new(1800.0, 900.0)], w.clone()).unwrap();
        assert_eq!(log_joint(&x, &c1, &outside, &priors), f64::NEG_INFINITY);
        let a = log_joint(&x, &c1, &inside, &priors);
        assert_eq!(a - a, 0.0);
        let b = log_joint(&x, &c2, &inside, &priors);
        let by_parts = (log_h_parent(&c2, &inside) - log_h_parent(&c1, &inside))
            + (log_f_offspring(&x, &c2, 5.0, 400.0) - log_f_offspring(&x, &c1, 5.0, 400.0));
        assert!(((b - a) - by_parts).abs() < 1e-12 * a.abs());
    }

    #[test]
    fn prior_defaults_and_reflection() {
        let p = PriorSpec::for_area(6.0516e8);
        assert!((p.omega.lo - 351.428).abs() < 1e-3);
        assert!((p.omega.hi - 984.0).abs() < 1e-9);
        assert_eq!(p.alpha, Bounds::new(3.0, 30.0));
        p.validate().unwrap();
        let b = Bounds::new(1.0, 3.0);
        assert_eq!(b.reflect(3.5), 2.5);
        assert_eq!(b.reflect(0.5), 1.5);
        assert_eq!(b.reflect(7.5), 2.5);
        assert_eq!(b.reflect(2.0), 2.0);
    }

    proptest! {
        #[test]
        fn phi_continuous_and_differentiable_at_join(t1 in 1.01f64..3.0, t2 in 351.0f64..984.0) {
            let p = ModelParams::new(5.0, 400.0, 1e-7, t1, t2).unwrap();
            let h = 1e-4 * t2;
            let d1 = p.d1();
            let left = p.phi(d1 - h).unwrap();
            let right = p.phi(d1 + h).unwrap();
            let exact = -2.0 * t1 * (d1 - t2) / (t2 * t2);
            // across the join the change is the common slope times the gap,
            // up to the second-order terms of each branch
            let curv = 2.0 * t1 / (t2 * t2) + 24.0 / (d1 - p.d2()).powi(4);
            prop_assert!(((right - left) - 2.0 * h * exact).abs() <= 0.55 * h * h * curv + 1e-12);
            let dl = (p.phi(d1).unwrap() - p.phi(d1 - h).unwrap()) / h;
            let dr = (p.phi(d1 + h).unwrap() - p.phi(d1).unwrap()) / h;
            // one-sided differences carry O(h) curvature error on either side
            prop_assert!((dl - exact).abs() <= 0.55 * h * curv);
            prop_assert!((dr - exact).abs() <= 0.55 * h * curv);
        }

        #[test]
        fn log_h_rigid_motion_invariant(
            angle in 0.0f64..std::f64::consts::TAU, tx in -500.0f64..500.0, ty in -500.0f64..500.0,
            pts in proptest::collection::vec((2000.0f64..4000.0, 2000.0f64..4000.0), 0..8)
        ) {
            let p = ModelParams::new(5.0, 400.0, 1e-7, 1.8, 500.0).unwrap();
            let base: Vec<Point> = pts.iter().map(|&(x, y)| Point::new(x, y)).collect();
            let (s, c) = angle.sin_cos();
            let moved: Vec<Point> = base
                .iter()
                .map(|q| Point::new(c * q.x - s * q.y + tx, s * q.x + c * q.y + ty))
                .collect();
            let a = log_h_points(&base, &p);
            let b = log_h_points(&moved, &p);
            prop_assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()));
        }

        #[test]
        fn log_f_exchangeable(seed in 0u64..1000) {
            use rand::{SeedableRng, seq::SliceRandom};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let w = Window::square(5000.0).unwrap();
            let mut x: Vec<Point> = (0..7).map(|_| w.sample_uniform(&mut rng)).collect();
            let mut c: Vec<Point> = (0..3).map(|_| w.sample_uniform(&mut rng)).collect();
            let a = log_f_points(&x, &c, &w, 4.0, 600.0);
            x.shuffle(&mut rng);
            c.shuffle(&mut rng);
            let b = log_f_points(&x, &c, &w, 4.0, 600.0);
            prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
        }

        #[test]
        fn kernel_product_scaling(seed in 0u64..1000) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let w = Window::square(3000.0).unwrap();
            let x: Vec<Point> = (0..6).map(|_| w.sample_uniform(&mut rng)).collect();
            let c: Vec<Point> = (0..3).map(|_| w.sample_uniform(&mut rng)).collect();
            let dbl = |v: &[Point]| v.iter().map(|p| Point::new(2.0 * p.x, 2.0 * p.y)).collect::<Vec<_>>();
            let a = log_kernel_product(&x, &c, 5.0, 700.0);
            let b = log_kernel_product(&dbl(&x), &dbl(&c), 5.0, 1400.0);
            prop_assert!(((a - b) - 6.0 * 4f64.ln()).abs() < 1e-9);
        }
    }
}
