//! Incremental caches behind the birth-death kernels.
//!
//! [`ParentConfig`] keeps each parent's summed log-interaction so a birth,
//! death or relocation costs O(m) instead of O(m^2). [`OffspringCache`] keeps,
//! per offspring, the log of its unnormalized kernel sum over parents, so the
//! offspring likelihood change of a parent update costs O(n).
//!
//! Both caches are rebuilt from scratch every [`REFRESH_INTERVAL`] commits to
//! bound floating-point drift.

use std::f64::consts::PI;

use crate::geometry::{Point, Window};
use crate::model::{local_energies, log_add_exp, log_kernel_sum, ModelParams, LOCAL_ENERGY_CAP};

pub const REFRESH_INTERVAL: usize = 512;

/// An elementary birth-death proposal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BdMove {
    Birth(Point),
    Death(usize),
    /// Remove the parent at the index and add the point.
    Relocate(usize, Point),
}

#[derive(Clone, Debug)]
pub struct ParentConfig {
    points: Vec<Point>,
    local: Vec<f64>,
    // ln phi between the proposal's new point and each existing point
    fresh: Vec<f64>,
    // ln phi between the removed point and each existing point
    stale: Vec<f64>,
    new_local: f64,
    commits: usize,
}

impl ParentConfig {
    pub fn new(points: Vec<Point>, params: &ModelParams) -> Self {
        let local = local_energies(&points, params);
        Self {
            points,
            local,
            fresh: Vec::new(),
            stale: Vec::new(),
            new_local: 0.0,
            commits: 0,
        }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Rebuilds the cached local sums, e.g. after theta changed.
    pub fn refresh(&mut self, params: &ModelParams) {
        self.local = local_energies(&self.points, params);
        self.commits = 0;
    }

    pub fn log_h(&self, params: &ModelParams) -> f64 {
        if self.local.contains(&f64::NEG_INFINITY) {
            return f64::NEG_INFINITY;
        }
        self.points.len() as f64 * params.kappa().ln() + self.local.iter().map(|l| l.min(LOCAL_ENERGY_CAP)).sum::<f64>()
    }

    fn fill(buf: &mut Vec<f64>, points: &[Point], skip: Option<usize>, p: &Point, params: &ModelParams) -> (f64, bool) {
        buf.clear();
        let mut sum = 0.0;
        let mut coincident = false;
        for (j, c) in points.iter().enumerate() {
            if Some(j) == skip {
                buf.push(0.0);
                continue;
            }
            let l = params.log_phi(p.dist(c));
            if l == f64::NEG_INFINITY {
                coincident = true;
            }
            buf.push(l);
            sum += l;
        }
        (sum, coincident)
    }

    /// Change in `ln h` if `mv` were applied. Must precede [`Self::commit`] for the same move.
    pub fn delta(&mut self, mv: &BdMove, params: &ModelParams) -> f64 {
        let cap = LOCAL_ENERGY_CAP;
        match *mv {
            BdMove::Birth(xi) => {
                let (s, hit) = Self::fill(&mut self.fresh, &self.points, None, &xi, params);
                if hit {
                    return f64::NEG_INFINITY;
                }
                self.new_local = s;
                let mut d = params.kappa().ln() + s.min(cap);
                for (l, f) in self.local.iter().zip(&self.fresh) {
                    d += (l + f).min(cap) - l.min(cap);
                }
                d
            }
            BdMove::Death(idx) => {
                let eta = self.points[idx];
                let (s_old, _) = Self::fill(&mut self.stale, &self.points, Some(idx), &eta, params);
                let mut d = -params.kappa().ln() - s_old.min(cap);
                for (j, (l, st)) in self.local.iter().zip(&self.stale).enumerate() {
                    if j != idx {
                        d += (l - st).min(cap) - l.min(cap);
                    }
                }
                d
            }
            BdMove::Relocate(idx, xi) => {
                let eta = self.points[idx];
                let (s_old, _) = Self::fill(&mut self.stale, &self.points, Some(idx), &eta, params);
                let (s_new, hit) = Self::fill(&mut self.fresh, &self.points, Some(idx), &xi, params);
                if hit {
                    return f64::NEG_INFINITY;
                }
                self.new_local = s_new;
                let mut d = s_new.min(cap) - s_old.min(cap);
                for (j, l) in self.local.iter().enumerate() {
                    if j != idx {
                        let shift = self.fresh[j] - self.stale[j];
                        d += (l + shift).min(cap) - l.min(cap);
                    }
                }
                d
            }
        }
    }

    pub fn commit(&mut self, mv: &BdMove, params: &ModelParams) {
        match *mv {
            BdMove::Birth(xi) => {
                for (l, f) in self.local.iter_mut().zip(&self.fresh) {
                    *l += f;
                }
                self.points.push(xi);
                self.local.push(self.new_local);
            }
            BdMove::Death(idx) => {
                for (j, (l, st)) in self.local.iter_mut().zip(&self.stale).enumerate() {
                    if j != idx {
                        *l -= st;
                    }
                }
                self.points.swap_remove(idx);
                self.local.swap_remove(idx);
            }
            BdMove::Relocate(idx, xi) => {
                for j in 0..self.local.len() {
                    if j != idx {
                        self.local[j] += self.fresh[j] - self.stale[j];
                    }
                }
                self.points[idx] = xi;
                self.local[idx] = self.new_local;
            }
        }
        self.commits += 1;
        if self.commits >= REFRESH_INTERVAL {
            self.refresh(params);
        }
    }
}

/// Per-offspring log kernel sums and per-parent window masses for one `omega`.
#[derive(Clone, Debug)]
pub struct OffspringCache {
    omega: f64,
    inv_two_omega2: f64,
    log_sums: Vec<f64>,
    masses: Vec<f64>,
    pending: Vec<f64>,
    pending_mass: f64,
    commits: usize,
}

/// Above this share of an offspring's kernel sum, removing a parent triggers
/// a fresh sum instead of a subtraction.
const DOMINANT_SHARE: f64 = 0.5;

impl OffspringCache {
    pub fn new(offspring: &[Point], parents: &[Point], window: &Window, omega: f64) -> Self {
        let inv = 1.0 / (2.0 * omega * omega);
        Self {
            omega,
            inv_two_omega2: inv,
            log_sums: offspring.iter().map(|x| log_kernel_sum(x, parents, inv)).collect(),
            masses: parents.iter().map(|c| window.gaussian_mass(c, omega)).collect(),
            pending: Vec::new(),
            pending_mass: 0.0,
            commits: 0,
        }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// `ln f(X | C, alpha, omega)` from the cached sums.
    pub fn log_f(&self, window: &Window, alpha: f64) -> f64 {
        let n = self.log_sums.len();
        if n > 0 && self.masses.is_empty() {
            return f64::NEG_INFINITY;
        }
        let log_norm = alpha.ln() - (2.0 * PI * self.omega * self.omega).ln();
        window.area() - alpha * self.masses.iter().sum::<f64>()
            + n as f64 * log_norm
            + self.log_sums.iter().sum::<f64>()
    }

    fn exponent(&self, x: &Point, c: &Point) -> f64 {
        -x.dist2(c) * self.inv_two_omega2
    }

    /// Change in `ln f` under `mv`; `parents` is the configuration before the move.
    pub fn delta(&mut self, mv: &BdMove, offspring: &[Point], parents: &[Point], window: &Window, alpha: f64) -> f64 {
        let n = offspring.len();
        let m = parents.len();
        self.pending.clear();
        match *mv {
            BdMove::Birth(xi) => {
                self.pending_mass = window.gaussian_mass(&xi, self.omega);
                if m == 0 && n > 0 {
                    // from zero likelihood to positive
                    for x in offspring {
                        self.pending.push(self.exponent(x, &xi));
                    }
                    return f64::INFINITY;
                }
                let mut d = -alpha * self.pending_mass;
                for (x, l) in offspring.iter().zip(&self.log_sums) {
                    let nl = log_add_exp(*l, self.exponent(x, &xi));
                    d += nl - l;
                    self.pending.push(nl);
                }
                d
            }
            BdMove::Death(idx) => {
                if m == 1 && n > 0 {
                    return f64::NEG_INFINITY;
                }
                let eta = parents[idx];
                let mut d = alpha * self.masses[idx];
                for (x, l) in offspring.iter().zip(&self.log_sums) {
                    let share = (self.exponent(x, &eta) - l).exp();
                    let nl = if share > DOMINANT_SHARE {
                        log_kernel_sum_except(x, parents, idx, None, self.inv_two_omega2)
                    } else {
                        l + (-share).ln_1p()
                    };
                    d += nl - l;
                    self.pending.push(nl);
                }
                d
            }
            BdMove::Relocate(idx, xi) => {
                let eta = parents[idx];
                self.pending_mass = window.gaussian_mass(&xi, self.omega);
                let mut d = -alpha * (self.pending_mass - self.masses[idx]);
                for (x, l) in offspring.iter().zip(&self.log_sums) {
                    let e_old = self.exponent(x, &eta);
                    let e_new = self.exponent(x, &xi);
                    let nl = if e_old == e_new {
                        *l
                    } else {
                        let share = (e_old - l).exp();
                        if share > DOMINANT_SHARE {
                            log_kernel_sum_except(x, parents, idx, Some(xi), self.inv_two_omega2)
                        } else {
                            log_add_exp(l + (-share).ln_1p(), e_new)
                        }
                    };
                    d += nl - l;
                    self.pending.push(nl);
                }
                d
            }
        }
    }

    /// Applies `mv`; `parents_after` is the configuration after the move.
    pub fn commit(&mut self, mv: &BdMove, offspring: &[Point], parents_after: &[Point]) {
        std::mem::swap(&mut self.log_sums, &mut self.pending);
        match *mv {
            BdMove::Birth(_) => self.masses.push(self.pending_mass),
            BdMove::Death(idx) => {
                self.masses.swap_remove(idx);
            }
            BdMove::Relocate(idx, _) => self.masses[idx] = self.pending_mass,
        }
        self.commits += 1;
        if self.commits >= REFRESH_INTERVAL {
            self.log_sums = offspring
                .iter()
                .map(|x| log_kernel_sum(x, parents_after, self.inv_two_omega2))
                .collect();
            self.commits = 0;
        }
    }
}

/// Log kernel sum over `parents` with index `skip` removed and optionally `extra` added.
fn log_kernel_sum_except(x: &Point, parents: &[Point], skip: usize, extra: Option<Point>, inv: f64) -> f64 {
    let terms = parents
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != skip)
        .map(|(_, c)| -x.dist2(c) * inv)
        .chain(extra.map(|c| -x.dist2(&c) * inv));
    let exps: Vec<f64> = terms.collect();
    let best = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return best;
    }
    best + exps.iter().map(|e| (e - best).exp()).sum::<f64>().ln()
}
