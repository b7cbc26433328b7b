//! Ripley's K, the pair correlation function, HPD intervals and trace summaries.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointPattern;
use crate::samplers::chain::{AcceptanceRates, ChainOutput};

fn check_radii(radii: &[f64], min_len: usize) -> Result<()> {
    if radii.len() < min_len {
        return Err(Error::InsufficientData(format!(
            "need at least {min_len} radii, got {}",
            radii.len()
        )));
    }
    if !radii.iter().all(|r| *r > 0.0 && r.is_finite()) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "radii must be positive and strictly ascending".into(),
        ));
    }
    Ok(())
}

fn check_points(pattern: &PointPattern) -> Result<()> {
    if pattern.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "K function needs at least 2 points, got {}",
            pattern.len()
        )));
    }
    Ok(())
}

/// `K(r) = |S| / n^2 * #{(i, j), i != j : |x_i - x_j| <= r}`, no edge correction.
pub fn ripley_k(pattern: &PointPattern, radii: &[f64]) -> Result<Vec<f64>> {
    check_points(pattern)?;
    check_radii(radii, 1)?;
    let pts = pattern.points();
    let n = pts.len();
    let mut d2: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            d2.push(pts[i].dist2(&pts[j]));
        }
    }
    d2.sort_by(f64::total_cmp);
    let scale = pattern.window().area() / (n as f64 * n as f64);
    Ok(radii
        .iter()
        .map(|r| {
            let count = d2.partition_point(|v| *v <= r * r);
            scale * 2.0 * count as f64
        })
        .collect())
}

/// Translation-corrected K for rectangular windows:
/// `|S|^2 / (n (n - 1)) * sum_{i != j} 1{d_ij <= r} / ((W - |dx|)(H - |dy|))`.
pub fn ripley_k_translation(pattern: &PointPattern, radii: &[f64]) -> Result<Vec<f64>> {
    check_points(pattern)?;
    check_radii(radii, 1)?;
    let rect = pattern.window().as_rect().ok_or_else(|| {
        Error::InvalidWindow("translation correction is only available for rectangular windows".into())
    })?;
    let (w, h) = (rect.width(), rect.height());
    let pts = pattern.points();
    let n = pts.len();
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = (pts[i].x - pts[j].x).abs();
            let dy = (pts[i].y - pts[j].y).abs();
            let overlap = (w - dx) * (h - dy);
            if overlap > 0.0 {
                pairs.push((dx * dx + dy * dy, 2.0 / overlap));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let area = pattern.window().area();
    let scale = area * area / (n as f64 * (n as f64 - 1.0));
    let mut out = Vec::with_capacity(radii.len());
    let (mut k, mut acc) = (0usize, 0.0);
    for r in radii {
        while k < pairs.len() && pairs[k].0 <= r * r {
            acc += pairs[k].1;
            k += 1;
        }
        out.push(scale * acc);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PcfOptions {
    /// Half-width, in grid steps, of the moving average applied to K before
    /// differencing; 0 disables smoothing.
    #[serde(default)]
    pub bandwidth: usize,
    #[serde(default)]
    pub translation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcfResult {
    pub r: Vec<f64>,
    pub k: Vec<f64>,
    pub j: Vec<f64>,
}

/// Three-point derivative on a possibly uneven grid: central in the interior,
/// second-order one-sided at the ends.
pub fn derivative(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    assert!(n >= 3 && f.len() == n);
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let h1 = x[i] - x[i - 1];
        let h2 = x[i + 1] - x[i];
        d[i] = -f[i - 1] * h2 / (h1 * (h1 + h2)) + f[i] * (h2 - h1) / (h1 * h2) + f[i + 1] * h1 / (h2 * (h1 + h2));
    }
    let (h1, h2) = (x[1] - x[0], x[2] - x[1]);
    d[0] = -f[0] * (2.0 * h1 + h2) / (h1 * (h1 + h2)) + f[1] * (h1 + h2) / (h1 * h2) - f[2] * h1 / (h2 * (h1 + h2));
    let (h1, h2) = (x[n - 2] - x[n - 3], x[n - 1] - x[n - 2]);
    d[n - 1] = f[n - 3] * h2 / (h1 * (h1 + h2)) - f[n - 2] * (h1 + h2) / (h1 * h2)
        + f[n - 1] * (2.0 * h2 + h1) / (h2 * (h1 + h2));
    d
}

/// Centered moving average with the window truncated at the ends.
pub fn box_smooth(values: &[f64], half_width: usize) -> Vec<f64> {
    if half_width == 0 {
        return values.to_vec();
    }
    let n = values.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half_width);
            let hi = (i + half_width).min(n - 1);
            values[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// `J(r) = K'(r) / (2 pi r)` from K values on a radius grid.
pub fn pcf_from_k(radii: &[f64], k: &[f64]) -> Result<Vec<f64>> {
    check_radii(radii, 3)?;
    if k.len() != radii.len() {
        return Err(Error::InvalidParameter("K and radius grids differ in length".into()));
    }
    Ok(derivative(radii, k)
        .iter()
        .zip(radii)
        .map(|(dk, r)| dk / (2.0 * PI * r))
        .collect())
}

pub fn pcf(pattern: &PointPattern, radii: &[f64], options: &PcfOptions) -> Result<PcfResult> {
    check_radii(radii, 3)?;
    let k = if options.translation {
        ripley_k_translation(pattern, radii)?
    } else {
        ripley_k(pattern, radii)?
    };
    let j = pcf_from_k(radii, &box_smooth(&k, options.bandwidth))?;
    Ok(PcfResult {
        r: radii.to_vec(),
        k,
        j,
    })
}

/// Evenly spaced grid `step, 2 step, ..., max`.
pub fn radius_grid(max: f64, step: f64) -> Vec<f64> {
    let n = (max / step + 1e-9).floor() as usize;
    (1..=n).map(|i| i as f64 * step).collect()
}

/// Minimum number of draws accepted by [`hpd`].
pub const MIN_HPD_SAMPLES: usize = 100;

/// Shortest interval covering `ceil(level * N)` sorted samples; ties go to the
/// lowest interval.
pub fn hpd(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    if samples.len() < MIN_HPD_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "HPD needs at least {MIN_HPD_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if !(level > 0.0 && level <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "HPD level must lie in (0, 1], got {level}"
        )));
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("samples contain NaN".into()));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let k = ((level * n as f64).ceil() as usize).clamp(1, n);
    let mut best = 0;
    let mut width = f64::INFINITY;
    for i in 0..=(n - k) {
        let w = s[i + k - 1] - s[i];
        if w < width {
            width = w;
            best = i;
        }
    }
    Ok((s[best], s[best + k - 1]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    /// 95% HPD; absent with fewer than 100 draws.
    pub hpd: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub params: Vec<ParamSummary>,
    pub acceptance: AcceptanceRates,
    pub m_trace: Vec<usize>,
}

pub const PARAM_NAMES: [&str; 5] = ["alpha", "omega", "kappa", "theta1", "theta2"];

pub fn summarize(name: &str, values: &[f64]) -> ParamSummary {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    ParamSummary {
        name: name.to_string(),
        mean,
        hpd: hpd(values, 0.95).ok(),
    }
}

pub fn trace_summary(output: &ChainOutput) -> Result<TraceSummary> {
    if output.samples.is_empty() {
        return Err(Error::InsufficientData("chain has no post-burn-in samples".into()));
    }
    let params = PARAM_NAMES
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let v: Vec<f64> = output.samples.iter().map(|s| s.values()[k]).collect();
            summarize(name, &v)
        })
        .chain(std::iter::once({
            let v: Vec<f64> = output.samples.iter().map(|s| s.m as f64).collect();
            summarize("m", &v)
        }))
        .collect();
    Ok(TraceSummary {
        params,
        acceptance: output.acceptance,
        m_trace: output.m_trace.clone(),
    })
}
