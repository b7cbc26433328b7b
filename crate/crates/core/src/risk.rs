//! Offspring intensity rasters, high-risk masks and risk-boundary circles.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::geometry::{Point, Window};

/// Default accumulation period of the intensity, in days.
pub const DEFAULT_DAYS: f64 = 14.0;
/// Average administrative-unit area, in m^2.
pub const DEFAULT_AREA_UNIT: f64 = 1.427e6;
pub const DEFAULT_THRESHOLD: f64 = 1.0;

pub const NODATA: i64 = -9999;

/// Cell-centred grid over the window's bounding box. Row 0 is the southern row.
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityRaster {
    pub x_origin: f64,
    pub y_origin: f64,
    pub cell_size: f64,
    pub ncols: usize,
    pub nrows: usize,
    /// Points per m^2; zero outside the window.
    pub values: Vec<f64>,
    pub inside: Vec<bool>,
}

impl IntensityRaster {
    fn grid(window: &Window, cell_size: f64) -> Result<Self> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cell size must be positive, got {cell_size}"
            )));
        }
        let bb = window.bounding_box();
        let ncols = ((bb.width() / cell_size) - 1e-9).ceil().max(1.0) as usize;
        let nrows = ((bb.height() / cell_size) - 1e-9).ceil().max(1.0) as usize;
        let mut inside = Vec::with_capacity(ncols * nrows);
        let mut r = Self {
            x_origin: bb.x_min,
            y_origin: bb.y_min,
            cell_size,
            ncols,
            nrows,
            values: vec![0.0; ncols * nrows],
            inside: Vec::new(),
        };
        for row in 0..nrows {
            for col in 0..ncols {
                inside.push(window.contains(&r.center(row, col)));
            }
        }
        r.inside = inside;
        Ok(r)
    }

    pub fn center(&self, row: usize, col: usize) -> Point {
        Point::new(
            self.x_origin + (col as f64 + 0.5) * self.cell_size,
            self.y_origin + (row as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.ncols + col]
    }

    /// Sum of values times cell area over cells inside the window.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_size * self.cell_size
    }

    /// Row and column of the largest value.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        (best / self.ncols, best % self.ncols)
    }

    pub fn write_ascii<W: Write>(&self, out: &mut W) -> Result<()> {
        write_header(out, self)?;
        for row in (0..self.nrows).rev() {
            let line: Vec<String> = (0..self.ncols)
                .map(|col| {
                    let i = row * self.ncols + col;
                    if self.inside[i] {
                        format!("{:e}", self.values[i])
                    } else {
                        NODATA.to_string()
                    }
                })
                .collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

fn write_header<W: Write>(out: &mut W, r: &IntensityRaster) -> Result<()> {
    writeln!(out, "ncols {}", r.ncols)?;
    writeln!(out, "nrows {}", r.nrows)?;
    writeln!(out, "xllcorner {}", r.x_origin)?;
    writeln!(out, "yllcorner {}", r.y_origin)?;
    writeln!(out, "cellsize {}", r.cell_size)?;
    writeln!(out, "NODATA_value {NODATA}")?;
    Ok(())
}

/// `g(x) = sum_i alpha k(x - c_i, omega)` at cell centres inside the window.
pub fn intensity_map(
    parents: &[Point],
    alpha: f64,
    omega: f64,
    window: &Window,
    cell_size: f64,
) -> Result<IntensityRaster> {
    if !(alpha >= 0.0) || !(omega > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "intensity needs alpha >= 0 and omega > 0 (got {alpha}, {omega})"
        )));
    }
    let mut r = IntensityRaster::grid(window, cell_size)?;
    let norm = alpha / (2.0 * PI * omega * omega);
    let inv = 1.0 / (2.0 * omega * omega);
    for row in 0..r.nrows {
        for col in 0..r.ncols {
            let i = row * r.ncols + col;
            if !r.inside[i] {
                continue;
            }
            let x = r.center(row, col);
            r.values[i] = norm * parents.iter().fold(0.0, |acc, c| acc + (-x.dist2(c) * inv).exp());
        }
    }
    Ok(r)
}

/// Average of [`intensity_map`] over posterior draws, each given as
/// `(parents, alpha, omega)`.
pub fn mean_intensity_map(draws: &[(&[Point], f64, f64)], window: &Window, cell_size: f64) -> Result<IntensityRaster> {
    let Some(((first, a0, w0), rest)) = draws.split_first() else {
        return Err(Error::InsufficientData("no posterior draws to average".into()));
    };
    let mut acc = intensity_map(first, *a0, *w0, window, cell_size)?;
    for (parents, alpha, omega) in rest {
        let r = intensity_map(parents, *alpha, *omega, window, cell_size)?;
        for (a, v) in acc.values.iter_mut().zip(&r.values) {
            *a += v;
        }
    }
    let n = draws.len() as f64;
    for v in &mut acc.values {
        *v /= n;
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSpec {
    pub days: f64,
    pub area_unit: f64,
    pub threshold: f64,
}

impl Default for ThresholdSpec {
    fn default() -> Self {
        Self {
            days: DEFAULT_DAYS,
            area_unit: DEFAULT_AREA_UNIT,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl ThresholdSpec {
    /// Intensity level above which a cell is flagged: more than `threshold`
    /// expected visits per day per `area_unit`.
    pub fn level(&self) -> f64 {
        self.threshold * self.days / self.area_unit
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RiskMask {
    pub raster: IntensityRaster,
    pub flags: Vec<bool>,
}

impl RiskMask {
    pub fn count(&self) -> usize {
        self.flags.iter().filter(|f| **f).count()
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.flags[row * self.raster.ncols + col]
    }

    pub fn write_ascii<W: Write>(&self, out: &mut W) -> Result<()> {
        let r = &self.raster;
        write_header(out, r)?;
        for row in (0..r.nrows).rev() {
            let line: Vec<String> = (0..r.ncols)
                .map(|col| {
                    let i = row * r.ncols + col;
                    if !r.inside[i] {
                        NODATA.to_string()
                    } else if self.flags[i] {
                        "1".into()
                    } else {
                        "0".into()
                    }
                })
                .collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Flags cells with `g > threshold * days / area_unit` (strict).
pub fn high_risk_mask(raster: &IntensityRaster, spec: &ThresholdSpec) -> Result<RiskMask> {
    if !(spec.days > 0.0 && spec.area_unit > 0.0 && spec.threshold >= 0.0) {
        return Err(Error::InvalidParameter(
            "days and area_unit must be positive and threshold non-negative".into(),
        ));
    }
    let level = spec.level();
    let flags = raster
        .values
        .iter()
        .zip(&raster.inside)
        .map(|(g, inside)| *inside && *g > level)
        .collect();
    Ok(RiskMask {
        raster: raster.clone(),
        flags,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl Circle {
    pub fn contains(&self, p: &Point) -> bool {
        self.center.dist(p) <= self.radius
    }
}

pub fn boundary_radius(theta2: f64, omega: f64) -> f64 {
    theta2 + 1.96 * omega
}

/// One circle of radius `theta2 + 1.96 omega` per parent.
pub fn risk_boundaries(parents: &[Point], theta2: f64, omega: f64) -> Vec<Circle> {
    let radius = boundary_radius(theta2, omega);
    parents.iter().map(|c| Circle { center: *c, radius }).collect()
}

/// GeoJSON FeatureCollection of point features carrying `radius_m`.
pub fn circles_geojson(circles: &[Circle]) -> serde_json::Value {
    let features: Vec<_> = circles
        .iter()
        .map(|c| {
            json!({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [c.center.x, c.center.y]},
                "properties": {"radius_m": c.radius},
            })
        })
        .collect();
    json!({"type": "FeatureCollection", "features": features})
}
