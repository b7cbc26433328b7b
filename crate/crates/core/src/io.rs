//! File formats: point and sample CSVs, JSON manifests.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::ParamSummary;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::samplers::chain::{AcceptanceRates, ChainOutput, ParentDraw, SampleRecord};

#[derive(Serialize, Deserialize)]
struct XY {
    x: f64,
    y: f64,
}

/// `x,y` CSV.
pub fn write_points(path: &Path, points: &[Point]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in points {
        w.serialize(XY { x: p.x, y: p.y })?;
    }
    if points.is_empty() {
        w.write_record(["x", "y"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_points(path: &Path) -> Result<Vec<Point>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        let XY { x, y } = row.map_err(parse_error)?;
        out.push(Point::new(x, y));
    }
    Ok(out)
}

/// Malformed values become `Error::Parse` carrying the file line.
fn parse_error(e: csv::Error) -> Error {
    match (e.kind(), e.position()) {
        (csv::ErrorKind::Deserialize { err, .. }, Some(pos)) => Error::Parse {
            row: pos.line() as usize,
            message: err.to_string(),
        },
        _ => e.into(),
    }
}

/// `iter,alpha,omega,kappa,theta1,theta2,m` CSV.
pub fn write_samples(path: &Path, samples: &[SampleRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for s in samples {
        w.serialize(s)?;
    }
    if samples.is_empty() {
        w.write_record(["iter", "alpha", "omega", "kappa", "theta1", "theta2", "m"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_samples(path: &Path) -> Result<Vec<SampleRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(parse_error)).collect()
}

#[derive(Serialize, Deserialize)]
struct DrawRow {
    iter: usize,
    alpha: f64,
    omega: f64,
    x: Option<f64>,
    y: Option<f64>,
}

/// `iter,alpha,omega,x,y` CSV, one row per parent; a draw without parents is
/// a single row with empty coordinates.
pub fn write_parent_draws(path: &Path, draws: &[ParentDraw]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for d in draws {
        let row = |p: Option<&Point>| DrawRow {
            iter: d.iter,
            alpha: d.alpha,
            omega: d.omega,
            x: p.map(|p| p.x),
            y: p.map(|p| p.y),
        };
        if d.parents.is_empty() {
            w.serialize(row(None))?;
        }
        for p in &d.parents {
            w.serialize(row(Some(p)))?;
        }
    }
    if draws.is_empty() {
        w.write_record(["iter", "alpha", "omega", "x", "y"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_parent_draws(path: &Path) -> Result<Vec<ParentDraw>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out: Vec<ParentDraw> = Vec::new();
    for row in r.deserialize() {
        let row: DrawRow = row.map_err(parse_error)?;
        if out.last().is_none_or(|d| d.iter != row.iter) {
            out.push(ParentDraw {
                iter: row.iter,
                alpha: row.alpha,
                omega: row.omega,
                parents: Vec::new(),
            });
        }
        if let (Some(x), Some(y)) = (row.x, row.y) {
            out.last_mut().expect("pushed above").parents.push(Point::new(x, y));
        }
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainManifest {
    pub chain_index: u64,
    pub samples: usize,
    pub final_parent_count: usize,
    pub acceptance: AcceptanceRates,
    pub offspring_scale: f64,
    pub parent_scale: f64,
    pub summary: Vec<ParamSummary>,
}

impl ChainManifest {
    pub fn new(out: &ChainOutput, summary: Vec<ParamSummary>) -> Self {
        Self {
            chain_index: out.chain_index,
            samples: out.samples.len(),
            final_parent_count: out.final_parents.len(),
            acceptance: out.acceptance,
            offspring_scale: out.offspring_scale,
            parent_scale: out.parent_scale,
            summary,
        }
    }
}

/// Everything needed to rerun a command: the resolved configuration, its
/// hash, the seed, and the files written. No timestamps, so reruns are
/// byte-identical.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub chains: Vec<ChainManifest>,
}
