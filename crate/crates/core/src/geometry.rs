//! Observation windows and planar point patterns.
//!
//! Coordinates are projected planar meters throughout. A [`Window`] is either
//! an axis-aligned rectangle or a simple polygon; boundary points count as
//! inside. Besides area, membership and uniform sampling, the window provides
//! [`Window::gaussian_mass`], the probability mass an isotropic Gaussian kernel
//! places inside the window, which every offspring likelihood evaluation needs.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of quadrature cells per axis for polygon Gaussian mass.
pub const DEFAULT_MASS_RESOLUTION: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dist2(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn dist(&self, other: &Point) -> f64 {
        self.dist2(other).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }
}

/// Inside-runs of the polygon quadrature mask, one list of column ranges per row.
#[derive(Debug)]
struct MassGrid {
    nx: usize,
    ny: usize,
    runs: Vec<Vec<(usize, usize)>>,
}

#[derive(Debug)]
enum Shape {
    Rect(Rect),
    Polygon { vertices: Vec<Point>, grid: MassGrid },
}

#[derive(Debug)]
struct WindowInner {
    shape: Shape,
    bbox: Rect,
    area: f64,
}

/// Bounded observation domain. Immutable; clones share the same geometry.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "WindowSpec", into = "WindowSpec")]
pub struct Window(Arc<WindowInner>);

/// JSON form of a window: `{"type":"rect","x":[..],"y":[..]}` or
/// `{"type":"poly","vertices":[[x,y],...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum WindowSpec {
    #[serde(rename = "rect")]
    Rect { x: [f64; 2], y: [f64; 2] },
    #[serde(rename = "poly")]
    Poly {
        vertices: Vec<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        resolution: Option<usize>,
    },
}

impl PartialEq for Window {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || WindowSpec::from(self.clone()) == WindowSpec::from(other.clone())
    }
}

impl TryFrom<WindowSpec> for Window {
    type Error = Error;

    fn try_from(spec: WindowSpec) -> Result<Self> {
        match spec {
            WindowSpec::Rect { x, y } => Window::rect(x[0], x[1], y[0], y[1]),
            WindowSpec::Poly { vertices, resolution } => Window::polygon_with_resolution(
                vertices.iter().map(|v| Point::new(v[0], v[1])).collect(),
                resolution.unwrap_or(DEFAULT_MASS_RESOLUTION),
            ),
        }
    }
}

impl From<Window> for WindowSpec {
    fn from(w: Window) -> Self {
        match &w.0.shape {
            Shape::Rect(r) => WindowSpec::Rect {
                x: [r.x_min, r.x_max],
                y: [r.y_min, r.y_max],
            },
            Shape::Polygon { vertices, grid } => WindowSpec::Poly {
                vertices: vertices.iter().map(|p| [p.x, p.y]).collect(),
                resolution: Some(grid.nx),
            },
        }
    }
}

impl Window {
    pub fn rect(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        if ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidWindow("non-finite rectangle bound".into()));
        }
        if !(x_min < x_max && y_min < y_max) {
            return Err(Error::InvalidWindow(format!(
                "rectangle bounds not ordered: x=[{x_min}, {x_max}], y=[{y_min}, {y_max}]"
            )));
        }
        let r = Rect {
            x_min,
            x_max,
            y_min,
            y_max,
        };
        Ok(Window(Arc::new(WindowInner {
            shape: Shape::Rect(r),
            bbox: r,
            area: r.width() * r.height(),
        })))
    }

    /// Square `[0, side] x [0, side]`.
    pub fn square(side: f64) -> Result<Self> {
        Self::rect(0.0, side, 0.0, side)
    }

    pub fn polygon(vertices: Vec<Point>) -> Result<Self> {
        Self::polygon_with_resolution(vertices, DEFAULT_MASS_RESOLUTION)
    }

    pub fn polygon_with_resolution(mut vertices: Vec<Point>, resolution: usize) -> Result<Self> {
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::InvalidWindow(
                "polygon needs at least 3 distinct vertices".into(),
            ));
        }
        if resolution == 0 {
            return Err(Error::InvalidWindow("mass resolution must be positive".into()));
        }
        if !vertices.iter().all(|p| p.x.is_finite() && p.y.is_finite()) {
            return Err(Error::InvalidWindow("non-finite polygon vertex".into()));
        }
        if let Some((i, j)) = find_self_intersection(&vertices) {
            return Err(Error::InvalidWindow(format!("polygon edges {i} and {j} intersect")));
        }
        let area = shoelace(&vertices).abs();
        if !(area > 0.0) {
            return Err(Error::InvalidWindow("polygon has zero area".into()));
        }
        let bbox = bounding_box(&vertices);
        let grid = MassGrid::build(&vertices, &bbox, resolution);
        Ok(Window(Arc::new(WindowInner {
            shape: Shape::Polygon { vertices, grid },
            bbox,
            area,
        })))
    }

    /// Area in square meters.
    pub fn area(&self) -> f64 {
        self.0.area
    }

    pub fn bounding_box(&self) -> Rect {
        self.0.bbox
    }

    pub fn as_rect(&self) -> Option<Rect> {
        match &self.0.shape {
            Shape::Rect(r) => Some(*r),
            Shape::Polygon { .. } => None,
        }
    }

    pub fn vertices(&self) -> Option<&[Point]> {
        match &self.0.shape {
            Shape::Rect(_) => None,
            Shape::Polygon { vertices, .. } => Some(vertices),
        }
    }

    /// Closed-region membership; polygons use the even-odd rule.
    pub fn contains(&self, p: &Point) -> bool {
        match &self.0.shape {
            Shape::Rect(r) => p.x >= r.x_min && p.x <= r.x_max && p.y >= r.y_min && p.y <= r.y_max,
            Shape::Polygon { vertices, .. } => polygon_contains(vertices, p),
        }
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let b = &self.0.bbox;
        loop {
            let p = Point::new(
                b.x_min + rng.random::<f64>() * b.width(),
                b.y_min + rng.random::<f64>() * b.height(),
            );
            if self.contains(&p) {
                return p;
            }
        }
    }

    /// Mass of the isotropic Gaussian N(center, omega^2 I) inside the window.
    ///
    /// Closed form for rectangles; masked midpoint quadrature on the polygon's
    /// bounding box otherwise. The kernel is separable, so the quadrature
    /// costs one exponential per grid row and column.
    pub fn gaussian_mass(&self, center: &Point, omega: f64) -> f64 {
        debug_assert!(omega > 0.0);
        match &self.0.shape {
            Shape::Rect(r) => {
                let px = normal_interval((r.x_min - center.x) / omega, (r.x_max - center.x) / omega);
                let py = normal_interval((r.y_min - center.y) / omega, (r.y_max - center.y) / omega);
                (px * py).clamp(0.0, 1.0)
            }
            Shape::Polygon { grid, .. } => grid.gaussian_mass(&self.0.bbox, center, omega).clamp(0.0, 1.0),
        }
    }
}

/// P(a <= Z <= b) for a standard normal Z, evaluated on the tail that keeps precision.
fn normal_interval(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        0.5 * (libm::erfc(a / SQRT_2) - libm::erfc(b / SQRT_2))
    } else if b < 0.0 {
        0.5 * (libm::erfc(-b / SQRT_2) - libm::erfc(-a / SQRT_2))
    } else {
        1.0 - 0.5 * (libm::erfc(-a / SQRT_2) + libm::erfc(b / SQRT_2))
    }
}

impl MassGrid {
    fn build(vertices: &[Point], bbox: &Rect, n: usize) -> Self {
        let dx = bbox.width() / n as f64;
        let dy = bbox.height() / n as f64;
        let runs = (0..n)
            .map(|k| {
                let y = bbox.y_min + (k as f64 + 0.5) * dy;
                let mut row = Vec::new();
                let mut start = None;
                for i in 0..n {
                    let x = bbox.x_min + (i as f64 + 0.5) * dx;
                    let inside = polygon_contains(vertices, &Point::new(x, y));
                    match (inside, start) {
                        (true, None) => start = Some(i),
                        (false, Some(s)) => {
                            row.push((s, i));
                            start = None;
                        }
                        _ => {}
                    }
                }
                if let Some(s) = start {
                    row.push((s, n));
                }
                row
            })
            .collect();
        Self { nx: n, ny: n, runs }
    }

    /// Sum of exact Gaussian cell masses over cells whose centres lie inside.
    fn gaussian_mass(&self, bbox: &Rect, c: &Point, omega: f64) -> f64 {
        let dx = bbox.width() / self.nx as f64;
        let dy = bbox.height() / self.ny as f64;
        let cdf = |z: f64| 0.5 * libm::erfc(-z / SQRT_2);
        // cx[i] = P(X <= left edge of column i)
        let cx: Vec<f64> = (0..=self.nx)
            .map(|i| cdf((bbox.x_min + i as f64 * dx - c.x) / omega))
            .collect();
        let mut total = 0.0;
        let mut below = cdf((bbox.y_min - c.y) / omega);
        for (k, row) in self.runs.iter().enumerate() {
            let above = cdf((bbox.y_min + (k + 1) as f64 * dy - c.y) / omega);
            let wy = above - below;
            below = above;
            if row.is_empty() || wy == 0.0 {
                continue;
            }
            let sx: f64 = row.iter().map(|&(s, e)| cx[e] - cx[s]).sum();
            total += wy * sx;
        }
        total
    }
}

fn shoelace(v: &[Point]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        s += a.x * b.y - b.x * a.y;
    }
    0.5 * s
}

fn bounding_box(v: &[Point]) -> Rect {
    let mut r = Rect {
        x_min: f64::INFINITY,
        x_max: f64::NEG_INFINITY,
        y_min: f64::INFINITY,
        y_max: f64::NEG_INFINITY,
    };
    for p in v {
        r.x_min = r.x_min.min(p.x);
        r.x_max = r.x_max.max(p.x);
        r.y_min = r.y_min.min(p.y);
        r.y_max = r.y_max.max(p.y);
    }
    r
}

#[inline]
fn cross(o: &Point, a: &Point, b: &Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn on_segment(a: &Point, b: &Point, p: &Point) -> bool {
    let len2 = a.dist2(b);
    let c = cross(a, b, p);
    // collinear up to rounding relative to the edge length
    if c * c > 1e-24 * len2 * len2.max(1.0) {
        return false;
    }
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn polygon_contains(v: &[Point], p: &Point) -> bool {
    let n = v.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (&v[i], &v[j]);
        if on_segment(a, b, p) {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn segments_intersect(p1: &Point, p2: &Point, q1: &Point, q2: &Point) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

fn find_self_intersection(v: &[Point]) -> Option<(usize, usize)> {
    let n = v.len();
    for i in 0..n {
        let (a1, a2) = (&v[i], &v[(i + 1) % n]);
        for j in (i + 1)..n {
            // adjacent edges share a vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (b1, b2) = (&v[j], &v[(j + 1) % n]);
            if segments_intersect(a1, a2, b1, b2) {
                return Some((i, j));
            }
        }
    }
    None
}

/// A finite planar point set together with its observation window.
#[derive(Clone, Debug)]
pub struct PointPattern {
    points: Vec<Point>,
    window: Window,
}

impl PointPattern {
    /// Fails if any point lies outside `window`.
    pub fn new(points: Vec<Point>, window: Window) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !window.contains(p)) {
            return Err(Error::OutsideWindow { x: p.x, y: p.y });
        }
        Ok(Self { points, window })
    }

    pub fn empty(window: Window) -> Self {
        Self {
            points: Vec::new(),
            window,
        }
    }

    /// Keeps the points inside `window`; returns the pattern and the number dropped.
    pub fn clipped(points: Vec<Point>, window: Window) -> (Self, usize) {
        let before = points.len();
        let kept: Vec<Point> = points.into_iter().filter(|p| window.contains(p)).collect();
        let dropped = before - kept.len();
        (Self { points: kept, window }, dropped)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }
}
