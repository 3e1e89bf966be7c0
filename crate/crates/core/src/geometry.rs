//! ℓ_r norms, Voronoi assignment, open-cell membership, and sphere coverings.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{Point, Seed};

/// The ℓ_r norm on R^d, `r` in `[1, ∞]`; `r = ∞` is stored as `f64::INFINITY`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct NormSpec {
    r: f64,
}

impl NormSpec {
    pub fn new(r: f64) -> Result<Self> {
        if r.is_nan() || r < 1.0 {
            return Err(Error::InvalidArgument(format!("norm exponent must be >= 1, got {r}")));
        }
        Ok(NormSpec { r })
    }

    pub const fn euclidean() -> Self {
        NormSpec { r: 2.0 }
    }

    pub const fn l1() -> Self {
        NormSpec { r: 1.0 }
    }

    pub const fn max_norm() -> Self {
        NormSpec { r: f64::INFINITY }
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn is_infinite(&self) -> bool {
        self.r.is_infinite()
    }

    /// `1 < r < ∞`.
    pub fn is_strictly_convex(&self) -> bool {
        self.r > 1.0 && self.r.is_finite()
    }

    /// Parses `"2"`, `"1.5"`, `"inf"`.
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(NormSpec::max_norm()),
            other => other
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("cannot parse norm exponent `{s}`")))
                .and_then(NormSpec::new),
        }
    }

    /// A monotone transform of the norm: `Σ|v|^r` for finite `r`, `max|v|` for ∞.
    /// Comparisons between distances can use this without taking roots.
    #[inline]
    pub(crate) fn gauge_of_diff(&self, a: &[f64], b: &[f64]) -> f64 {
        if self.r == 2.0 {
            a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
        } else if self.r == 1.0 {
            a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
        } else if self.r.is_infinite() {
            a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
        } else {
            a.iter().zip(b).map(|(x, y)| (x - y).abs().powf(self.r)).sum()
        }
    }

    #[inline]
    pub(crate) fn gauge_to_norm(&self, g: f64) -> f64 {
        if self.r == 2.0 {
            g.sqrt()
        } else if self.r == 1.0 || self.r.is_infinite() {
            g
        } else {
            g.powf(1.0 / self.r)
        }
    }

    #[inline]
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.gauge_to_norm(self.gauge_of_diff(a, b))
    }

    #[inline]
    pub fn norm_of(&self, v: &[f64]) -> f64 {
        let g = if self.r == 2.0 {
            v.iter().map(|x| x * x).sum()
        } else if self.r == 1.0 {
            v.iter().map(|x| x.abs()).sum()
        } else if self.r.is_infinite() {
            v.iter().map(|x| x.abs()).fold(0.0, f64::max)
        } else {
            v.iter().map(|x| x.abs().powf(self.r)).sum()
        };
        self.gauge_to_norm(g)
    }
}

impl Default for NormSpec {
    fn default() -> Self {
        NormSpec::euclidean()
    }
}

impl fmt::Debug for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self)
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.r.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.r)
        }
    }
}

impl TryFrom<f64> for NormSpec {
    type Error = Error;
    fn try_from(r: f64) -> Result<Self> {
        NormSpec::new(r)
    }
}

impl From<NormSpec> for f64 {
    fn from(n: NormSpec) -> f64 {
        n.r
    }
}

/// `|ξ|_r`.
pub fn norm(xi: &Point, spec: NormSpec) -> f64 {
    spec.norm_of(xi)
}

/// Ordered tuple of `N >= 1` points in R^d; duplicates are allowed.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct Grid {
    points: Vec<Point>,
}

impl Grid {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyGrid)?;
        let dim = first.dim();
        if let Some(p) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.dim(),
            });
        }
        Ok(Grid { points })
    }

    pub fn from_scalars(xs: &[f64]) -> Result<Self> {
        Grid::new(xs.iter().map(|&x| Point::new(vec![x])).collect::<Result<_>>()?)
    }

    /// Grid from a flat coordinate vector of length `N * dim`.
    pub fn from_flat(coords: &[f64], dim: usize) -> Result<Self> {
        if dim == 0 || coords.len() % dim != 0 {
            return Err(Error::InvalidArgument(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        Grid::new(coords.chunks(dim).map(|c| Point::new(c.to_vec())).collect::<Result<_>>()?)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn flat(&self) -> Vec<f64> {
        self.points.iter().flat_map(|p| p.iter().copied()).collect()
    }

    /// Scalar coordinates of a one-dimensional grid.
    pub fn scalars(&self) -> Vec<f64> {
        self.points.iter().map(|p| p[0]).collect()
    }

    /// Number of distinct points.
    pub fn distinct_count(&self) -> usize {
        let mut distinct: Vec<&Point> = Vec::new();
        for p in &self.points {
            if !distinct.contains(&p) {
                distinct.push(p);
            }
        }
        distinct.len()
    }

    pub fn with_point(&self, p: Point) -> Result<Self> {
        let mut points = self.points.clone();
        points.push(p);
        Grid::new(points)
    }

    /// Largest pairwise distance.
    pub fn diameter(&self, spec: NormSpec) -> f64 {
        let mut d = 0.0f64;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                d = d.max(spec.distance(a, b));
            }
        }
        d
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.points).finish()
    }
}

impl TryFrom<Vec<Point>> for Grid {
    type Error = Error;
    fn try_from(v: Vec<Point>) -> Result<Self> {
        Grid::new(v)
    }
}

impl From<Grid> for Vec<Point> {
    fn from(g: Grid) -> Self {
        g.points
    }
}

fn check_dim(grid: &Grid, got: usize) -> Result<()> {
    if grid.dim() != got {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            got,
        });
    }
    Ok(())
}

/// Index of the nearest grid point; ties go to the lowest index.
pub fn nearest_index(xi: &[f64], grid: &Grid, spec: NormSpec) -> Result<usize> {
    check_dim(grid, xi.len())?;
    Ok(nearest_unchecked(xi, grid.points(), spec).0)
}

/// `(index, gauge)` of the nearest point, lowest index on ties.
#[inline]
pub(crate) fn nearest_unchecked(xi: &[f64], points: &[Point], spec: NormSpec) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for (i, p) in points.iter().enumerate() {
        let g = spec.gauge_of_diff(xi, p);
        if g < best.1 {
            best = (i, g);
        }
    }
    best
}

/// True iff `ξ` is strictly closer to `x_i` than to every other grid point.
pub fn in_open_cell(xi: &[f64], grid: &Grid, i: usize, spec: NormSpec) -> Result<bool> {
    check_dim(grid, xi.len())?;
    if i >= grid.len() {
        return Err(Error::InvalidArgument(format!("index {i} out of range for {} points", grid.len())));
    }
    Ok(in_open_cell_unchecked(xi, grid.points(), i, spec))
}

#[inline]
fn in_open_cell_unchecked(xi: &[f64], points: &[Point], i: usize, spec: NormSpec) -> bool {
    let own = spec.gauge_of_diff(xi, &points[i]);
    points
        .iter()
        .enumerate()
        .all(|(j, p)| j == i || own < spec.gauge_of_diff(xi, p))
}

/// Relative margin used when probing cells along rays: for norms that are
/// not strictly convex, bisectors contain open regions of exact ties, which
/// rounding would otherwise split at random.
const TIE_MARGIN: f64 = 1e-10;

#[inline]
fn clearly_in_open_cell(xi: &[f64], points: &[Point], i: usize, spec: NormSpec) -> bool {
    let own = spec.gauge_of_diff(xi, &points[i]);
    points
        .iter()
        .enumerate()
        .all(|(j, p)| j == i || own < spec.gauge_of_diff(xi, p) * (1.0 - TIE_MARGIN))
}

fn unit_vector(dim: usize, axis: usize, sign: f64) -> Point {
    let mut v = vec![0.0; dim];
    v[axis] = sign;
    Point::from_vec_unchecked(v)
}

/// Explicit unit-sphere grids whose closed unit balls cover the unit sphere.
///
/// | case | centers |
/// |------|---------|
/// | `d = 1` | `±1` |
/// | `r = ∞` | `±e_1` |
/// | `d = 2, r = 1` | `(-½, ½), (½, -½)` |
/// | `d = 2, 1 < r < ∞` | `(0, 1), (±(1 - 2^{-r})^{1/r}, -½)` |
/// | `2^r >= d` | `±e_i` |
pub fn covering_grid(d: usize, spec: NormSpec) -> Result<Grid> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    let r = spec.r();
    let points = if d == 1 {
        vec![Point::scalar(-1.0), Point::scalar(1.0)]
    } else if spec.is_infinite() {
        vec![unit_vector(d, 0, -1.0), unit_vector(d, 0, 1.0)]
    } else if d == 2 && r == 1.0 {
        vec![
            Point::from_vec_unchecked(vec![-0.5, 0.5]),
            Point::from_vec_unchecked(vec![0.5, -0.5]),
        ]
    } else if d == 2 {
        let x = (1.0 - 2f64.powf(-r)).powf(1.0 / r);
        vec![
            Point::from_vec_unchecked(vec![0.0, 1.0]),
            Point::from_vec_unchecked(vec![x, -0.5]),
            Point::from_vec_unchecked(vec![-x, -0.5]),
        ]
    } else if 2f64.powf(r) >= d as f64 {
        (0..d)
            .flat_map(|i| [unit_vector(d, i, 1.0), unit_vector(d, i, -1.0)])
            .collect()
    } else {
        return Err(Error::NoCoveringConstruction {
            dim: d,
            r: spec.to_string(),
        });
    };
    Grid::new(points)
}

/// Numerical evidence that the closed unit balls around `centers` cover the
/// unit sphere of `norm`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoveringCertificate {
    pub centers: Grid,
    pub norm: NormSpec,
    /// Largest distance from a sampled sphere point to its nearest center.
    pub max_min_distance: f64,
    pub worst_point: Point,
    pub sample_count: usize,
    pub seed: Seed,
    pub valid: bool,
}

/// Tolerance on `|c|_r = 1` for covering centers.
pub const SPHERE_TOL: f64 = 1e-9;
/// Slack on the covering radius.
pub const COVER_TOL: f64 = 1e-9;

/// Direction `index` under `seed`: a standard Gaussian vector scaled to unit
/// `spec`-norm. Not uniform on the ℓ_r sphere, but of full support.
fn sphere_direction(dim: usize, spec: NormSpec, seed: Seed, index: u64) -> Vec<f64> {
    let mut rng = seed.rng_for(index);
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = spec.norm_of(&v);
        if n > 1e-300 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

pub fn verify_covering(grid: &Grid, spec: NormSpec, samples: usize, seed: Seed) -> Result<CoveringCertificate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    for (index, c) in grid.points().iter().enumerate() {
        let n = spec.norm_of(c);
        if (n - 1.0).abs() > SPHERE_TOL {
            return Err(Error::OffSphere { index, norm: n });
        }
    }
    let dim = grid.dim();
    let (dist, worst) = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let x = sphere_direction(dim, spec, seed, i);
            let (_, g) = nearest_unchecked(&x, grid.points(), spec);
            (spec.gauge_to_norm(g), i)
        })
        .reduce(
            || (f64::NEG_INFINITY, u64::MAX),
            |a, b| {
                // max distance, lowest index on ties
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );
    let worst_point = Point::from_vec_unchecked(sphere_direction(dim, spec, seed, worst));
    Ok(CoveringCertificate {
        centers: grid.clone(),
        norm: spec,
        max_min_distance: dist,
        worst_point,
        sample_count: samples,
        seed,
        valid: dist <= 1.0 + COVER_TOL,
    })
}

/// `{0} ∪ {b_1 - b_0, ..., b_{d+1} - b_0}` for a regular simplex with
/// circumradius `scale` and barycenter `b_0`. The origin's Euclidean Voronoi
/// cell is bounded.
pub fn bounded_cell_grid_euclidean(d: usize, scale: f64) -> Result<Grid> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
    }
    // Vertices e_i - (1/(d+1)) 1 of the standard simplex in R^{d+1}, written
    // in the Helmert orthonormal basis of the hyperplane Σx = 0.
    let m = d + 1;
    let radius = (d as f64 / m as f64).sqrt();
    let mut points = vec![Point::origin(d)];
    for i in 0..m {
        let coords: Vec<f64> = (1..=d)
            .map(|k| {
                let norm = ((k * (k + 1)) as f64).sqrt();
                // h_k = (1, .., 1, -k, 0, ..)/norm with k ones; h_k ⟂ 1
                let hk_i = if i < k {
                    1.0
                } else if i == k {
                    -(k as f64)
                } else {
                    0.0
                };
                hk_i / norm * scale / radius
            })
            .collect();
        points.push(Point::from_vec_unchecked(coords));
    }
    Grid::new(points)
}

/// Radius of an open Voronoi cell as seen from its generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellRadius {
    Bounded(f64),
    Unbounded,
}

impl CellRadius {
    pub fn value(&self) -> Option<f64> {
        match self {
            CellRadius::Bounded(r) => Some(*r),
            CellRadius::Unbounded => None,
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, CellRadius::Bounded(_))
    }
}

/// Default search horizon: `1e3 (diameter + 1)`.
pub fn default_horizon(grid: &Grid, spec: NormSpec) -> f64 {
    1e3 * (grid.diameter(spec) + 1.0)
}

/// Estimates `max_u sup{t : x_i + t u ∈ V_i^o}` over sampled unit directions
/// (`spec`-norm) by bisection along each ray. Open cells are star-shaped
/// with respect to their generator, so membership along a ray is an interval.
///
/// In one dimension both directions are used regardless of `directions`.
///
/// Membership along rays uses a relative margin of `1e-10` on the gauge so
/// that exact ties (non-strictly convex norms) are never counted as inside.
pub fn cell_radius(
    grid: &Grid,
    i: usize,
    spec: NormSpec,
    directions: usize,
    seed: Seed,
    t_max: f64,
) -> Result<CellRadius> {
    if i >= grid.len() {
        return Err(Error::InvalidArgument(format!("index {i} out of range for {} points", grid.len())));
    }
    if !(t_max > 0.0) {
        return Err(Error::InvalidArgument("search horizon must be positive".into()));
    }
    let dim = grid.dim();
    let points = grid.points();
    let center = &points[i];
    if !in_open_cell_unchecked(center, points, i, spec) {
        // a duplicated generator has an empty open cell
        return Ok(CellRadius::Bounded(0.0));
    }
    let dirs: Vec<Vec<f64>> = if dim == 1 {
        vec![vec![-1.0], vec![1.0]]
    } else {
        let mut v: Vec<Vec<f64>> = (0..dim)
            .flat_map(|j| {
                let mut plus = vec![0.0; dim];
                plus[j] = 1.0;
                let minus = plus.iter().map(|x| -x).collect();
                [plus, minus]
            })
            .collect();
        v.extend((0..directions as u64).map(|k| sphere_direction(dim, spec, seed, k)));
        v
    };
    let ray = |u: &[f64], t: f64| -> Vec<f64> { center.iter().zip(u).map(|(c, d)| c + t * d).collect() };
    let radii: Vec<Option<f64>> = dirs
        .par_iter()
        .map(|u| {
            if clearly_in_open_cell(&ray(u, t_max), points, i, spec) {
                return None;
            }
            let (mut lo, mut hi) = (0.0f64, t_max);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if clearly_in_open_cell(&ray(u, mid), points, i, spec) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Some(hi)
        })
        .collect();
    let mut best = 0.0f64;
    for r in radii {
        match r {
            None => return Ok(CellRadius::Unbounded),
            Some(r) => best = best.max(r),
        }
    }
    Ok(CellRadius::Bounded(best))
}
