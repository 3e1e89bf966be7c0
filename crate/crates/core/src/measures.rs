//! Probability measures on R^d: finitely supported, analytic one-dimensional
//! families, and seeded samplers.
//!
//! Cells of a one-dimensional quantizer are half-open intervals `(lo, hi]`,
//! so a point sitting exactly on a midpoint belongs to the cell on its left.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};
use crate::quanterror::McEstimate;
use crate::special::{normal_cdf, normal_mass, normal_pdf, normal_quantile, normal_sf};

/// Standard-normal scores beyond this are treated as the end of the line.
pub(crate) const Z_CUTOFF: f64 = 40.0;

/// A finite point of R^d.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidPoint("dimension must be at least 1".into()));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint(format!("non-finite coordinate {bad}")));
        }
        Ok(Point(coords))
    }

    /// One-dimensional point. Panics on non-finite input.
    pub fn scalar(x: f64) -> Self {
        assert!(x.is_finite(), "non-finite coordinate {x}");
        Point(vec![x])
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim.max(1)])
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

/// Seed of every random procedure in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    /// Generator for draw `index` under this seed. Draws are independent of
    /// the order in which indices are visited.
    pub fn rng_for(self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(index);
        rng
    }

    /// Seed for an independent sub-task.
    pub fn derive(self, salt: u64) -> Seed {
        // splitmix64 finalizer
        let mut z = self.0 ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        Seed(z ^ (z >> 31))
    }
}

/// Finitely supported probability measure.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<Point>,
    weights: Vec<f64>,
    /// cumulative weights, for sampling and 1D quantiles
    cumulative: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        if atoms.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        let dim = atoms[0].dim();
        if let Some(a) = atoms.iter().find(|a| a.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: a.dim(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidMeasure("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        // naive summation drifts by O(n ε)
        let tol = 1e-12_f64.max(4.0 * f64::EPSILON * weights.len() as f64);
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, not 1")));
        }
        let cumulative = weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        Ok(DiscreteMeasure {
            atoms,
            weights,
            cumulative,
        })
    }

    /// Equal weights on the given atoms.
    pub fn uniform(atoms: Vec<Point>) -> Result<Self> {
        let n = atoms.len().max(1);
        let mut weights = vec![1.0 / n as f64; atoms.len()];
        // absorb the rounding residue into the last weight
        if let Some(last) = weights.last_mut() {
            *last = 1.0 - (n - 1) as f64 / n as f64;
        }
        DiscreteMeasure::new(atoms, weights)
    }

    /// One-dimensional measure from scalar atoms.
    pub fn from_scalars(atoms: &[f64], weights: &[f64]) -> Result<Self> {
        let atoms = atoms.iter().map(|&x| Point::new(vec![x])).collect::<Result<_>>()?;
        DiscreteMeasure::new(atoms, weights.to_vec())
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].dim()
    }

    /// Number of distinct atoms carrying positive weight.
    pub fn support_size(&self) -> usize {
        let mut seen: Vec<&Point> = Vec::new();
        for (a, w) in self.atoms.iter().zip(&self.weights) {
            if *w > 0.0 && !seen.contains(&a) {
                seen.push(a);
            }
        }
        seen.len()
    }

    fn pick(&self, u: f64) -> &Point {
        let total = *self.cumulative.last().expect("nonempty");
        let target = u * total;
        let i = self.cumulative.partition_point(|&c| c <= target);
        &self.atoms[i.min(self.atoms.len() - 1)]
    }

    fn scalar_atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.atoms.iter().map(|a| a[0]).zip(self.weights.iter().copied())
    }

    /// Atoms sorted by value with merged weights (1D only).
    pub(crate) fn sorted_scalars(&self) -> Vec<(f64, f64)> {
        let mut v: Vec<(f64, f64)> = self.scalar_atoms().filter(|(_, w)| *w > 0.0).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(v.len());
        for (x, w) in v {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += w,
                _ => merged.push((x, w)),
            }
        }
        merged
    }
}

/// One-dimensional analytic families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Analytic1D {
    Dirac { c: f64 },
    Uniform { a: f64, b: f64 },
    Normal { m: f64, s: f64 },
    /// Law of `exp(s Z + m)` with `Z` standard normal.
    LogNormal { m: f64, s: f64 },
}

impl Analytic1D {
    pub fn dirac(c: f64) -> Result<Self> {
        check_finite(&[c])?;
        Ok(Analytic1D::Dirac { c })
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        check_finite(&[a, b])?;
        if a >= b {
            return Err(Error::InvalidMeasure(format!("uniform requires a < b, got [{a}, {b}]")));
        }
        Ok(Analytic1D::Uniform { a, b })
    }

    pub fn normal(m: f64, s: f64) -> Result<Self> {
        check_finite(&[m, s])?;
        if s <= 0.0 {
            return Err(Error::InvalidMeasure(format!("normal requires s > 0, got {s}")));
        }
        Ok(Analytic1D::Normal { m, s })
    }

    pub fn lognormal(m: f64, s: f64) -> Result<Self> {
        check_finite(&[m, s])?;
        if s <= 0.0 {
            return Err(Error::InvalidMeasure(format!("lognormal requires s > 0, got {s}")));
        }
        Ok(Analytic1D::LogNormal { m, s })
    }

    /// `exp((n/2) Z - n^2/4)`: unit second moment for every `n`, mean `exp(-n^2/8)`.
    /// `n = 0` degenerates to the point mass at 1.
    pub fn unit_second_moment_lognormal(n: u32) -> Self {
        if n == 0 {
            return Analytic1D::Dirac { c: 1.0 };
        }
        let n = n as f64;
        Analytic1D::LogNormal {
            m: -n * n / 4.0,
            s: n / 2.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Analytic1D::Dirac { .. } => "dirac",
            Analytic1D::Uniform { .. } => "uniform",
            Analytic1D::Normal { .. } => "normal",
            Analytic1D::LogNormal { .. } => "lognormal",
        }
    }

    /// True when the law has a Lebesgue density.
    pub fn has_density(&self) -> bool {
        !matches!(self, Analytic1D::Dirac { .. })
    }

    pub fn density(&self, x: f64) -> f64 {
        match *self {
            Analytic1D::Dirac { .. } => 0.0,
            Analytic1D::Uniform { a, b } => {
                if x >= a && x <= b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Analytic1D::Normal { m, s } => normal_pdf((x - m) / s) / s,
            Analytic1D::LogNormal { m, s } => {
                if x <= 0.0 {
                    0.0
                } else {
                    normal_pdf((x.ln() - m) / s) / (s * x)
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Analytic1D::Dirac { c } => c,
            Analytic1D::Uniform { a, b } => 0.5 * (a + b),
            Analytic1D::Normal { m, .. } => m,
            Analytic1D::LogNormal { m, s } => (m + 0.5 * s * s).exp(),
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        match *self {
            Analytic1D::Dirac { c } => {
                if t >= c {
                    1.0
                } else {
                    0.0
                }
            }
            Analytic1D::Uniform { a, b } => ((t - a) / (b - a)).clamp(0.0, 1.0),
            Analytic1D::Normal { m, s } => normal_cdf((t - m) / s),
            Analytic1D::LogNormal { m, s } => {
                if t <= 0.0 {
                    0.0
                } else {
                    normal_cdf((t.ln() - m) / s)
                }
            }
        }
    }

    /// Left-continuous inverse of the distribution function on `[0, 1]`.
    pub fn quantile(&self, q: f64) -> f64 {
        self.quantile_at_score(normal_quantile(q))
    }

    /// Quantile at level `Phi(z)`. Exact for the Gaussian-driven families,
    /// which keeps quantile-coupling integrals free of inversion error.
    pub fn quantile_at_score(&self, z: f64) -> f64 {
        match *self {
            Analytic1D::Dirac { c } => c,
            Analytic1D::Uniform { a, b } => a + (b - a) * normal_cdf(z),
            Analytic1D::Normal { m, s } => m + s * z,
            Analytic1D::LogNormal { m, s } => (m + s * z).exp(),
        }
    }

    /// Standard-normal score of level `t`, i.e. the `z` with `F(t) = Phi(z)`.
    fn score(&self, t: f64) -> f64 {
        match *self {
            Analytic1D::Normal { m, s } => {
                if t.is_infinite() {
                    t
                } else {
                    (t - m) / s
                }
            }
            Analytic1D::LogNormal { m, s } => {
                if t <= 0.0 {
                    f64::NEG_INFINITY
                } else if t.is_infinite() {
                    f64::INFINITY
                } else {
                    (t.ln() - m) / s
                }
            }
            _ => unreachable!("score is only used for Gaussian-driven families"),
        }
    }

    /// Draw `index` under `seed`.
    pub fn sample_at(&self, seed: Seed, index: u64) -> f64 {
        let mut rng = seed.rng_for(index);
        match *self {
            Analytic1D::Dirac { c } => c,
            Analytic1D::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            Analytic1D::Normal { m, s } => m + s * rng.sample::<f64, _>(StandardNormal),
            Analytic1D::LogNormal { m, s } => (m + s * rng.sample::<f64, _>(StandardNormal)).exp(),
        }
    }

    /// `E[X^k ; lo < X <= hi]` for `k` in `{0, 1, 2}`.
    pub fn partial_moment(&self, k: u32, lo: f64, hi: f64) -> f64 {
        assert!(k <= 2, "partial moments are provided up to order 2");
        if hi <= lo {
            return 0.0;
        }
        match *self {
            Analytic1D::Dirac { c } => {
                if lo < c && c <= hi {
                    c.powi(k as i32)
                } else {
                    0.0
                }
            }
            Analytic1D::Uniform { a, b } => {
                let l = lo.max(a);
                let u = hi.min(b);
                if u <= l {
                    return 0.0;
                }
                let kp = k as i32 + 1;
                (u.powi(kp) - l.powi(kp)) / (kp as f64 * (b - a))
            }
            Analytic1D::Normal { m, s } => {
                let zl = self.score(lo);
                let zu = self.score(hi);
                let k0 = normal_mass(zl, zu);
                let d = normal_pdf(zl) - normal_pdf(zu);
                let k1 = d; // E[Z ; zl < Z <= zu]
                let bl = if zl.is_finite() { zl * normal_pdf(zl) } else { 0.0 };
                let bu = if zu.is_finite() { zu * normal_pdf(zu) } else { 0.0 };
                let k2 = k0 + bl - bu; // E[Z^2 ; ...]
                match k {
                    0 => k0,
                    1 => m * k0 + s * k1,
                    _ => m * m * k0 + 2.0 * m * s * k1 + s * s * k2,
                }
            }
            Analytic1D::LogNormal { m, s } => {
                let zl = self.score(lo);
                let zu = self.score(hi);
                let kf = k as f64;
                (kf * m + 0.5 * kf * kf * s * s).exp() * normal_mass(zl - kf * s, zu - kf * s)
            }
        }
    }

    /// `∫_{(lo, hi]} |ξ - x|^p μ(dξ)` for `p = 1` or even `p`.
    pub fn cell_integral(&self, lo: f64, hi: f64, x: f64, p: f64) -> Result<f64> {
        check_power(p)?;
        if hi <= lo {
            return Ok(0.0);
        }
        let value = match *self {
            Analytic1D::Dirac { c } => {
                if lo < c && c <= hi {
                    (c - x).abs().powf(p)
                } else {
                    0.0
                }
            }
            Analytic1D::Uniform { a, b } => {
                let l = lo.max(a);
                let u = hi.min(b);
                if u <= l {
                    0.0
                } else {
                    let g = |t: f64| (t - x).signum() * (t - x).abs().powf(p + 1.0) / (p + 1.0);
                    (g(u) - g(l)) / (b - a)
                }
            }
            Analytic1D::Normal { m, s } => {
                let zl = self.score(lo);
                let zu = self.score(hi);
                let delta = (x - m) / s;
                if p == 1.0 {
                    let zx = delta.clamp(zl, zu);
                    let left = -normal_shifted_moments(zl, zx, delta, 1)[1];
                    let right = normal_shifted_moments(zx, zu, delta, 1)[1];
                    s * (left + right)
                } else {
                    let k = p as usize;
                    s.powi(k as i32) * normal_shifted_moments(zl, zu, delta, k)[k]
                }
            }
            Analytic1D::LogNormal { .. } => {
                if p == 1.0 {
                    let xm = x.clamp(lo, hi);
                    let left = x * self.partial_moment(0, lo, xm) - self.partial_moment(1, lo, xm);
                    let right = self.partial_moment(1, xm, hi) - x * self.partial_moment(0, xm, hi);
                    left + right
                } else if p == 2.0 {
                    let m0 = self.partial_moment(0, lo, hi);
                    let m1 = self.partial_moment(1, lo, hi);
                    let m2 = self.partial_moment(2, lo, hi);
                    (m2 - 2.0 * x * m1 + x * x * m0).max(0.0)
                } else {
                    self.lognormal_cell_quadrature(lo, hi, x, p)
                }
            }
        };
        Ok(value)
    }

    fn lognormal_cell_quadrature(&self, lo: f64, hi: f64, x: f64, p: f64) -> f64 {
        let Analytic1D::LogNormal { m, s } = *self else {
            unreachable!()
        };
        let zl = self.score(lo).max(-Z_CUTOFF);
        // e^{p s z} φ(z) peaks at z = p s
        let zu = self.score(hi).min(Z_CUTOFF + p * s);
        if zu <= zl {
            return 0.0;
        }
        let mut breaks = vec![zl];
        if x > 0.0 {
            let zx = (x.ln() - m) / s;
            if zx > zl && zx < zu {
                breaks.push(zx);
            }
        }
        let peak = p * s;
        if peak > zl && peak < zu && !breaks.contains(&peak) {
            breaks.push(peak);
        }
        breaks.push(zu);
        breaks.sort_by(f64::total_cmp);
        quadrature::integrate_pieces(
            |z| ((m + s * z).exp() - x).abs().powf(p) * normal_pdf(z),
            &breaks,
            Tolerance::new(1e-300, 1e-13),
        )
        .value
    }

    /// `E|X - center|^p` for any real `p >= 1`.
    pub fn moment(&self, p: f64, center: f64) -> Result<f64> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!("moment order must be >= 1, got {p}")));
        }
        let value = match *self {
            Analytic1D::Dirac { c } => (c - center).abs().powf(p),
            Analytic1D::LogNormal { m, s } if center == 0.0 => (p * m + 0.5 * p * p * s * s).exp(),
            Analytic1D::Uniform { .. } => self.uniform_abs_moment(p, center),
            _ if check_power(p).is_ok() => {
                self.cell_integral(f64::NEG_INFINITY, f64::INFINITY, center, p)?
            }
            Analytic1D::Normal { m, s } => {
                let delta = (center - m) / s;
                let f = |z: f64| (s * (z - delta)).abs().powf(p) * normal_pdf(z);
                let lo = -Z_CUTOFF - delta.abs();
                let hi = Z_CUTOFF + delta.abs();
                quadrature::integrate_pieces(f, &[lo, delta, hi], Tolerance::new(1e-300, 1e-13)).value
            }
            Analytic1D::LogNormal { m, s } => {
                let f = |z: f64| ((m + s * z).exp() - center).abs().powf(p) * normal_pdf(z);
                let mut breaks = vec![-Z_CUTOFF, Z_CUTOFF + p * s];
                if center > 0.0 {
                    breaks.insert(1, ((center.ln() - m) / s).clamp(-Z_CUTOFF, Z_CUTOFF + p * s));
                }
                quadrature::integrate_pieces(f, &breaks, Tolerance::new(1e-300, 1e-13)).value
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::MomentDivergence)
        }
    }

    fn uniform_abs_moment(&self, p: f64, center: f64) -> f64 {
        let Analytic1D::Uniform { a, b } = *self else {
            unreachable!()
        };
        let g = |t: f64| (t - center).signum() * (t - center).abs().powf(p + 1.0) / (p + 1.0);
        (g(b) - g(a)) / (b - a)
    }

    /// `E(X - k)_+`.
    pub fn call_price(&self, k: f64) -> f64 {
        match *self {
            Analytic1D::Dirac { c } => (c - k).max(0.0),
            Analytic1D::Uniform { a, b } => {
                if k <= a {
                    0.5 * (a + b) - k
                } else if k >= b {
                    0.0
                } else {
                    (b - k) * (b - k) / (2.0 * (b - a))
                }
            }
            Analytic1D::Normal { m, s } => {
                let d = (k - m) / s;
                (s * (normal_pdf(d) - d * normal_sf(d))).max(0.0)
            }
            Analytic1D::LogNormal { m, s } => {
                if k <= 0.0 {
                    self.mean() - k
                } else {
                    let z = (k.ln() - m) / s;
                    let v = (m + 0.5 * s * s).exp() * normal_sf(z - s) - k * normal_sf(z);
                    v.max(0.0)
                }
            }
        }
    }

    /// Truncation range used by quadrature and lattice defaults: the whole
    /// support when bounded, otherwise the `[1e-6, 1 - 1e-6]` quantile range.
    pub fn effective_support(&self) -> (f64, f64) {
        match *self {
            Analytic1D::Dirac { c } => (c, c),
            Analytic1D::Uniform { a, b } => (a, b),
            _ => (self.quantile(1e-6), self.quantile(1.0 - 1e-6)),
        }
    }
}

/// `K_j = ∫_{zl}^{zu} (z - delta)^j φ(z) dz` for `j = 0..=k`, by the
/// integration-by-parts recursion `K_{j+1} = -delta K_j + j K_{j-1} - [(z-delta)^j φ]`.
fn normal_shifted_moments(zl: f64, zu: f64, delta: f64, k: usize) -> Vec<f64> {
    let boundary = |z: f64, j: usize| -> f64 {
        if z.is_infinite() {
            0.0
        } else {
            (z - delta).powi(j as i32) * normal_pdf(z)
        }
    };
    let mut out = Vec::with_capacity(k + 1);
    out.push(normal_mass(zl, zu));
    for j in 0..k {
        let prev = if j == 0 { 0.0 } else { j as f64 * out[j - 1] };
        let next = -delta * out[j] + prev - (boundary(zu, j) - boundary(zl, j));
        out.push(next);
    }
    out
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidMeasure("parameters must be finite".into()))
    }
}

/// Powers with an analytic evaluation path: 1 and even integers.
pub(crate) fn check_power(p: f64) -> Result<()> {
    if p == 1.0 || (p >= 2.0 && p.fract() == 0.0 && (p as u64) % 2 == 0 && p <= 64.0) {
        Ok(())
    } else {
        Err(Error::OddPower(p))
    }
}

/// Deterministic generator `(seed, index) -> point`.
#[derive(Clone)]
pub enum Sampler {
    /// Independent coordinates with the given marginals.
    Product(Vec<Analytic1D>),
    Custom {
        dim: usize,
        draw: Arc<dyn Fn(Seed, u64) -> Vec<f64> + Send + Sync>,
    },
}

impl fmt::Debug for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sampler::Product(m) => f.debug_tuple("Product").field(m).finish(),
            Sampler::Custom { dim, .. } => write!(f, "Custom {{ dim: {dim} }}"),
        }
    }
}

/// Measure known only through a reproducible sampler.
#[derive(Debug, Clone)]
pub struct SampledMeasure {
    sampler: Sampler,
    dim: usize,
}

impl SampledMeasure {
    pub fn product(marginals: Vec<Analytic1D>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::InvalidMeasure("product needs at least one marginal".into()));
        }
        let dim = marginals.len();
        Ok(SampledMeasure {
            sampler: Sampler::Product(marginals),
            dim,
        })
    }

    /// Standard Gaussian on R^d.
    pub fn standard_gaussian(dim: usize) -> Result<Self> {
        SampledMeasure::product(vec![Analytic1D::Normal { m: 0.0, s: 1.0 }; dim])
    }

    pub fn custom<F>(dim: usize, draw: F) -> Result<Self>
    where
        F: Fn(Seed, u64) -> Vec<f64> + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(Error::InvalidMeasure("dimension must be at least 1".into()));
        }
        Ok(SampledMeasure {
            sampler: Sampler::Custom {
                dim,
                draw: Arc::new(draw),
            },
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sampler(&self) -> &Sampler {
        &self.sampler
    }

    pub fn sample_at(&self, seed: Seed, index: u64) -> Result<Point> {
        match &self.sampler {
            Sampler::Product(marginals) => {
                let coords = marginals
                    .iter()
                    .enumerate()
                    .map(|(j, m)| m.sample_at(seed.derive(j as u64 + 1), index))
                    .collect();
                Ok(Point::from_vec_unchecked(coords))
            }
            Sampler::Custom { dim, draw } => {
                let v = draw(seed, index);
                if v.len() != *dim {
                    return Err(Error::DimensionMismatch {
                        expected: *dim,
                        got: v.len(),
                    });
                }
                Point::new(v)
            }
        }
    }
}

/// A probability measure in one of the supported representations.
#[derive(Debug, Clone)]
pub enum Measure {
    Discrete(DiscreteMeasure),
    Analytic(Analytic1D),
    Sampled(SampledMeasure),
}

impl From<DiscreteMeasure> for Measure {
    fn from(m: DiscreteMeasure) -> Self {
        Measure::Discrete(m)
    }
}

impl From<Analytic1D> for Measure {
    fn from(m: Analytic1D) -> Self {
        Measure::Analytic(m)
    }
}

impl From<SampledMeasure> for Measure {
    fn from(m: SampledMeasure) -> Self {
        Measure::Sampled(m)
    }
}

impl Measure {
    pub fn dim(&self) -> usize {
        match self {
            Measure::Discrete(d) => d.dim(),
            Measure::Analytic(_) => 1,
            Measure::Sampled(s) => s.dim(),
        }
    }

    fn repr(&self) -> String {
        match self {
            Measure::Discrete(_) => "a discrete measure".into(),
            Measure::Analytic(a) => format!("the analytic {} family", a.name()),
            Measure::Sampled(_) => "a sampler-backed measure".into(),
        }
    }

    fn require_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                got,
            })
        } else {
            Ok(())
        }
    }

    /// `∫ |ξ - center|^p μ(dξ)` with the Euclidean norm. Sampler-backed
    /// measures must go through [`Measure::moment_mc`].
    pub fn moment(&self, p: f64, center: &Point) -> Result<f64> {
        self.require_dim(center.dim())?;
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!("moment order must be >= 1, got {p}")));
        }
        let value = match self {
            Measure::Analytic(a) => a.moment(p, center[0])?,
            Measure::Discrete(d) => d
                .atoms()
                .iter()
                .zip(d.weights())
                .map(|(a, w)| w * euclidean(a, center).powf(p))
                .sum(),
            Measure::Sampled(_) => {
                return Err(Error::Unsupported {
                    op: "moment",
                    repr: self.repr(),
                    hint: "use moment_mc with an explicit sample count and seed",
                })
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::MomentDivergence)
        }
    }

    /// Monte Carlo estimate of the `p`-th moment about `center`.
    pub fn moment_mc(&self, p: f64, center: &Point, samples: usize, seed: Seed) -> Result<McEstimate> {
        self.require_dim(center.dim())?;
        if samples < 2 {
            return Err(Error::InvalidArgument("at least 2 samples are required".into()));
        }
        let draws = self.sample(samples, seed)?;
        let values: Vec<f64> = draws.iter().map(|x| euclidean(x, center).powf(p)).collect();
        let est = McEstimate::from_values(&values, seed, 1.0);
        if est.value.is_finite() && est.std_error.is_finite() {
            Ok(est)
        } else {
            Err(Error::MomentDivergence)
        }
    }

    /// `μ((-∞, t])` for one-dimensional analytic or discrete measures.
    pub fn cdf_1d(&self, t: f64) -> Result<f64> {
        match self {
            Measure::Analytic(a) => Ok(a.cdf(t)),
            Measure::Discrete(d) if d.dim() == 1 => Ok(d
                .scalar_atoms()
                .filter(|(x, _)| *x <= t)
                .map(|(_, w)| w)
                .sum::<f64>()
                .min(1.0)),
            Measure::Discrete(d) => Err(Error::DimensionMismatch {
                expected: 1,
                got: d.dim(),
            }),
            Measure::Sampled(_) => Err(Error::Unsupported {
                op: "cdf_1d",
                repr: self.repr(),
                hint: "use empirical_cdf with an explicit sample count and seed",
            }),
        }
    }

    /// Empirical distribution function of `samples` draws at `t`.
    pub fn empirical_cdf(&self, t: f64, samples: usize, seed: Seed) -> Result<f64> {
        self.require_dim(1)?;
        if samples == 0 {
            return Err(Error::InvalidArgument("sample count must be positive".into()));
        }
        let draws = self.sample(samples, seed)?;
        Ok(draws.iter().filter(|x| x[0] <= t).count() as f64 / samples as f64)
    }

    /// `E(X - k)_+` for one-dimensional analytic or discrete measures.
    pub fn call_price(&self, k: f64) -> Result<f64> {
        match self {
            Measure::Analytic(a) => Ok(a.call_price(k)),
            Measure::Discrete(d) if d.dim() == 1 => {
                Ok(d.scalar_atoms().map(|(x, w)| w * (x - k).max(0.0)).sum())
            }
            Measure::Discrete(d) => Err(Error::DimensionMismatch {
                expected: 1,
                got: d.dim(),
            }),
            Measure::Sampled(_) => Err(Error::Unsupported {
                op: "call_price",
                repr: self.repr(),
                hint: "convert to an empirical discrete measure first",
            }),
        }
    }

    /// `∫_{(lo, hi]} |ξ - x|^p μ(dξ)` for one-dimensional measures.
    pub fn cell_integral_1d(&self, lo: f64, hi: f64, x: f64, p: f64) -> Result<f64> {
        match self {
            Measure::Analytic(a) => a.cell_integral(lo, hi, x, p),
            Measure::Discrete(d) if d.dim() == 1 => Ok(d
                .scalar_atoms()
                .filter(|(a, _)| lo < *a && *a <= hi)
                .map(|(a, w)| w * (a - x).abs().powf(p))
                .sum()),
            Measure::Discrete(d) => Err(Error::DimensionMismatch {
                expected: 1,
                got: d.dim(),
            }),
            Measure::Sampled(_) => Err(Error::Unsupported {
                op: "cell_integral_1d",
                repr: self.repr(),
                hint: "use a Monte Carlo evaluation",
            }),
        }
    }

    /// Split of the two-point quadratic error at the midpoint `(a + b)/2`:
    /// `(∫_{(-∞, mid]} (ξ-a)^2 dμ, ∫_{(mid, ∞)} (ξ-b)^2 dμ)`.
    pub fn partial_second_moment_1d(&self, a: f64, b: f64) -> Result<(f64, f64)> {
        if a > b {
            return Err(Error::InvalidArgument(format!("need a <= b, got a = {a}, b = {b}")));
        }
        let mid = 0.5 * (a + b);
        Ok((
            self.cell_integral_1d(f64::NEG_INFINITY, mid, a, 2.0)?,
            self.cell_integral_1d(mid, f64::INFINITY, b, 2.0)?,
        ))
    }

    /// Draw `index` under `seed`.
    pub fn sample_at(&self, seed: Seed, index: u64) -> Result<Point> {
        match self {
            Measure::Analytic(a) => Ok(Point::from_vec_unchecked(vec![a.sample_at(seed, index)])),
            Measure::Discrete(d) => {
                let u: f64 = seed.rng_for(index).random();
                Ok(d.pick(u).clone())
            }
            Measure::Sampled(s) => s.sample_at(seed, index),
        }
    }

    /// Draws `0..n` under `seed`, in index order.
    pub fn sample(&self, n: usize, seed: Seed) -> Result<Vec<Point>> {
        if n == 0 {
            return Err(Error::InvalidArgument("sample count must be positive".into()));
        }
        (0..n as u64)
            .into_par_iter()
            .map(|i| self.sample_at(seed, i))
            .collect()
    }

    /// Bounding box of the support; unbounded analytic families are cut at
    /// their `1e-6` tail quantiles. Sampled measures need explicit boxes.
    pub fn support_box(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        match self {
            Measure::Analytic(a) => {
                let (lo, hi) = a.effective_support();
                Ok((vec![lo], vec![hi]))
            }
            Measure::Discrete(d) => {
                let dim = d.dim();
                let mut lo = vec![f64::INFINITY; dim];
                let mut hi = vec![f64::NEG_INFINITY; dim];
                for a in d.atoms() {
                    for j in 0..dim {
                        lo[j] = lo[j].min(a[j]);
                        hi[j] = hi[j].max(a[j]);
                    }
                }
                Ok((lo, hi))
            }
            Measure::Sampled(_) => Err(Error::Unsupported {
                op: "support_box",
                repr: self.repr(),
                hint: "pass an explicit search box",
            }),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Measure> {
        let spec: MeasureSpec = serde_json::from_str(s)?;
        spec.build()
    }

    pub fn to_spec(&self) -> Result<MeasureSpec> {
        MeasureSpec::describe(self)
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// JSON description of a measure:
/// `{"kind": "dirac"|"uniform"|"normal"|"lognormal"|"discrete", "params": {...}, "atoms": [[...]], "weights": [...]}`.
///
/// Parameter names: `dirac {c}`, `uniform {a, b}`, `normal {m, s}`,
/// `lognormal {m, s}` (law of `exp(s Z + m)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl MeasureSpec {
    fn param(&self, name: &str) -> Result<f64> {
        self.params
            .get(name)
            .copied()
            .ok_or_else(|| Error::InvalidMeasure(format!("{} measure needs param `{name}`", self.kind)))
    }

    pub fn build(&self) -> Result<Measure> {
        let m = match self.kind.as_str() {
            "dirac" => Analytic1D::dirac(self.param("c")?)?.into(),
            "uniform" => Analytic1D::uniform(self.param("a")?, self.param("b")?)?.into(),
            "normal" => Analytic1D::normal(self.param("m")?, self.param("s")?)?.into(),
            "lognormal" => Analytic1D::lognormal(self.param("m")?, self.param("s")?)?.into(),
            "discrete" => {
                let atoms = self
                    .atoms
                    .as_ref()
                    .ok_or_else(|| Error::InvalidMeasure("discrete measure needs `atoms`".into()))?;
                let atoms = atoms.iter().cloned().map(Point::new).collect::<Result<Vec<_>>>()?;
                match &self.weights {
                    Some(w) => DiscreteMeasure::new(atoms, w.clone())?.into(),
                    None => DiscreteMeasure::uniform(atoms)?.into(),
                }
            }
            other => return Err(Error::InvalidMeasure(format!("unknown kind `{other}`"))),
        };
        Ok(m)
    }

    pub fn describe(m: &Measure) -> Result<MeasureSpec> {
        let mut params = BTreeMap::new();
        let (kind, atoms, weights) = match m {
            Measure::Analytic(a) => {
                match *a {
                    Analytic1D::Dirac { c } => {
                        params.insert("c".to_string(), c);
                    }
                    Analytic1D::Uniform { a, b } => {
                        params.insert("a".to_string(), a);
                        params.insert("b".to_string(), b);
                    }
                    Analytic1D::Normal { m, s } | Analytic1D::LogNormal { m, s } => {
                        params.insert("m".to_string(), m);
                        params.insert("s".to_string(), s);
                    }
                }
                (a.name(), None, None)
            }
            Measure::Discrete(d) => (
                "discrete",
                Some(d.atoms().iter().map(|p| p.coords().to_vec()).collect()),
                Some(d.weights().to_vec()),
            ),
            Measure::Sampled(_) => {
                return Err(Error::Unsupported {
                    op: "describe",
                    repr: "a sampler-backed measure".into(),
                    hint: "samplers have no file representation",
                })
            }
        };
        Ok(MeasureSpec {
            kind: kind.to_string(),
            params,
            atoms,
            weights,
        })
    }
}
