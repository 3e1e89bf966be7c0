//! The L^p quantization error function
//! `e_{N,p}(μ, x) = (∫ min_i |ξ - x_i|^p μ(dξ))^{1/p}`
//! evaluated exactly (discrete measures), through one-dimensional Voronoi
//! cells (analytic families), or by Monte Carlo; plus Lloyd's algorithm.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{nearest_unchecked, Grid, NormSpec};
use crate::measures::{Analytic1D, DiscreteMeasure, Measure, Point, Seed};

/// Monte Carlo estimate of a mean, optionally reported on a `1/p` root scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    /// `mean^{1/p}`.
    pub value: f64,
    /// Delta-method standard error of `value`: `power_std_error / (p value^{p-1})`.
    pub std_error: f64,
    /// Sample mean of the raw statistic (`e^p` for quantization errors).
    pub power_mean: f64,
    /// Standard error of `power_mean`.
    pub power_std_error: f64,
    pub samples: usize,
    pub seed: Seed,
}

impl McEstimate {
    pub(crate) fn from_values(values: &[f64], seed: Seed, p: f64) -> Self {
        let n = values.len();
        // Welford: exact zero variance for constant input
        let (mut mean, mut m2) = (0.0f64, 0.0f64);
        for (k, &v) in values.iter().enumerate() {
            let delta = v - mean;
            mean += delta / (k + 1) as f64;
            m2 += delta * (v - mean);
        }
        let var = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
        let power_std_error = (var / n as f64).sqrt();
        let value = mean.max(0.0).powf(1.0 / p);
        let std_error = if power_std_error == 0.0 {
            0.0
        } else if value > 0.0 {
            power_std_error / (p * value.powf(p - 1.0))
        } else {
            power_std_error.powf(1.0 / p)
        };
        McEstimate {
            value,
            std_error,
            power_mean: mean,
            power_std_error,
            samples: n,
            seed,
        }
    }
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("p must be finite and >= 1, got {p}")))
    }
}

fn check_dims(mu_dim: usize, grid: &Grid) -> Result<()> {
    if mu_dim != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu_dim,
            got: grid.dim(),
        });
    }
    Ok(())
}

/// `e^p_{N,p}` for a finitely supported measure, exact up to rounding.
pub fn qerr_pow_discrete(mu: &DiscreteMeasure, grid: &Grid, p: f64, norm: NormSpec) -> Result<f64> {
    check_p(p)?;
    check_dims(mu.dim(), grid)?;
    Ok(mu
        .atoms()
        .iter()
        .zip(mu.weights())
        .map(|(a, w)| {
            let (_, g) = nearest_unchecked(a, grid.points(), norm);
            w * norm.gauge_to_norm(g).powf(p)
        })
        .sum())
}

/// `e_{N,p}` for a finitely supported measure.
pub fn qerr_discrete(mu: &DiscreteMeasure, grid: &Grid, p: f64, norm: NormSpec) -> Result<f64> {
    Ok(qerr_pow_discrete(mu, grid, p, norm)?.powf(1.0 / p))
}

/// Sorted distinct scalars of a one-dimensional grid.
pub(crate) fn sorted_distinct(grid: &Grid) -> Vec<f64> {
    let mut xs = grid.scalars();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// `e^p_{N,p}` in one dimension as a sum over Voronoi cells `(m_{i-1}, m_i]`
/// delimited by midpoints of consecutive distinct sorted grid points.
///
/// Analytic families support `p = 1` and even `p`; other powers give
/// [`Error::OddPower`] (use [`qerr_mc`]). Discrete 1D measures accept any `p`.
pub fn qerr_pow_1d(mu: &Measure, grid: &Grid, p: f64) -> Result<f64> {
    check_p(p)?;
    check_dims(1, grid)?;
    if mu.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: mu.dim(),
        });
    }
    let xs = sorted_distinct(grid);
    let mut total = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let lo = if i == 0 {
            f64::NEG_INFINITY
        } else {
            0.5 * (xs[i - 1] + x)
        };
        let hi = if i + 1 == xs.len() {
            f64::INFINITY
        } else {
            0.5 * (x + xs[i + 1])
        };
        total += mu.cell_integral_1d(lo, hi, x, p)?;
    }
    Ok(total)
}

/// `e_{N,p}` for one-dimensional analytic or discrete measures.
pub fn qerr_analytic_1d(mu: &Measure, grid: &Grid, p: f64) -> Result<f64> {
    Ok(qerr_pow_1d(mu, grid, p)?.powf(1.0 / p))
}

/// Monte Carlo estimate of `e_{N,p}` from `samples` draws under `seed`.
pub fn qerr_mc(mu: &Measure, grid: &Grid, p: f64, norm: NormSpec, samples: usize, seed: Seed) -> Result<McEstimate> {
    check_p(p)?;
    check_dims(mu.dim(), grid)?;
    if samples < 2 {
        return Err(Error::InvalidArgument("at least 2 samples are required".into()));
    }
    let values: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let x = mu.sample_at(seed, i)?;
            let (_, g) = nearest_unchecked(&x, grid.points(), norm);
            Ok(norm.gauge_to_norm(g).powf(p))
        })
        .collect::<Result<_>>()?;
    Ok(McEstimate::from_values(&values, seed, p))
}

/// How a reported error value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactDiscrete,
    Analytic,
    MonteCarlo,
}

/// Dispatching evaluation result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QErrValue {
    pub value: f64,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

/// Evaluates `e_{N,p}(μ, grid)` by the most exact route available. Monte
/// Carlo is used only when `mc = Some((samples, seed))` is given and no
/// exact route applies (sampler-backed measures, odd `p > 1` on analytic
/// families), or when forced via `force_mc`.
pub fn qerr(
    mu: &Measure,
    grid: &Grid,
    p: f64,
    norm: NormSpec,
    mc: Option<(usize, Seed)>,
    force_mc: bool,
) -> Result<QErrValue> {
    let run_mc = |samples: usize, seed: Seed| -> Result<QErrValue> {
        let est = qerr_mc(mu, grid, p, norm, samples, seed)?;
        Ok(QErrValue {
            value: est.value,
            method: Method::MonteCarlo,
            std_error: Some(est.std_error),
        })
    };
    if force_mc {
        let (samples, seed) = mc.ok_or_else(|| Error::InvalidArgument("Monte Carlo requires samples and seed".into()))?;
        return run_mc(samples, seed);
    }
    match mu {
        Measure::Discrete(d) => Ok(QErrValue {
            value: qerr_discrete(d, grid, p, norm)?,
            method: Method::ExactDiscrete,
            std_error: None,
        }),
        Measure::Analytic(_) => match qerr_analytic_1d(mu, grid, p) {
            Ok(value) => Ok(QErrValue {
                value,
                method: Method::Analytic,
                std_error: None,
            }),
            Err(Error::OddPower(_)) if mc.is_some() => {
                let (samples, seed) = mc.expect("checked");
                run_mc(samples, seed)
            }
            Err(e) => Err(e),
        },
        Measure::Sampled(_) => match mc {
            Some((samples, seed)) => run_mc(samples, seed),
            None => Err(Error::Unsupported {
                op: "qerr",
                repr: "a sampler-backed measure".into(),
                hint: "pass a Monte Carlo sample count and seed",
            }),
        },
    }
}

/// Lloyd initialization.
#[derive(Debug, Clone)]
pub enum LloydInit {
    /// `N` pool points chosen by seeded reservoir sampling.
    Seeded(Seed),
    Grid(Grid),
}

#[derive(Debug, Clone)]
pub struct LloydOptions {
    pub iterations: usize,
    /// Pool size for non-discrete measures; drawn once under `pool_seed`.
    pub pool_size: usize,
    pub pool_seed: Seed,
    /// Early exit when the relative distortion improvement falls below this
    /// (`0` disables it; a fixed point always stops the iteration).
    pub rel_tol: f64,
}

impl Default for LloydOptions {
    fn default() -> Self {
        LloydOptions {
            iterations: 100,
            pool_size: 100_000,
            pool_seed: Seed(0),
            rel_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LloydResult {
    pub grid: Grid,
    /// Quadratic distortion `e^2_{N,2}` on the pool: initial grid first, then after each iteration.
    pub history: Vec<f64>,
    pub iterations: usize,
    /// Number of distinct grid points.
    pub effective_n: usize,
}

impl LloydResult {
    pub fn distortion(&self) -> f64 {
        *self.history.last().expect("history has the initial entry")
    }
}

/// Weighted point cloud on which Lloyd iterates.
struct Pool {
    points: Vec<Point>,
    weights: Vec<f64>,
    /// 1D only, after sorting: prefix sums of `w`, `w x`, `w x²` (length `len + 1`).
    prefix: Option<[Vec<f64>; 3]>,
}

const CHUNK: usize = 4096;

impl Pool {
    fn from_measure(mu: &Measure, opts: &LloydOptions) -> Result<Pool> {
        match mu {
            Measure::Discrete(d) => Ok(Pool {
                points: d.atoms().to_vec(),
                weights: d.weights().to_vec(),
                prefix: None,
            }),
            _ => {
                if opts.pool_size == 0 {
                    return Err(Error::InvalidArgument("pool size must be positive".into()));
                }
                let points = mu.sample(opts.pool_size, opts.pool_seed)?;
                let w = 1.0 / points.len() as f64;
                Ok(Pool {
                    weights: vec![w; points.len()],
                    points,
                    prefix: None,
                })
            }
        }
    }

    fn dim(&self) -> usize {
        self.points[0].dim()
    }

    fn sort_1d(&mut self) {
        let mut idx: Vec<usize> = (0..self.points.len()).collect();
        idx.sort_by(|&a, &b| self.points[a][0].total_cmp(&self.points[b][0]));
        self.points = idx.iter().map(|&i| self.points[i].clone()).collect();
        self.weights = idx.iter().map(|&i| self.weights[i]).collect();
        let mut prefix = [vec![0.0], vec![0.0], vec![0.0]];
        for (x, w) in self.points.iter().zip(&self.weights) {
            let x = x[0];
            for (k, term) in [*w, w * x, w * x * x].into_iter().enumerate() {
                let last = *prefix[k].last().expect("nonempty");
                prefix[k].push(last + term);
            }
        }
        self.prefix = Some(prefix);
    }

    /// Pool index ranges `[start, end)` of the cells `(m_{i-1}, m_i]` of sorted centers.
    fn ranges_1d(&self, centers: &[Point]) -> Vec<(usize, usize)> {
        let n = centers.len();
        let mut out = Vec::with_capacity(n);
        let mut start = 0usize;
        for i in 0..n {
            let end = if i + 1 == n {
                self.points.len()
            } else if centers[i + 1][0] == centers[i][0] {
                // duplicate: the later copy gets nothing
                start
            } else {
                let mid = 0.5 * (centers[i][0] + centers[i + 1][0]);
                start + self.points[start..].partition_point(|x| x[0] <= mid)
            };
            let end = end.max(start);
            out.push((start, end));
            start = end;
        }
        out
    }

    fn distortion(&self, centers: &[Point]) -> f64 {
        if let Some([w, s1, s2]) = &self.prefix {
            return self
                .ranges_1d(centers)
                .iter()
                .zip(centers)
                .map(|(&(a, b), c)| {
                    let c = c[0];
                    let cell = (s2[b] - s2[a]) - 2.0 * c * (s1[b] - s1[a]) + c * c * (w[b] - w[a]);
                    cell.max(0.0)
                })
                .sum();
        }
        let e = NormSpec::euclidean();
        chunked_sum(self.points.len(), |k| {
            let (_, g) = nearest_unchecked(&self.points[k], centers, e);
            self.weights[k] * g
        })
    }

    /// Pool index farthest from the grid (lowest index on ties).
    fn farthest(&self, centers: &[Point]) -> usize {
        let e = NormSpec::euclidean();
        let mut best = (0usize, f64::NEG_INFINITY);
        for (k, x) in self.points.iter().enumerate() {
            let (_, g) = nearest_unchecked(x, centers, e);
            if g > best.1 {
                best = (k, g);
            }
        }
        best.0
    }
}

/// Deterministic sum: fixed-size chunks summed in parallel, chunk totals
/// combined in index order. Independent of the thread count.
fn chunked_sum<F: Fn(usize) -> f64 + Sync>(n: usize, f: F) -> f64 {
    let parts: Vec<f64> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let end = ((c + 1) * CHUNK).min(n);
            pairwise((c * CHUNK..end).map(&f).collect::<Vec<_>>().as_slice())
        })
        .collect();
    pairwise(&parts)
}

fn pairwise(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        v.iter().sum()
    } else {
        let mid = v.len() / 2;
        pairwise(&v[..mid]) + pairwise(&v[mid..])
    }
}

fn reservoir(n_pool: usize, n: usize, seed: Seed) -> Vec<usize> {
    let mut rng = seed.rng_for(0);
    let mut chosen: Vec<usize> = (0..n.min(n_pool)).collect();
    for k in n..n_pool {
        let j = rng.random_range(0..=k);
        if j < n {
            chosen[j] = k;
        }
    }
    chosen.sort_unstable();
    chosen
}

/// Lloyd's algorithm for `p = 2` under the Euclidean norm: alternate Voronoi
/// assignment (lowest-index ties) and cell centroids. A codevector whose
/// cell is empty is moved onto the pool point farthest from the grid.
///
/// Analytic one-dimensional measures iterate on exact cell moments instead
/// of a pool, so the history holds exact distortions; seeded initial grids
/// are `N` draws from `mu`.
pub fn lloyd(mu: &Measure, n: usize, init: LloydInit, opts: &LloydOptions) -> Result<LloydResult> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be positive".into()));
    }
    if let Measure::Discrete(d) = mu {
        if n >= d.support_size() {
            let mut support: Vec<Point> = Vec::new();
            for (a, w) in d.atoms().iter().zip(d.weights()) {
                if *w > 0.0 && !support.contains(a) {
                    support.push(a.clone());
                }
            }
            let effective_n = support.len();
            return Ok(LloydResult {
                grid: Grid::new(support)?,
                history: vec![0.0],
                iterations: 0,
                effective_n,
            });
        }
    }
    if let Measure::Analytic(a) = mu {
        return lloyd_analytic(a, n, init, opts);
    }
    let mut pool = Pool::from_measure(mu, opts)?;
    let dim = pool.dim();
    if dim == 1 {
        pool.sort_1d();
    }
    let mut centers: Vec<Point> = match init {
        LloydInit::Seeded(seed) => reservoir(pool.points.len(), n, seed)
            .into_iter()
            .map(|k| pool.points[k].clone())
            .collect(),
        LloydInit::Grid(g) => {
            if g.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: g.dim(),
                });
            }
            g.points().to_vec()
        }
    };
    if dim == 1 {
        centers.sort_by(|a, b| a[0].total_cmp(&b[0]));
    }

    let mut history = vec![pool.distortion(&centers)];
    let mut iterations = 0;
    for _ in 0..opts.iterations {
        let before = centers.clone();
        let (sums, masses) = if dim == 1 {
            cell_sums_1d(&pool, &centers)
        } else {
            cell_sums(&pool, &centers)
        };
        for (i, c) in centers.iter_mut().enumerate() {
            if masses[i] > 0.0 {
                *c = Point::from_vec_unchecked(sums[i].iter().map(|s| s / masses[i]).collect());
            }
        }
        let empty: Vec<usize> = (0..centers.len()).filter(|&i| masses[i] == 0.0).collect();
        for i in empty {
            let k = pool.farthest(&centers);
            centers[i] = pool.points[k].clone();
        }
        if dim == 1 {
            centers.sort_by(|a, b| a[0].total_cmp(&b[0]));
        }
        iterations += 1;
        let d = pool.distortion(&centers);
        let prev = *history.last().expect("nonempty");
        history.push(d);
        if d == 0.0 || centers == before || (opts.rel_tol > 0.0 && (prev - d) <= opts.rel_tol * prev) {
            break;
        }
    }
    let grid = Grid::new(centers)?;
    let effective_n = grid.distinct_count();
    Ok(LloydResult {
        grid,
        history,
        iterations,
        effective_n,
    })
}

fn lloyd_analytic(a: &Analytic1D, n: usize, init: LloydInit, opts: &LloydOptions) -> Result<LloydResult> {
    let mu = Measure::Analytic(*a);
    if let Analytic1D::Dirac { c } = *a {
        let grid = Grid::from_scalars(&[c])?;
        return Ok(LloydResult {
            grid,
            history: vec![0.0],
            iterations: 0,
            effective_n: 1,
        });
    }
    let mut xs: Vec<f64> = match init {
        LloydInit::Seeded(seed) => (0..n as u64).map(|i| a.sample_at(seed, i)).collect(),
        LloydInit::Grid(g) => {
            if g.dim() != 1 {
                return Err(Error::DimensionMismatch {
                    expected: 1,
                    got: g.dim(),
                });
            }
            g.scalars()
        }
    };
    xs.sort_by(f64::total_cmp);
    let count = xs.len();
    let distortion = |xs: &[f64]| -> Result<f64> { qerr_pow_1d(&mu, &Grid::from_scalars(xs)?, 2.0) };
    let mut history = vec![distortion(&xs)?];
    let mut iterations = 0;
    for _ in 0..opts.iterations {
        let before = xs.clone();
        let mut moved = 0.0f64;
        let mut scale = 1.0f64;
        for i in 0..count {
            let lo = if i == 0 { f64::NEG_INFINITY } else { 0.5 * (before[i - 1] + before[i]) };
            let hi = if i + 1 == count { f64::INFINITY } else { 0.5 * (before[i] + before[i + 1]) };
            let mass = a.partial_moment(0, lo, hi);
            let next = if mass > 0.0 {
                (a.partial_moment(1, lo, hi) / mass).clamp(lo.min(hi), hi)
            } else {
                a.quantile((i as f64 + 0.5) / count as f64)
            };
            moved = moved.max((next - before[i]).abs());
            scale = scale.max(next.abs());
            xs[i] = next;
        }
        xs.sort_by(f64::total_cmp);
        iterations += 1;
        let d = distortion(&xs)?;
        let prev = *history.last().expect("nonempty");
        history.push(d);
        if moved <= 1e-14 * scale || (opts.rel_tol > 0.0 && (prev - d) <= opts.rel_tol * prev) {
            break;
        }
    }
    let grid = Grid::from_scalars(&xs)?;
    let effective_n = grid.distinct_count();
    Ok(LloydResult {
        grid,
        history,
        iterations,
        effective_n,
    })
}

/// Per-cell weighted coordinate sums and masses.
fn cell_sums(pool: &Pool, centers: &[Point]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let e = NormSpec::euclidean();
    let dim = pool.dim();
    let n = centers.len();
    let len = pool.points.len();
    let parts: Vec<(Vec<Vec<f64>>, Vec<f64>)> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut sums = vec![vec![0.0; dim]; n];
            let mut masses = vec![0.0; n];
            for k in c * CHUNK..((c + 1) * CHUNK).min(len) {
                let x = &pool.points[k];
                let w = pool.weights[k];
                let (i, _) = nearest_unchecked(x, centers, e);
                masses[i] += w;
                for (s, v) in sums[i].iter_mut().zip(x.iter()) {
                    *s += w * v;
                }
            }
            (sums, masses)
        })
        .collect();
    let mut sums = vec![vec![0.0; dim]; n];
    let mut masses = vec![0.0; n];
    for (s, m) in parts {
        for i in 0..n {
            masses[i] += m[i];
            for j in 0..dim {
                sums[i][j] += s[i][j];
            }
        }
    }
    (sums, masses)
}

/// One-dimensional cell sums on a sorted pool from prefix sums; sorted
/// centers. Cells are `(m_{i-1}, m_i]`, matching lowest-index tie-breaking.
fn cell_sums_1d(pool: &Pool, centers: &[Point]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let [w, s1, _] = pool.prefix.as_ref().expect("sorted 1D pool");
    let ranges = pool.ranges_1d(centers);
    let sums = ranges.iter().map(|&(a, b)| vec![s1[b] - s1[a]]).collect();
    let masses = ranges
        .iter()
        .map(|&(a, b)| if b > a { (w[b] - w[a]).max(f64::MIN_POSITIVE) } else { 0.0 })
        .collect();
    (sums, masses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Analytic1D;

    fn half_half() -> DiscreteMeasure {
        DiscreteMeasure::from_scalars(&[0.0, 1.0], &[0.5, 0.5]).unwrap()
    }

    #[test]
    fn discrete_examples() {
        let e = NormSpec::euclidean();
        let mu = half_half();
        assert_eq!(qerr_discrete(&mu, &Grid::from_scalars(&[0.0, 1.0]).unwrap(), 1.0, e).unwrap(), 0.0);
        assert_eq!(qerr_discrete(&mu, &Grid::from_scalars(&[0.0]).unwrap(), 1.0, e).unwrap(), 0.5);
        let four = DiscreteMeasure::from_scalars(&[0.0, 1.0, 2.0, 3.0], &[0.25; 4]).unwrap();
        let v = qerr_discrete(&four, &Grid::from_scalars(&[0.5, 2.5]).unwrap(), 2.0, e).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        let g2 = Grid::new(vec![Point::new(vec![0.0, 0.0]).unwrap()]).unwrap();
        assert!(matches!(qerr_discrete(&mu, &g2, 1.0, e), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn analytic_examples() {
        let dirac: Measure = Analytic1D::dirac(0.0).unwrap().into();
        let g = Grid::from_scalars(&[-0.7, 2.0, 0.4]).unwrap();
        for p in [1.0, 2.0, 4.0] {
            assert!((qerr_analytic_1d(&dirac, &g, p).unwrap() - 0.4).abs() < 1e-15);
        }
        let u: Measure = Analytic1D::uniform(0.0, 1.0).unwrap().into();
        let v = qerr_analytic_1d(&u, &Grid::from_scalars(&[0.25, 0.75]).unwrap(), 2.0).unwrap();
        assert!((v - (1.0f64 / 48.0).sqrt()).abs() < 1e-15);
        assert!((v - 0.144_337_6).abs() < 1e-7);
        for n in 1..=6u32 {
            let ln: Measure = Analytic1D::unit_second_moment_lognormal(n).into();
            let c = (-((n * n) as f64) / 8.0).exp();
            for a in [-3.0, 0.0, 0.5, 2.0] {
                let v = qerr_analytic_1d(&ln, &Grid::from_scalars(&[a, a]).unwrap(), 2.0).unwrap();
                let oracle = (1.0 - 2.0 * a * c + a * a).sqrt();
                assert!((v - oracle).abs() < 1e-13, "n={n} a={a}");
            }
        }
        assert!(matches!(
            qerr_analytic_1d(&u, &Grid::from_scalars(&[0.5]).unwrap(), 3.0),
            Err(Error::OddPower(_))
        ));
    }

    #[test]
    fn mc_examples() {
        let e = NormSpec::euclidean();
        let dirac: Measure = Analytic1D::dirac(0.3).unwrap().into();
        let g = Grid::from_scalars(&[1.0, -1.0]).unwrap();
        let est = qerr_mc(&dirac, &g, 2.0, e, 100, Seed(1)).unwrap();
        assert!((est.value - 0.7).abs() < 1e-15);
        assert_eq!(est.std_error, 0.0);

        let u: Measure = Analytic1D::uniform(0.0, 1.0).unwrap().into();
        let est = qerr_mc(&u, &Grid::from_scalars(&[0.25, 0.75]).unwrap(), 2.0, e, 1_000_000, Seed(2)).unwrap();
        assert!((est.value - (1.0f64 / 48.0).sqrt()).abs() < 4.0 * est.std_error, "{est:?}");

        let n: Measure = Analytic1D::normal(0.0, 1.0).unwrap().into();
        let est = qerr_mc(&n, &Grid::from_scalars(&[0.0]).unwrap(), 2.0, e, 200_000, Seed(3)).unwrap();
        assert!((est.value - 1.0).abs() < 4.0 * est.std_error, "{est:?}");
    }

    #[test]
    fn dispatcher_falls_back_only_when_asked() {
        let e = NormSpec::euclidean();
        let u: Measure = Analytic1D::uniform(0.0, 1.0).unwrap().into();
        let g = Grid::from_scalars(&[0.5]).unwrap();
        assert!(qerr(&u, &g, 3.0, e, None, false).is_err());
        let v = qerr(&u, &g, 3.0, e, Some((10_000, Seed(1))), false).unwrap();
        assert_eq!(v.method, Method::MonteCarlo);
        assert!(v.std_error.is_some());
        let v = qerr(&u, &g, 2.0, e, Some((10_000, Seed(1))), false).unwrap();
        assert_eq!(v.method, Method::Analytic);
    }

    #[test]
    fn duplication_and_permutation_are_exact() {
        let mus: Vec<Measure> = vec![
            Analytic1D::normal(0.2, 1.1).unwrap().into(),
            Analytic1D::lognormal(-0.5, 0.8).unwrap().into(),
            half_half().into(),
        ];
        for mu in &mus {
            for p in [1.0, 2.0, 4.0] {
                let two = qerr_analytic_1d(mu, &Grid::from_scalars(&[-0.3, 1.7]).unwrap(), p).unwrap();
                let three = qerr_analytic_1d(mu, &Grid::from_scalars(&[-0.3, -0.3, 1.7]).unwrap(), p).unwrap();
                let perm = qerr_analytic_1d(mu, &Grid::from_scalars(&[1.7, -0.3, -0.3]).unwrap(), p).unwrap();
                assert_eq!(two, three);
                assert_eq!(two, perm);
            }
        }
    }

    #[test]
    fn lloyd_on_two_atoms() {
        let mu: Measure = half_half().into();
        let r = lloyd(&mu, 2, LloydInit::Seeded(Seed(1)), &LloydOptions::default()).unwrap();
        assert_eq!(r.distortion(), 0.0);
        let mut xs = r.grid.scalars();
        xs.sort_by(f64::total_cmp);
        assert_eq!(xs, vec![0.0, 1.0]);
        let r = lloyd(&mu, 5, LloydInit::Seeded(Seed(1)), &LloydOptions::default()).unwrap();
        assert_eq!(r.effective_n, 2);
    }

    #[test]
    fn lloyd_normal_single_center_is_mean() {
        let mu: Measure = Analytic1D::normal(0.0, 1.0).unwrap().into();
        let opts = LloydOptions {
            pool_size: 200_000,
            pool_seed: Seed(7),
            ..Default::default()
        };
        let r = lloyd(&mu, 1, LloydInit::Seeded(Seed(2)), &opts).unwrap();
        assert!(r.grid.points()[0][0].abs() < 0.01);
    }

    #[test]
    fn lloyd_history_is_nonincreasing_in_2d() {
        let mu: Measure = crate::measures::SampledMeasure::standard_gaussian(2).unwrap().into();
        let opts = LloydOptions {
            iterations: 40,
            pool_size: 20_000,
            pool_seed: Seed(3),
            rel_tol: 0.0,
        };
        let r = lloyd(&mu, 6, LloydInit::Seeded(Seed(4)), &opts).unwrap();
        for w in r.history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", r.history);
        }
        // duplicated init: the empty cell is re-seeded
        let init = Grid::new(vec![Point::new(vec![0.0, 0.0]).unwrap(); 3]).unwrap();
        let r = lloyd(&mu, 3, LloydInit::Grid(init), &opts).unwrap();
        assert_eq!(r.effective_n, 3);
    }
}
