//! Wasserstein distances and the quantization distance
//! `Q_{N,p}(μ, ν) = sup_x |e_{N,p}(μ, x) - e_{N,p}(ν, x)|`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::min_cost_assignment;
use crate::characterization::EFunctionHandle;
use crate::error::{Error, Result};
use crate::geometry::{Grid, NormSpec};
use crate::measures::{Analytic1D, DiscreteMeasure, Measure, Point, Seed, Z_CUTOFF};
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::quadrature::{self, Tolerance};
use crate::special::normal_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanKind {
    Quantile1d,
    Assignment,
}

/// Value of an optimal transport problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportPlanValue {
    /// `W_p`, i.e. the `1/p`-th power of the optimal transport cost.
    pub cost: f64,
    pub plan_kind: PlanKind,
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("p must be finite and >= 1, got {p}")))
    }
}

/// Quantile function of a one-dimensional measure, evaluated at standard
/// normal scores.
enum Quantile<'a> {
    Analytic(&'a Analytic1D),
    /// sorted `(atom, weight)` pairs
    Discrete(Vec<(f64, f64)>),
}

impl Quantile<'_> {
    fn of(mu: &Measure) -> Result<Quantile<'_>> {
        match mu {
            Measure::Analytic(a) => Ok(Quantile::Analytic(a)),
            Measure::Discrete(d) if d.dim() == 1 => Ok(Quantile::Discrete(d.sorted_scalars())),
            Measure::Discrete(d) => Err(Error::DimensionMismatch {
                expected: 1,
                got: d.dim(),
            }),
            Measure::Sampled(_) => Err(Error::Unsupported {
                op: "wasserstein_1d",
                repr: "a sampler-backed measure".into(),
                hint: "convert it with metrics::empirical first",
            }),
        }
    }

    /// Interior jump levels of the distribution function.
    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Quantile::Analytic(_) => Vec::new(),
            Quantile::Discrete(v) => {
                let mut acc = 0.0;
                let mut out = Vec::new();
                for (_, w) in &v[..v.len() - 1] {
                    acc += w;
                    out.push(acc);
                }
                out
            }
        }
    }

    /// Quantile at level `q` in the open piece `(q_lo, q_hi)` with score `z`.
    fn at(&self, z: f64, q_mid: f64) -> f64 {
        match self {
            Quantile::Analytic(a) => a.quantile_at_score(z),
            Quantile::Discrete(v) => {
                let mut acc = 0.0;
                for (x, w) in v {
                    acc += w;
                    if q_mid < acc {
                        return *x;
                    }
                }
                v.last().expect("nonempty").0
            }
        }
    }

    fn growth(&self) -> f64 {
        match self {
            Quantile::Analytic(Analytic1D::LogNormal { s, .. }) => *s,
            _ => 0.0,
        }
    }
}

fn discrete_exact(a: &[(f64, f64)], b: &[(f64, f64)], p: f64) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a[0].1, b[0].1);
    let mut total = 0.0;
    while i < a.len() && j < b.len() {
        let m = ra.min(rb);
        total += m * (a[i].0 - b[j].0).abs().powf(p);
        ra -= m;
        rb -= m;
        if ra <= 1e-15 {
            i += 1;
            if i < a.len() {
                ra = a[i].1;
            }
        }
        if rb <= 1e-15 {
            j += 1;
            if j < b.len() {
                rb = b[j].1;
            }
        }
    }
    total
}

/// `W_p(μ, ν) = (∫_0^1 |F_μ^{-1}(q) - F_ν^{-1}(q)|^p dq)^{1/p}` in one dimension.
///
/// Two discrete measures are merged exactly along their cumulative weights;
/// otherwise the integral is taken over standard normal scores `q = Φ(z)`
/// piecewise between jump levels.
pub fn wasserstein_1d(mu: &Measure, nu: &Measure, p: f64) -> Result<TransportPlanValue> {
    check_p(p)?;
    let qa = Quantile::of(mu)?;
    let qb = Quantile::of(nu)?;
    let cost_p = match (&qa, &qb) {
        (Quantile::Discrete(a), Quantile::Discrete(b)) => discrete_exact(a, b, p),
        _ => {
            let mut levels = qa.breakpoints();
            levels.extend(qb.breakpoints());
            levels.retain(|&q| q > 0.0 && q < 1.0);
            levels.sort_by(f64::total_cmp);
            levels.dedup();
            let z_hi = Z_CUTOFF + p * qa.growth().max(qb.growth());
            let mut qs = vec![0.0];
            qs.extend(levels);
            qs.push(1.0);
            let mut total = 0.0;
            for w in qs.windows(2) {
                let (q0, q1) = (w[0], w[1]);
                let z0 = normal_quantile(q0).max(-Z_CUTOFF);
                let z1 = normal_quantile(q1).min(z_hi);
                if z1 <= z0 {
                    continue;
                }
                let q_mid = 0.5 * (q0 + q1);
                let mut breaks = vec![z0];
                if z0 < 0.0 && z1 > 0.0 {
                    breaks.push(0.0);
                }
                breaks.push(z1);
                total += quadrature::integrate_pieces(
                    |z| (qa.at(z, q_mid) - qb.at(z, q_mid)).abs().powf(p) * crate::special::normal_pdf(z),
                    &breaks,
                    Tolerance::new(1e-300, 1e-13),
                )
                .value;
            }
            total
        }
    };
    Ok(TransportPlanValue {
        cost: cost_p.powf(1.0 / p),
        plan_kind: PlanKind::Quantile1d,
    })
}

/// Largest problem accepted by [`wasserstein_assignment`].
pub const MAX_ASSIGNMENT: usize = 2000;

/// `W_p` between the uniform empirical measures on `xs` and `ys`:
/// `((1/n) min_σ Σ |x_i - y_σ(i)|^p)^{1/p}`, solved exactly as an assignment problem.
pub fn wasserstein_assignment(xs: &[Point], ys: &[Point], p: f64, norm: NormSpec) -> Result<TransportPlanValue> {
    check_p(p)?;
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument(format!("length mismatch: {} vs {}", xs.len(), ys.len())));
    }
    let n = xs.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty point sets".into()));
    }
    if n > MAX_ASSIGNMENT {
        return Err(Error::InvalidArgument(format!("n = {n} exceeds the assignment limit {MAX_ASSIGNMENT}")));
    }
    let dim = xs[0].dim();
    if let Some(p) = xs.iter().chain(ys).find(|p| p.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: p.dim(),
        });
    }
    let cost: Vec<f64> = xs
        .iter()
        .flat_map(|x| ys.iter().map(move |y| norm.distance(x, y).powf(p)))
        .collect();
    let (_, total) = min_cost_assignment(&cost, n);
    Ok(TransportPlanValue {
        cost: (total.max(0.0) / n as f64).powf(1.0 / p),
        plan_kind: PlanKind::Assignment,
    })
}

/// Uniform empirical measure of `n` draws.
pub fn empirical(mu: &Measure, n: usize, seed: Seed) -> Result<DiscreteMeasure> {
    DiscreteMeasure::uniform(mu.sample(n, seed)?)
}

/// Search settings for [`qdist`].
#[derive(Debug, Clone)]
pub struct QDistOptions {
    /// Per-coordinate box `[lo, hi]` in R^d; defaults to the joint support box
    /// inflated by a factor 2 about its center.
    pub search_box: Option<(Vec<f64>, Vec<f64>)>,
    /// Number of top lattice points that are polished.
    pub restarts: usize,
    pub seed: Seed,
    /// Upper bound on the number of lattice evaluations.
    pub lattice_budget: usize,
    /// Evaluation budget of each local polish.
    pub polish_budget: usize,
    /// Common-random-number pools for sampler-backed measures.
    pub mc: Option<(usize, Seed)>,
}

impl Default for QDistOptions {
    fn default() -> Self {
        QDistOptions {
            search_box: None,
            restarts: 4,
            seed: Seed(0),
            lattice_budget: 4096,
            polish_budget: 1000,
            mc: None,
        }
    }
}

/// Certified lower bound on `Q_{N,p}(μ, ν)` over a box.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QDistReport {
    /// `|e_{N,p}(μ, argmax_grid) - e_{N,p}(ν, argmax_grid)|`.
    pub lower_bound: f64,
    pub argmax_grid: Grid,
    pub evaluations: usize,
    pub search_box: (Point, Point),
    pub converged_restarts: usize,
    /// Lattice spacing per coordinate of R^d.
    pub lattice_pitch: Vec<f64>,
    /// The box supremum exceeds the lattice maximum by at most this
    /// (`|e_μ - e_ν|` is 2-Lipschitz in `max_i |x_i - y_i|`).
    pub lattice_gap_bound: f64,
}

/// Result of an exhaustive lattice scan.
pub(crate) struct LatticeScan {
    /// best first, ties broken by lexicographic order
    pub top: Vec<(f64, Vec<f64>)>,
    pub evaluations: usize,
    pub pitch: Vec<f64>,
}

/// Evaluates `f` on the lattice with `per_axis[j]` points along coordinate `j`
/// of the box `[lo, hi]` and keeps the `keep` best points.
pub(crate) fn lattice_scan<F>(lo: &[f64], hi: &[f64], per_axis: &[usize], keep: usize, f: F) -> Result<LatticeScan>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let dims = lo.len();
    let total: usize = per_axis.iter().product();
    let pitch: Vec<f64> = (0..dims)
        .map(|j| if per_axis[j] > 1 { (hi[j] - lo[j]) / (per_axis[j] - 1) as f64 } else { 0.0 })
        .collect();
    let coords = |mut k: usize| -> Vec<f64> {
        let mut x = vec![0.0; dims];
        for j in (0..dims).rev() {
            let i = k % per_axis[j];
            k /= per_axis[j];
            x[j] = if per_axis[j] > 1 {
                lo[j] + pitch[j] * i as f64
            } else {
                0.5 * (lo[j] + hi[j])
            };
        }
        x
    };
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|k| f(&coords(k)))
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..total).collect();
    // descending value; lattice index order is lexicographic in coordinates
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let top = order.into_iter().take(keep.max(1)).map(|k| (values[k], coords(k))).collect();
    Ok(LatticeScan {
        top,
        evaluations: total,
        pitch,
    })
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            _ => {}
        }
    }
    false
}

/// Box maximum found by [`maximize_on_box`].
pub(crate) struct BoxMax {
    pub value: f64,
    pub x: Vec<f64>,
    pub evaluations: usize,
    pub converged_restarts: usize,
    pub pitch: Vec<f64>,
}

/// Lattice scan of `f` over `[lo, hi]`, then Nelder–Mead from the
/// `restarts` best lattice points with iterates projected onto the box.
/// Ties go to the lexicographically smallest point.
pub(crate) fn maximize_on_box<F>(
    f: F,
    lo: &[f64],
    hi: &[f64],
    per_axis: &[usize],
    restarts: usize,
    polish_budget: usize,
    seed: Seed,
) -> Result<BoxMax>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let scan = lattice_scan(lo, hi, per_axis, restarts, &f)?;
    let mut evaluations = scan.evaluations;
    let (mut best_val, mut best_x) = scan.top[0].clone();
    let clamp = |x: &[f64]| -> Vec<f64> { x.iter().enumerate().map(|(k, v)| v.clamp(lo[k], hi[k])).collect() };
    let mut converged_restarts = 0;
    if polish_budget > 0 {
        for (r, (_, start)) in scan.top.iter().enumerate().take(restarts) {
            let mut rng = seed.rng_for(r as u64);
            let steps: Vec<f64> = scan
                .pitch
                .iter()
                .map(|h| {
                    let sign = if rand::Rng::random::<bool>(&mut rng) { 1.0 } else { -1.0 };
                    sign * 0.5 * h.max(1e-6)
                })
                .collect();
            let m = nelder_mead(
                |x| f(&clamp(x)).map(|v| -v).unwrap_or(f64::INFINITY),
                start,
                &steps,
                NelderMeadOptions {
                    max_evaluations: polish_budget,
                    ..Default::default()
                },
            );
            evaluations += m.evaluations;
            if m.converged {
                converged_restarts += 1;
            }
            let x = clamp(&m.x);
            let v = f(&x)?;
            evaluations += 1;
            if v > best_val || (v == best_val && lex_less(&x, &best_x)) {
                best_val = v;
                best_x = x;
            }
        }
    }
    Ok(BoxMax {
        value: best_val,
        x: best_x,
        evaluations,
        converged_restarts,
        pitch: scan.pitch,
    })
}

/// Maximizes `g(x) = |e_{N,p}(μ, x) - e_{N,p}(ν, x)|` over `x ∈ box^N` by a
/// lattice scan followed by Nelder–Mead polish from the best lattice points.
pub fn qdist(mu: &Measure, nu: &Measure, n: usize, p: f64, norm: NormSpec, opts: &QDistOptions) -> Result<QDistReport> {
    check_p(p)?;
    if n == 0 {
        return Err(Error::InvalidArgument("N must be positive".into()));
    }
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            got: nu.dim(),
        });
    }
    let d = mu.dim();
    let (lo, hi) = match &opts.search_box {
        Some((lo, hi)) => {
            if lo.len() != d || hi.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: lo.len().min(hi.len()),
                });
            }
            if lo.iter().zip(hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
                return Err(Error::InvalidArgument("degenerate search box".into()));
            }
            (lo.clone(), hi.clone())
        }
        None => default_box(mu, nu)?,
    };
    let hmu = EFunctionHandle::for_measure(mu, opts.mc)?;
    let hnu = EFunctionHandle::for_measure(nu, opts.mc.map(|(k, s)| (k, s.derive(1))))?;
    let g = |flat: &[f64]| -> Result<f64> {
        let grid = Grid::from_flat(flat, d)?;
        Ok((hmu.error(&grid, p, norm)? - hnu.error(&grid, p, norm)?).abs())
    };

    let dims = n * d;
    let per_axis = ((opts.lattice_budget.max(2) as f64).powf(1.0 / dims as f64).floor() as usize).clamp(2, 4001);
    // odd counts put the box center on the lattice
    let per_axis = if per_axis % 2 == 0 { per_axis - 1 } else { per_axis }.max(2);
    let big_lo: Vec<f64> = (0..dims).map(|k| lo[k % d]).collect();
    let big_hi: Vec<f64> = (0..dims).map(|k| hi[k % d]).collect();
    let best = maximize_on_box(
        g,
        &big_lo,
        &big_hi,
        &vec![per_axis; dims],
        opts.restarts,
        opts.polish_budget,
        opts.seed,
    )?;
    let evaluations = best.evaluations;
    let converged_restarts = best.converged_restarts;
    let best_x = best.x;
    let scan_pitch = best.pitch;
    let argmax_grid = Grid::from_flat(&best_x, d)?;
    let lower_bound = (hmu.error(&argmax_grid, p, norm)? - hnu.error(&argmax_grid, p, norm)?).abs();
    let max_pitch = scan_pitch.iter().copied().fold(0.0, f64::max);
    let lattice_gap_bound = if norm.is_infinite() {
        max_pitch
    } else {
        max_pitch * (d as f64).powf(1.0 / norm.r())
    };
    Ok(QDistReport {
        lower_bound,
        argmax_grid,
        evaluations,
        search_box: (Point::new(lo)?, Point::new(hi)?),
        converged_restarts,
        lattice_pitch: scan_pitch[..d].to_vec(),
        lattice_gap_bound,
    })
}

/// Joint support box inflated by a factor 2 about its center; zero-width
/// axes get half-width 1.
pub fn default_box(mu: &Measure, nu: &Measure) -> Result<(Vec<f64>, Vec<f64>)> {
    let (l1, h1) = mu.support_box()?;
    let (l2, h2) = nu.support_box()?;
    let mut lo = Vec::with_capacity(l1.len());
    let mut hi = Vec::with_capacity(l1.len());
    for j in 0..l1.len() {
        let a = l1[j].min(l2[j]);
        let b = h1[j].max(h2[j]);
        let c = 0.5 * (a + b);
        let half = if b > a { b - a } else { 1.0 };
        lo.push(c - half);
        hi.push(c + half);
    }
    Ok((lo, hi))
}
