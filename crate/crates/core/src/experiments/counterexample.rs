//! The lognormal sequence `X_n = exp((n/2)Z - n²/4)`: `E X_n² = 1` for every
//! `n` while the quantization error functions converge uniformly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Check, ExperimentConfig};
use crate::error::{Error, Result};
use crate::geometry::{Grid, NormSpec};
use crate::measures::{Analytic1D, Measure, Point, Seed};
use crate::metrics::{maximize_on_box, qdist, QDistOptions};
use crate::optimize::golden_max;
use crate::quanterror::qerr_pow_1d;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CounterexampleParams {
    /// Grid size `N >= 2`.
    pub n_points: usize,
    pub n_max: u32,
    /// Lattice box `[-half_width, half_width]^N`.
    pub half_width: f64,
    pub pitch: f64,
    pub restarts: usize,
    pub polish_budget: usize,
    pub seed: Seed,
}

impl Default for CounterexampleParams {
    fn default() -> Self {
        CounterexampleParams {
            n_points: 2,
            n_max: 8,
            half_width: 10.0,
            pitch: 0.25,
            restarts: 4,
            polish_budget: 1000,
            seed: Seed(0),
        }
    }
}

impl CounterexampleParams {
    pub fn from_config(c: &ExperimentConfig) -> Result<Self> {
        let d = CounterexampleParams::default();
        Ok(CounterexampleParams {
            n_points: c.usize_or("N", d.n_points)?,
            n_max: c.usize_or("n_max", d.n_max as usize)? as u32,
            half_width: c.f64_or("half_width", d.half_width)?,
            pitch: c.f64_or("pitch", d.pitch)?,
            restarts: c.usize_or("restarts", d.restarts)?,
            polish_budget: c.usize_or("polish_budget", d.polish_budget)?,
            seed: c.seed,
        })
    }

    fn per_axis(&self) -> usize {
        (2.0 * self.half_width / self.pitch).round() as usize + 1
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CounterexampleRow {
    pub n: u32,
    /// `sup_a |e_{2,2}(μ_n, (a,a)) - √(1+a²)|` over the lattice.
    pub sup_discrepancy_diag: f64,
    /// `sup_x |e_{N,2}(μ_n, x) - √(min_i x_i² + 1)|`, lattice plus polish.
    pub sup_discrepancy_grid: f64,
    /// `sup_{K>0} K E(X_n - K)_+`.
    #[serde(rename = "supK_call")]
    pub sup_k_call: f64,
    /// `W_2²(μ_n, δ_0) = E X_n²`.
    pub w2_to_limit_sq: f64,
    /// Lower bound on `Q_{2,2}(μ_n, μ_{n-1})`.
    pub q22_lower_to_prev: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    pub params: CounterexampleParams,
    pub rows: Vec<CounterexampleRow>,
    /// Lattice-to-box gap for the grid supremum.
    pub lattice_gap_bound: f64,
    pub checks: Vec<Check>,
}

/// `√(min_i a_i² + 1)`, the uniform limit of `e_{N,2}(μ_n, a)`.
pub fn limit_error(a: &[f64]) -> f64 {
    (a.iter().map(|x| x * x).fold(f64::INFINITY, f64::min) + 1.0).sqrt()
}

/// `e_{2,2}(μ_n, (a, a)) = √(1 - 2a e^{-n²/8} + a²)`.
pub fn diagonal_error(n: u32, a: f64) -> f64 {
    let mean = (-((n * n) as f64) / 8.0).exp();
    (1.0 - 2.0 * a * mean + a * a).max(0.0).sqrt()
}

/// `sup_{K>0} K E(X - K)_+` by a scan over `ln K` and golden-section refinement.
pub fn sup_k_call(mu: &Analytic1D) -> f64 {
    let f = |t: f64| {
        let k = t.exp();
        k * mu.call_price(k)
    };
    let (lo, hi, step) = (-60.0, 60.0, 0.05);
    let count = ((hi - lo) / step) as usize;
    let mut best = (lo, f(lo));
    for i in 1..=count {
        let t = lo + step * i as f64;
        let v = f(t);
        if v > best.1 {
            best = (t, v);
        }
    }
    let (_, v) = golden_max(f, best.0 - step, best.0 + step, 1e-12);
    v.max(best.1)
}

fn row(params: &CounterexampleParams, n: u32) -> Result<(CounterexampleRow, f64)> {
    let mu_a = Analytic1D::unit_second_moment_lognormal(n);
    let mu: Measure = mu_a.into();
    let prev: Measure = Analytic1D::unit_second_moment_lognormal(n - 1).into();
    let l = params.half_width;
    let k = params.per_axis();

    let sup_discrepancy_diag = (0..k)
        .map(|i| {
            let a = -l + params.pitch * i as f64;
            (diagonal_error(n, a) - (1.0 + a * a).sqrt()).abs()
        })
        .fold(0.0, f64::max);

    let dims = params.n_points;
    let discrepancy = |x: &[f64]| -> Result<f64> {
        let e = qerr_pow_1d(&mu, &Grid::from_scalars(x)?, 2.0)?.max(0.0).sqrt();
        Ok((e - limit_error(x)).abs())
    };
    let best = maximize_on_box(
        discrepancy,
        &vec![-l; dims],
        &vec![l; dims],
        &vec![k; dims],
        params.restarts,
        params.polish_budget,
        params.seed.derive(n as u64),
    )?;
    let gap = best.pitch.iter().copied().fold(0.0, f64::max);

    let q = qdist(
        &mu,
        &prev,
        2,
        2.0,
        NormSpec::euclidean(),
        &QDistOptions {
            search_box: Some((vec![-l], vec![l])),
            restarts: params.restarts,
            seed: params.seed.derive(1000 + n as u64),
            lattice_budget: k * k,
            polish_budget: params.polish_budget,
            mc: None,
        },
    )?;

    let w2 = mu.moment(2.0, &Point::origin(1))?;
    Ok((
        CounterexampleRow {
            n,
            sup_discrepancy_diag,
            sup_discrepancy_grid: best.value,
            sup_k_call: sup_k_call(&mu_a),
            w2_to_limit_sq: w2,
            q22_lower_to_prev: q.lower_bound,
        },
        gap,
    ))
}

/// Upper bound on `sup_K K E(X_n - K)_+` for `n >= 3` with `ρ = 1/4`.
pub fn sup_k_call_bound(n: u32) -> f64 {
    let rho = 0.25;
    let nf = n as f64;
    let root = (2.0 * std::f64::consts::PI).sqrt();
    (1.0 / (nf * root))
        .max(2.0 / (nf * (1.0 + rho) * rho * root))
        .max(((rho - 0.5) * nf * nf / 4.0).exp())
}

pub fn run_counterexample(params: &CounterexampleParams) -> Result<CounterexampleReport> {
    if params.n_points < 2 {
        return Err(Error::Config(format!("N must be >= 2, got {}", params.n_points)));
    }
    if params.n_max < 1 {
        return Err(Error::Config("n_max must be >= 1".into()));
    }
    if !(params.pitch > 0.0 && params.half_width > 0.0) {
        return Err(Error::Config("pitch and half_width must be positive".into()));
    }
    let computed: Vec<(CounterexampleRow, f64)> = (1..=params.n_max)
        .into_par_iter()
        .map(|n| row(params, n))
        .collect::<Result<_>>()?;
    let lattice_gap_bound = computed.iter().map(|(_, g)| *g).fold(0.0, f64::max);
    let rows: Vec<CounterexampleRow> = computed.into_iter().map(|(r, _)| r).collect();
    let checks = checks(&rows);
    Ok(CounterexampleReport {
        params: params.clone(),
        rows,
        lattice_gap_bound,
        checks,
    })
}

fn checks(rows: &[CounterexampleRow]) -> Vec<Check> {
    let mut out = Vec::new();
    let nonneg = rows.iter().all(|r| {
        [
            r.sup_discrepancy_diag,
            r.sup_discrepancy_grid,
            r.sup_k_call,
            r.w2_to_limit_sq,
            r.q22_lower_to_prev,
        ]
        .iter()
        .all(|v| *v >= 0.0)
    });
    out.push(Check::new("rows nonnegative", nonneg, ""));

    // |√(1-2aε+a²) - √(1+a²)| = 2|a|ε / (√(1-2aε+a²) + √(1+a²)) ≤ 2ε
    let worst = rows
        .iter()
        .map(|r| r.sup_discrepancy_diag / (2.0 * (-((r.n * r.n) as f64) / 8.0).exp()))
        .fold(0.0, f64::max);
    out.push(Check::new(
        "diagonal discrepancy <= 2 exp(-n^2/8)",
        worst <= 1.0 + 1e-12,
        format!("max ratio {worst:.6}"),
    ));

    let mut trend = true;
    let mut detail = String::new();
    for w in rows.windows(2) {
        if w[0].n >= 3 && w[1].sup_discrepancy_grid > 1.05 * w[0].sup_discrepancy_grid {
            trend = false;
            detail = format!(
                "n={}: {} > 1.05 * {}",
                w[1].n, w[1].sup_discrepancy_grid, w[0].sup_discrepancy_grid
            );
        }
    }
    out.push(Check::new("grid discrepancy nonincreasing from n=3 (5% slack)", trend, detail));

    // the supremum decays only like 1/n, so the check is on monotone decay
    // and on the absolute level reached at n = 8
    let decreasing = rows.windows(2).all(|w| w[1].sup_k_call < w[0].sup_k_call);
    out.push(Check::new("supK_call decreasing in n", decreasing, ""));
    if let Some(r8) = rows.iter().find(|r| r.n == 8) {
        out.push(Check::new(
            "supK_call(8) < 0.05",
            r8.sup_k_call < 0.05,
            format!("{:e}", r8.sup_k_call),
        ));
    }
    let bound_ok = rows
        .iter()
        .filter(|r| r.n >= 3)
        .all(|r| r.sup_k_call <= sup_k_call_bound(r.n));
    out.push(Check::new("supK_call within the rho = 1/4 bound", bound_ok, ""));

    let w2_ok = rows.iter().all(|r| (r.w2_to_limit_sq - 1.0).abs() <= 1e-12);
    out.push(Check::new("W2^2 to the limit equals 1", w2_ok, ""));
    out
}
