//! Empirical law of Lloyd grids against the limit density `∝ h^{1/3}`
//! (quadratic quantization on the line).

use serde::{Deserialize, Serialize};

use super::{Check, ExperimentConfig};
use crate::error::{Error, Result};
use crate::measures::{Analytic1D, Measure, Seed};
use crate::quanterror::{lloyd, LloydInit, LloydOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridLawFamily {
    Normal { m: f64, s: f64 },
    Uniform { a: f64, b: f64 },
}

impl GridLawFamily {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "normal" => Ok(GridLawFamily::Normal { m: 0.0, s: 1.0 }),
            "uniform" => Ok(GridLawFamily::Uniform { a: 0.0, b: 1.0 }),
            other => Err(Error::Config(format!("unknown grid-law family `{other}` (normal, uniform)"))),
        }
    }

    pub fn measure(self) -> Result<Analytic1D> {
        match self {
            GridLawFamily::Normal { m, s } => Analytic1D::normal(m, s),
            GridLawFamily::Uniform { a, b } => Analytic1D::uniform(a, b),
        }
    }
}

/// Law with density `∝ h^{1/3}`: `Normal(m, s√3)` for `Normal(m, s)`, the
/// uniform law itself for a uniform law.
pub fn limit_law(family: GridLawFamily) -> Result<Analytic1D> {
    match family {
        GridLawFamily::Normal { m, s } => Analytic1D::normal(m, s * 3f64.sqrt()),
        GridLawFamily::Uniform { a, b } => Analytic1D::uniform(a, b),
    }
}

/// `sup_t |(1/N) #{x_i <= t} - F(t)|` for a continuous `F`.
pub fn kolmogorov_distance(points: &[f64], law: &Analytic1D) -> f64 {
    let mut xs = points.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = law.cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridLawParams {
    pub family: GridLawFamily,
    pub ns: Vec<usize>,
    pub lloyd_iters: usize,
    pub pool_size: usize,
    pub seeds: Vec<Seed>,
}

impl GridLawParams {
    pub fn new(family: GridLawFamily, ns: Vec<usize>, seed: Seed) -> Self {
        GridLawParams {
            family,
            ns,
            lloyd_iters: 20_000,
            pool_size: 100_000,
            seeds: (0..3).map(|k| seed.derive(k)).collect(),
        }
    }

    pub fn from_config(c: &ExperimentConfig) -> Result<Self> {
        let family = GridLawFamily::parse(c.str_param("family")?)?;
        let ns = c.usize_list_or("Ns", &[10, 25, 50, 100])?;
        let mut p = GridLawParams::new(family, ns, c.seed);
        p.lloyd_iters = c.usize_or("lloyd_iters", p.lloyd_iters)?;
        p.pool_size = c.usize_or("pool_size", p.pool_size)?;
        if c.parameters.contains_key("seeds") {
            p.seeds = c.seed_list_or("seeds", &[])?;
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridLawRow {
    #[serde(rename = "N")]
    pub n_points: usize,
    pub seed: u64,
    pub kolmogorov: f64,
    pub distortion: f64,
    pub iterations: usize,
    pub effective_n: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridLawReport {
    pub params: GridLawParams,
    pub limit: Analytic1D,
    pub rows: Vec<GridLawRow>,
    pub checks: Vec<Check>,
}

pub fn run_grid_law(params: &GridLawParams) -> Result<GridLawReport> {
    if params.ns.is_empty() || params.ns.contains(&0) {
        return Err(Error::Config("Ns must be a nonempty list of positive sizes".into()));
    }
    if params.seeds.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }
    let mu: Measure = params.family.measure()?.into();
    let limit = limit_law(params.family)?;
    let mut ns = params.ns.clone();
    ns.sort_unstable();
    let mut rows = Vec::new();
    for &seed in &params.seeds {
        let opts = LloydOptions {
            iterations: params.lloyd_iters,
            pool_size: params.pool_size,
            pool_seed: seed.derive(0x9001),
            // distortion flattens long before the grid stops moving
            rel_tol: 0.0,
        };
        for &n in &ns {
            let r = lloyd(&mu, n, LloydInit::Seeded(seed), &opts)?;
            rows.push(GridLawRow {
                n_points: n,
                seed: seed.0,
                kolmogorov: kolmogorov_distance(&r.grid.scalars(), &limit),
                distortion: r.distortion(),
                iterations: r.iterations,
                effective_n: r.effective_n,
            });
        }
    }
    let mut checks = Vec::new();
    for &seed in &params.seeds {
        let ds: Vec<f64> = rows.iter().filter(|r| r.seed == seed.0).map(|r| r.kolmogorov).collect();
        let decreasing = ds.windows(2).all(|w| w[1] < w[0]);
        checks.push(Check::new(
            format!("Kolmogorov distance decreasing in N (seed {})", seed.0),
            decreasing,
            format!("{ds:.4?}"),
        ));
    }
    Ok(GridLawReport {
        params: params.clone(),
        limit,
        rows,
        checks,
    })
}
