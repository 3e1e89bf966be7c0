//! Sequences `μ_n → μ_∞` with known `W_p(μ_n, μ_∞)`: the lattice supremum of
//! `|e_{N,p}(μ_n, ·) - e_{N,p}(μ_∞, ·)|` must stay below `W_p` and decay with it.

use serde::{Deserialize, Serialize};

use super::{Check, ExperimentConfig};
use crate::characterization::EFunctionHandle;
use crate::error::{Error, Result};
use crate::geometry::{Grid, NormSpec};
use crate::measures::{Analytic1D, Measure};
use crate::metrics::{lattice_scan, wasserstein_1d};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquivalenceFamily {
    /// `δ_{1/n} → δ_0`
    ShrinkingDirac,
    /// `Uniform(0, 1 + 1/n) → Uniform(0, 1)`
    UniformStretch,
    /// `Normal(0, √(1 + 1/n)) → Normal(0, 1)`
    NormalScale,
}

impl EquivalenceFamily {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "shrinking-dirac" => Ok(EquivalenceFamily::ShrinkingDirac),
            "uniform-stretch" => Ok(EquivalenceFamily::UniformStretch),
            "normal-scale" => Ok(EquivalenceFamily::NormalScale),
            other => Err(Error::Config(format!(
                "unknown equivalence family `{other}` (shrinking-dirac, uniform-stretch, normal-scale)"
            ))),
        }
    }

    pub fn member(self, n: usize) -> Result<Analytic1D> {
        let t = 1.0 / n as f64;
        match self {
            EquivalenceFamily::ShrinkingDirac => Analytic1D::dirac(t),
            EquivalenceFamily::UniformStretch => Analytic1D::uniform(0.0, 1.0 + t),
            EquivalenceFamily::NormalScale => Analytic1D::normal(0.0, (1.0 + t).sqrt()),
        }
    }

    pub fn limit(self) -> Analytic1D {
        match self {
            EquivalenceFamily::ShrinkingDirac => Analytic1D::Dirac { c: 0.0 },
            EquivalenceFamily::UniformStretch => Analytic1D::Uniform { a: 0.0, b: 1.0 },
            EquivalenceFamily::NormalScale => Analytic1D::Normal { m: 0.0, s: 1.0 },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquivalenceParams {
    pub family: EquivalenceFamily,
    pub n_points: usize,
    pub p: f64,
    pub half_width: f64,
    pub pitch: f64,
    pub ns: Vec<usize>,
}

impl EquivalenceParams {
    pub fn new(family: EquivalenceFamily) -> Self {
        EquivalenceParams {
            family,
            n_points: 2,
            p: 2.0,
            half_width: 3.0,
            pitch: 0.05,
            ns: vec![1, 2, 4, 8, 16, 32],
        }
    }

    pub fn from_config(c: &ExperimentConfig) -> Result<Self> {
        let mut p = EquivalenceParams::new(EquivalenceFamily::parse(c.str_param("family")?)?);
        p.n_points = c.usize_or("N", p.n_points)?;
        p.p = c.f64_or("p", p.p)?;
        p.half_width = c.f64_or("half_width", p.half_width)?;
        p.pitch = c.f64_or("pitch", p.pitch)?;
        p.ns = c.usize_list_or("ns", &p.ns)?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquivalenceRow {
    pub n: usize,
    pub lattice_sup: f64,
    pub wasserstein: f64,
    pub dominated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub params: EquivalenceParams,
    pub rows: Vec<EquivalenceRow>,
    pub checks: Vec<Check>,
}

pub fn run_equivalence(params: &EquivalenceParams) -> Result<EquivalenceReport> {
    if params.n_points == 0 || params.ns.is_empty() || params.ns.contains(&0) {
        return Err(Error::Config("N and every n must be positive".into()));
    }
    if !(params.pitch > 0.0 && params.half_width > 0.0 && params.p >= 1.0) {
        return Err(Error::Config("pitch, half_width must be positive and p >= 1".into()));
    }
    let limit: Measure = params.family.limit().into();
    let h_limit = EFunctionHandle::exact(&limit)?;
    let dims = params.n_points;
    let k = (2.0 * params.half_width / params.pitch).round() as usize + 1;
    let e = NormSpec::euclidean();
    let mut ns = params.ns.clone();
    ns.sort_unstable();
    let mut rows = Vec::new();
    for &n in &ns {
        let mu: Measure = params.family.member(n)?.into();
        let h = EFunctionHandle::exact(&mu)?;
        let scan = lattice_scan(&vec![-params.half_width; dims], &vec![params.half_width; dims], &vec![k; dims], 1, |x| {
            let g = Grid::from_scalars(x)?;
            Ok((h.error(&g, params.p, e)? - h_limit.error(&g, params.p, e)?).abs())
        })?;
        let sup = scan.top[0].0;
        let w = wasserstein_1d(&mu, &limit, params.p)?.cost;
        rows.push(EquivalenceRow {
            n,
            lattice_sup: sup,
            wasserstein: w,
            dominated: sup <= w + 1e-9,
        });
    }
    let mut checks = vec![Check::new(
        "lattice sup <= W_p + 1e-9",
        rows.iter().all(|r| r.dominated),
        rows.iter()
            .filter(|r| !r.dominated)
            .map(|r| format!("n={}: {} > {}", r.n, r.lattice_sup, r.wasserstein))
            .collect::<Vec<_>>()
            .join("; "),
    )];
    if rows.len() > 1 {
        let first = &rows[0];
        let last = &rows[rows.len() - 1];
        let w_decay = rows.windows(2).all(|w| w[1].wasserstein < w[0].wasserstein);
        checks.push(Check::new(
            "joint decay",
            w_decay && last.lattice_sup <= first.lattice_sup,
            format!(
                "W: {:e} -> {:e}, sup: {:e} -> {:e}",
                first.wasserstein, last.wasserstein, first.lattice_sup, last.lattice_sup
            ),
        ));
    }
    Ok(EquivalenceReport {
        params: params.clone(),
        rows,
        checks,
    })
}
