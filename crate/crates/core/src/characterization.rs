//! Reconstruction of a measure from its quantization error function.
//!
//! Every operator here sees the measure only through an [`EFunctionHandle`],
//! i.e. through grid evaluations `x ↦ e_{N,p}(μ, x)`; none of them can read
//! the measure itself.
//!
//! - [`mollified_density`]: `φ_ε * μ(x)` as a difference of two error values
//!   at shifted copies of a grid whose origin cell is bounded.
//! - [`cdf_from_e11`]: the distribution function as the right slope of
//!   `x ↦ e_{1,1}(μ, x)`.
//! - [`survival_from_e22`]: `μ((ξ|u) > λ)` from two-point quadratic errors
//!   along the line `λ u`.
//! - [`reduce_even_p`]: `e^{p-2}_{2,p-2}` from second differences of `e^p_{2,p}`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, cell_radius, covering_grid, default_horizon, CellRadius, Grid, NormSpec};
use crate::measures::{DiscreteMeasure, Measure, Point, Seed};
use crate::quadrature::{self, Tolerance};
use crate::quanterror::{qerr_pow_1d, qerr_pow_discrete, McEstimate};

type CustomEval = Arc<dyn Fn(&Grid, f64, NormSpec) -> Result<f64> + Send + Sync>;

#[derive(Clone)]
enum Backend {
    Exact(Measure),
    /// Equal-weight pool drawn once; every evaluation reuses it.
    Pool(DiscreteMeasure),
    Custom(CustomEval),
}

/// Evaluator of `x ↦ e^p_{N,p}(μ, x)`, deterministic for a fixed construction.
#[derive(Clone)]
pub struct EFunctionHandle {
    backend: Backend,
    dim: usize,
}

impl fmt::Debug for EFunctionHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.backend {
            Backend::Exact(_) => "exact",
            Backend::Pool(_) => "pool",
            Backend::Custom(_) => "custom",
        };
        write!(f, "EFunctionHandle {{ {kind}, dim: {} }}", self.dim)
    }
}

impl EFunctionHandle {
    /// Closed-form (analytic 1D) or exact (discrete) evaluation.
    pub fn exact(mu: &Measure) -> Result<Self> {
        if let Measure::Sampled(_) = mu {
            return Err(Error::Unsupported {
                op: "exact error function",
                repr: "a sampler-backed measure".into(),
                hint: "use EFunctionHandle::pooled",
            });
        }
        Ok(EFunctionHandle {
            dim: mu.dim(),
            backend: Backend::Exact(mu.clone()),
        })
    }

    /// Common-random-number Monte Carlo: `samples` draws under `seed`, fixed
    /// once, so that the evaluator is a deterministic function of the grid.
    pub fn pooled(mu: &Measure, samples: usize, seed: Seed) -> Result<Self> {
        let pool = DiscreteMeasure::uniform(mu.sample(samples, seed)?)?;
        Ok(EFunctionHandle {
            dim: mu.dim(),
            backend: Backend::Pool(pool),
        })
    }

    /// Exact when possible, otherwise pooled with the given sample budget.
    pub fn for_measure(mu: &Measure, mc: Option<(usize, Seed)>) -> Result<Self> {
        match (mu, mc) {
            (Measure::Sampled(_), Some((n, seed))) => EFunctionHandle::pooled(mu, n, seed),
            _ => EFunctionHandle::exact(mu),
        }
    }

    /// Wraps an arbitrary evaluator `(grid, p, norm) ↦ e^p_{N,p}`.
    pub fn from_fn<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&Grid, f64, NormSpec) -> Result<f64> + Send + Sync + 'static,
    {
        EFunctionHandle {
            dim,
            backend: Backend::Custom(Arc::new(f)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `e^p_{N,p}(μ, grid)`.
    pub fn error_pow(&self, grid: &Grid, p: f64, norm: NormSpec) -> Result<f64> {
        if grid.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: grid.dim(),
            });
        }
        match &self.backend {
            Backend::Exact(Measure::Discrete(d)) => qerr_pow_discrete(d, grid, p, norm),
            Backend::Exact(mu) => qerr_pow_1d(mu, grid, p),
            Backend::Pool(pool) => qerr_pow_discrete(pool, grid, p, norm),
            Backend::Custom(f) => f(grid, p, norm),
        }
    }

    /// `e_{N,p}(μ, grid)`.
    pub fn error(&self, grid: &Grid, p: f64, norm: NormSpec) -> Result<f64> {
        Ok(self.error_pow(grid, p, norm)?.max(0.0).powf(1.0 / p))
    }
}

/// A probability estimate after clamping to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub value: f64,
    /// Finite-difference value before clamping.
    pub raw: f64,
    pub clamped: bool,
}

impl ProbabilityEstimate {
    fn from_raw(raw: f64) -> Self {
        let value = raw.clamp(0.0, 1.0);
        ProbabilityEstimate {
            value,
            raw,
            clamped: value != raw,
        }
    }
}

/// Kernel `φ(ξ) = min_{a∈Γ\{0}} |ξ-a|^p - min_{a∈Γ} |ξ-a|^p`, supported on
/// the closure of the origin's open Voronoi cell, and its mass `C_φ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MollifierSpec {
    /// `Γ = {0, a_1, ..., a_{N-1}}`, origin first.
    pub base_grid: Grid,
    pub p: f64,
    pub norm: NormSpec,
    /// `∫ φ dλ_d`.
    pub c_phi: f64,
    /// Monte Carlo standard error of `c_phi` (`d >= 3`), `None` for quadrature.
    pub c_phi_std_error: Option<f64>,
    pub epsilon: f64,
    /// Estimated radius of the origin cell.
    pub cell_radius: f64,
}

impl MollifierSpec {
    pub fn dim(&self) -> usize {
        self.base_grid.dim()
    }

    /// `φ(ξ)`.
    pub fn kernel(&self, xi: &[f64]) -> f64 {
        kernel(&self.base_grid, self.p, self.norm, xi)
    }

    /// Normalized kernel `φ_ε(ξ) = φ(ξ/ε) / (C_φ ε^d)`.
    pub fn scaled_kernel(&self, xi: &[f64]) -> f64 {
        let eps = self.epsilon;
        let scaled: Vec<f64> = xi.iter().map(|x| x / eps).collect();
        self.kernel(&scaled) / (self.c_phi * eps.powi(self.dim() as i32))
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        check_positive("epsilon", epsilon)?;
        Ok(MollifierSpec {
            epsilon,
            ..self.clone()
        })
    }
}

fn kernel(grid: &Grid, p: f64, norm: NormSpec, xi: &[f64]) -> f64 {
    let pts = grid.points();
    let to_origin = norm.distance(xi, &pts[0]).powf(p);
    let others = pts[1..]
        .iter()
        .map(|a| norm.distance(xi, a).powf(p))
        .fold(f64::INFINITY, f64::min);
    (others - others.min(to_origin)).max(0.0)
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

/// Samples used for `C_φ` when `d >= 3`.
const KERNEL_MC_SAMPLES: usize = 1_000_000;
const KERNEL_SEED: Seed = Seed(0x5eed_c0de);

/// Base grid `{0} ∪ covering grid` when a covering construction exists for
/// `(d, norm)`, else `{0} ∪ regular simplex` for the Euclidean norm.
pub fn mollifier_base_grid(d: usize, norm: NormSpec) -> Result<Grid> {
    match covering_grid(d, norm) {
        Ok(cover) => {
            let mut points = vec![Point::origin(d)];
            points.extend(cover.points().iter().cloned());
            Grid::new(points)
        }
        Err(e) if norm == NormSpec::euclidean() => {
            let _ = e;
            geometry::bounded_cell_grid_euclidean(d, 1.0)
        }
        Err(e) => Err(e),
    }
}

/// Builds the approximate identity for dimension `d`.
pub fn make_mollifier(d: usize, p: f64, norm: NormSpec, epsilon: f64) -> Result<MollifierSpec> {
    let grid = mollifier_base_grid(d, norm)?;
    make_mollifier_from_grid(grid, p, norm, epsilon)
}

/// As [`make_mollifier`] with an explicit base grid (origin first).
pub fn make_mollifier_from_grid(grid: Grid, p: f64, norm: NormSpec, epsilon: f64) -> Result<MollifierSpec> {
    check_positive("epsilon", epsilon)?;
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p must be >= 1, got {p}")));
    }
    let d = grid.dim();
    if grid.points()[0].iter().any(|&c| c != 0.0) {
        return Err(Error::InvalidArgument("base grid must start with the origin".into()));
    }
    let radius = match cell_radius(&grid, 0, norm, 4000, KERNEL_SEED, default_horizon(&grid, norm))? {
        CellRadius::Bounded(r) if r > 0.0 => r,
        CellRadius::Bounded(_) => {
            return Err(Error::InvalidArgument("origin is duplicated in the base grid".into()))
        }
        CellRadius::Unbounded => return Err(Error::UnboundedCell),
    };
    // sampled directions can underestimate the radius; φ vanishes outside the cell
    let box_half = 1.1 * radius;
    let tol = Tolerance {
        abs: 1e-12,
        rel: 1e-10,
        max_segments: 20_000,
    };
    let (c_phi, c_phi_std_error) = match d {
        1 => {
            let breaks = [-box_half, -radius, 0.0, radius, box_half];
            let r = quadrature::integrate_pieces(|x| kernel(&grid, p, norm, &[x]), &breaks, tol);
            (r.value, None)
        }
        2 => {
            let r = quadrature::integrate_2d(
                |x, y| kernel(&grid, p, norm, &[x, y]),
                (-box_half, box_half),
                (-box_half, box_half),
                Tolerance {
                    abs: 1e-10,
                    rel: 1e-9,
                    max_segments: 2000,
                },
            );
            (r.value, None)
        }
        _ => {
            let volume = (2.0 * box_half).powi(d as i32);
            let values: Vec<f64> = (0..KERNEL_MC_SAMPLES as u64)
                .map(|i| {
                    let mut rng = KERNEL_SEED.rng_for(i);
                    let xi: Vec<f64> = (0..d).map(|_| box_half * (2.0 * rng.random::<f64>() - 1.0)).collect();
                    volume * kernel(&grid, p, norm, &xi)
                })
                .collect();
            let est = McEstimate::from_values(&values, KERNEL_SEED, 1.0);
            (est.power_mean, Some(est.power_std_error))
        }
    };
    if !(c_phi > 0.0) {
        return Err(Error::UnboundedCell);
    }
    Ok(MollifierSpec {
        base_grid: grid,
        p,
        norm,
        c_phi,
        c_phi_std_error,
        epsilon,
        cell_radius: radius,
    })
}

/// The two `N`-tuples whose error difference equals `C_φ ε^{d+p} φ_ε * μ(x)`:
/// `x̃ = (x - εa_1, x - εa_1, x - εa_2, ..., x - εa_{N-1})` and
/// `x̃_0 = (x, x - εa_1, ..., x - εa_{N-1})`.
pub fn shifted_grids(spec: &MollifierSpec, x: &[f64]) -> Result<(Grid, Grid)> {
    let eps = spec.epsilon;
    let shifted: Vec<Point> = spec.base_grid.points()[1..]
        .iter()
        .map(|a| Point::new(x.iter().zip(a.iter()).map(|(xi, ai)| xi - eps * ai).collect()))
        .collect::<Result<_>>()?;
    let mut tilde = vec![shifted[0].clone()];
    tilde.extend(shifted.iter().cloned());
    let mut tilde0 = vec![Point::new(x.to_vec())?];
    tilde0.extend(shifted);
    Ok((Grid::new(tilde)?, Grid::new(tilde0)?))
}

/// Relative tolerance on negative mollified values before they count as an
/// evaluator inconsistency.
const NEGATIVE_TOL: f64 = 1e-9;

/// `φ_ε * μ(x) = (e^p(μ, x̃) - e^p(μ, x̃_0)) / (C_φ ε^{d+p})`.
pub fn mollified_density(handle: &EFunctionHandle, spec: &MollifierSpec, x: &[f64]) -> Result<f64> {
    if x.len() != spec.dim() || handle.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: if x.len() != spec.dim() { x.len() } else { handle.dim() },
        });
    }
    let (tilde, tilde0) = shifted_grids(spec, x)?;
    let e1 = handle.error_pow(&tilde, spec.p, spec.norm)?;
    let e0 = handle.error_pow(&tilde0, spec.p, spec.norm)?;
    let diff = e1 - e0;
    if diff < -NEGATIVE_TOL * e1.abs().max(e0.abs()).max(1e-300) {
        return Err(Error::EvaluatorInconsistency(format!(
            "e^p(x̃) - e^p(x̃0) = {diff:e} is negative beyond tolerance"
        )));
    }
    let d = spec.dim() as f64;
    Ok(diff / (spec.c_phi * spec.epsilon.powf(d + spec.p)))
}

/// Default forward step for [`cdf_from_e11`]: `1e-5 (1 + |x|)`.
pub fn default_cdf_step(x: f64) -> f64 {
    1e-5 * (1.0 + x.abs())
}

/// `F_μ(x)` from the right slope of `e_{1,1}(μ, ·)`: `(1 + (e(x+h) - e(x))/h) / 2`.
pub fn cdf_from_e11(handle: &EFunctionHandle, x: f64, h: Option<f64>) -> Result<ProbabilityEstimate> {
    if handle.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: handle.dim(),
        });
    }
    let h = h.unwrap_or_else(|| default_cdf_step(x));
    check_positive("h", h)?;
    let e = |t: f64| handle.error(&Grid::from_scalars(&[t])?, 1.0, NormSpec::euclidean());
    let slope = (e(x + h)? - e(x)?) / h;
    Ok(ProbabilityEstimate::from_raw(0.5 * (1.0 + slope)))
}

/// Default step for [`survival_from_e22`]: `1e-4 (1 + |λ|)`.
pub fn default_survival_step(lambda: f64) -> f64 {
    1e-4 * (1.0 + lambda.abs())
}

fn check_unit(u: &[f64]) -> Result<()> {
    let n = NormSpec::euclidean().norm_of(u);
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("direction must have unit Euclidean norm, got {n}")));
    }
    Ok(())
}

/// `[e²(μ,(a,a)) - e²(μ,(a,b))] / (2(λ' - λ))` with `a = λu`, `b = λ'u`,
/// which equals `∫ ((ξ|u) - (λ+λ')/2)_+ μ(dξ)`.
pub fn projected_call(handle: &EFunctionHandle, u: &[f64], lambda: f64, lambda_prime: f64) -> Result<f64> {
    if u.len() != handle.dim() {
        return Err(Error::DimensionMismatch {
            expected: handle.dim(),
            got: u.len(),
        });
    }
    check_unit(u)?;
    if !(lambda_prime > lambda) {
        return Err(Error::InvalidArgument("need lambda' > lambda".into()));
    }
    let a = Point::new(u.iter().map(|c| lambda * c).collect())?;
    let b = Point::new(u.iter().map(|c| lambda_prime * c).collect())?;
    let e = NormSpec::euclidean();
    let same = handle.error_pow(&Grid::new(vec![a.clone(), a.clone()])?, 2.0, e)?;
    let split = handle.error_pow(&Grid::new(vec![a, b])?, 2.0, e)?;
    Ok((same - split) / (2.0 * (lambda_prime - lambda)))
}

/// `μ((ξ|u) > λ)` as `-(ψ(λ+h) - ψ(λ))/h`, `ψ` from [`projected_call`] with `λ' = λ + h`.
pub fn survival_from_e22(handle: &EFunctionHandle, u: &[f64], lambda: f64, h: Option<f64>) -> Result<ProbabilityEstimate> {
    let h = h.unwrap_or_else(|| default_survival_step(lambda));
    check_positive("h", h)?;
    let psi = |l: f64| projected_call(handle, u, l, l + h);
    let raw = -(psi(lambda + h)? - psi(lambda)?) / h;
    Ok(ProbabilityEstimate::from_raw(raw))
}

/// Estimate of `e^{p-2}_{2,p-2}(μ, (a, b))` as
/// `(∂²_aa + ∂²_bb - 2∂²_ab) e^p_{2,p}(μ, (a,b)) / (p(p-1))`.
///
/// The operator is the second derivative along `(1, -1)`, taken by the
/// central stencil `[f(a+h, b-h) - 2f(a, b) + f(a-h, b+h)] / h²`; along that
/// line the cell boundary `(a+b)/2` stays fixed.
pub fn reduce_even_p(handle: &EFunctionHandle, p: u32, a: f64, b: f64, h: f64) -> Result<f64> {
    if handle.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: handle.dim(),
        });
    }
    if p < 4 || p % 2 != 0 {
        return Err(Error::InvalidArgument(format!("p must be even and >= 4, got {p}")));
    }
    check_positive("h", h)?;
    if a >= b {
        return Err(Error::InvalidArgument(format!("need a < b, got a = {a}, b = {b}")));
    }
    if a >= b - 2.0 * h {
        return Err(Error::InvalidArgument(format!("need a < b - 2h, got a = {a}, b = {b}, h = {h}")));
    }
    let pf = p as f64;
    let e = NormSpec::euclidean();
    let f = |x: f64, y: f64| handle.error_pow(&Grid::from_scalars(&[x, y])?, pf, e);
    let second = (f(a + h, b - h)? - 2.0 * f(a, b)? + f(a - h, b + h)?) / (h * h);
    Ok(second / (pf * (pf - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{Analytic1D, SampledMeasure};

    fn exact(m: Analytic1D) -> EFunctionHandle {
        EFunctionHandle::exact(&m.into()).unwrap()
    }

    #[test]
    fn triangle_kernel_in_one_dimension() {
        for p in [1.0, 2.0] {
            let spec = make_mollifier(1, p, NormSpec::euclidean(), 1.0).unwrap();
            let mut xs = spec.base_grid.scalars();
            assert_eq!(xs[0], 0.0);
            xs.sort_by(f64::total_cmp);
            assert_eq!(xs, vec![-1.0, 0.0, 1.0]);
            // φ(ξ) = (1 - 2|ξ|)_+ for both p = 1 and p = 2
            for &x in &[-0.7, -0.3, 0.0, 0.1, 0.45, 0.6] {
                let want = (1.0 - 2.0 * f64::abs(x)).max(0.0);
                assert!((spec.kernel(&[x]) - want).abs() < 1e-15, "p={p} x={x}");
            }
            assert!((spec.c_phi - 0.5).abs() < 1e-10, "p={p}: {}", spec.c_phi);
            assert!((spec.cell_radius - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn c_phi_does_not_depend_on_epsilon() {
        for d in [1, 2] {
            let a = make_mollifier(d, 2.0, NormSpec::euclidean(), 1.0).unwrap();
            let b = make_mollifier(d, 2.0, NormSpec::euclidean(), 0.5).unwrap();
            assert_eq!(a.c_phi, b.c_phi);
        }
    }

    #[test]
    fn two_dimensional_kernel_mass_matches_monte_carlo() {
        let spec = make_mollifier(2, 2.0, NormSpec::euclidean(), 1.0).unwrap();
        let r = 1.1 * spec.cell_radius;
        let n = 400_000u64;
        let mut acc = 0.0;
        for i in 0..n {
            let mut rng = Seed(99).rng_for(i);
            let x = r * (2.0 * rng.random::<f64>() - 1.0);
            let y = r * (2.0 * rng.random::<f64>() - 1.0);
            acc += spec.kernel(&[x, y]);
        }
        let mc = acc / n as f64 * 4.0 * r * r;
        assert!((mc - spec.c_phi).abs() < 0.01 * spec.c_phi, "{mc} vs {}", spec.c_phi);
    }

    #[test]
    fn mollified_point_mass_is_the_kernel_peak() {
        let spec = make_mollifier(1, 2.0, NormSpec::euclidean(), 0.1).unwrap();
        let h = exact(Analytic1D::dirac(0.0).unwrap());
        let v = mollified_density(&h, &spec, &[0.0]).unwrap();
        assert!((v - 20.0).abs() < 1e-9, "{v}");
        // off the atom by more than ε/2 the kernel vanishes
        assert!(mollified_density(&h, &spec, &[0.06]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn mollified_uniform_is_flat() {
        let spec = make_mollifier(1, 2.0, NormSpec::euclidean(), 0.1).unwrap();
        let h = exact(Analytic1D::uniform(0.0, 1.0).unwrap());
        let v = mollified_density(&h, &spec, &[0.5]).unwrap();
        assert!((v - 1.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn mollified_normal_matches_direct_convolution() {
        let spec = make_mollifier(1, 2.0, NormSpec::euclidean(), 0.05).unwrap();
        let mu = Analytic1D::normal(0.0, 1.0).unwrap();
        let v = mollified_density(&exact(mu), &spec, &[0.0]).unwrap();
        // oracle: ∫ φ_ε(x - t) density(t) dt by quadrature
        let oracle = quadrature::integrate(
            |t| spec.scaled_kernel(&[-t]) * mu.density(t),
            -0.05,
            0.05,
            Tolerance::default(),
        )
        .value;
        assert!((v - oracle).abs() < 1e-8, "{v} vs {oracle}");
        assert!((v - 0.398_94).abs() < 0.005 * 0.398_94);
    }

    #[test]
    fn inconsistent_evaluator_is_reported() {
        let spec = make_mollifier(1, 2.0, NormSpec::euclidean(), 0.1).unwrap();
        // an "error function" that rewards duplicates cannot come from a measure
        let bogus = EFunctionHandle::from_fn(1, |g, _, _| Ok(g.distinct_count() as f64));
        assert!(matches!(
            mollified_density(&bogus, &spec, &[0.0]),
            Err(Error::EvaluatorInconsistency(_))
        ));
    }

    #[test]
    fn cdf_extraction_examples() {
        let u = exact(Analytic1D::uniform(0.0, 1.0).unwrap());
        assert!((cdf_from_e11(&u, 0.3, None).unwrap().value - 0.3).abs() < 1e-4);
        let n = exact(Analytic1D::normal(0.0, 1.0).unwrap());
        assert!((cdf_from_e11(&n, 0.0, None).unwrap().value - 0.5).abs() < 1e-4);
        let d = exact(Analytic1D::dirac(0.0).unwrap());
        let est = cdf_from_e11(&d, 0.5, None).unwrap();
        assert!((est.value - 1.0).abs() < 1e-9);
        let below = cdf_from_e11(&d, -0.5, None).unwrap();
        assert!(below.value.abs() < 1e-9);
    }

    #[test]
    fn clamping_is_flagged() {
        // slope 3 is impossible for a 1-Lipschitz function; the clamp must show
        let steep = EFunctionHandle::from_fn(1, |g, _, _| Ok(3.0 * g.points()[0][0]));
        let est = cdf_from_e11(&steep, 1.0, Some(1e-3)).unwrap();
        assert!(est.clamped && est.value == 1.0 && est.raw > 1.0);
    }

    #[test]
    fn projected_call_point_mass() {
        let mu: Measure = DiscreteMeasure::new(vec![Point::new(vec![1.0, 0.0]).unwrap()], vec![1.0])
            .unwrap()
            .into();
        let h = EFunctionHandle::exact(&mu).unwrap();
        let psi = projected_call(&h, &[1.0, 0.0], 0.0, 0.2).unwrap();
        assert!((psi - 0.9).abs() < 1e-15);
        assert!(projected_call(&h, &[1.0, 1.0], 0.0, 0.2).is_err());
    }

    #[test]
    fn survival_uniform() {
        let h = exact(Analytic1D::uniform(0.0, 1.0).unwrap());
        let s = survival_from_e22(&h, &[1.0], 0.3, None).unwrap();
        assert!((s.value - 0.7).abs() < 1e-3, "{s:?}");
    }

    #[test]
    fn survival_gaussian_plane() {
        let mu: Measure = SampledMeasure::standard_gaussian(2).unwrap().into();
        let h = EFunctionHandle::pooled(&mu, 100_000, Seed(8)).unwrap();
        let u = [0.6, 0.8];
        let s = survival_from_e22(&h, &u, 0.0, None).unwrap();
        assert!((s.value - 0.5).abs() < 0.01, "{s:?}");
    }

    #[test]
    fn even_power_reduction() {
        let u = exact(Analytic1D::uniform(0.0, 1.0).unwrap());
        let direct = u.error_pow(&Grid::from_scalars(&[0.3, 0.7]).unwrap(), 2.0, NormSpec::euclidean()).unwrap();
        let r = reduce_even_p(&u, 4, 0.3, 0.7, 1e-3).unwrap();
        assert!(((r - direct) / direct).abs() < 1e-4, "{r} vs {direct}");

        let n = exact(Analytic1D::normal(0.0, 1.0).unwrap());
        let direct = n.error_pow(&Grid::from_scalars(&[-0.1, 0.1]).unwrap(), 2.0, NormSpec::euclidean()).unwrap();
        let r = reduce_even_p(&n, 4, -0.1, 0.1, 1e-3).unwrap();
        assert!(((r - direct) / direct).abs() < 1e-4);

        let r1 = reduce_even_p(&n, 4, -0.4, 1.3, 1e-3).unwrap();
        let r2 = reduce_even_p(&n, 4, -1.3, 0.4, 1e-3).unwrap();
        assert!((r1 - r2).abs() < 1e-8, "{r1} vs {r2}");

        assert!(reduce_even_p(&n, 4, 0.5, 0.5, 1e-3).is_err());
        assert!(reduce_even_p(&n, 4, 0.5, 0.501, 1e-3).is_err());
        assert!(reduce_even_p(&n, 3, 0.0, 1.0, 1e-3).is_err());
    }
}
