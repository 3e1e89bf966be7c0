//! `quantchar`: quantization error functions, distances, geometry
//! certificates, reconstruction and the experiment runners.
//!
//! Grids and point lists are given as strings: scalars separated by commas
//! for one-dimensional measures (`"0.25,0.75"`), or points separated by
//! semicolons with comma-separated coordinates (`"0,0;1,1"`).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use quantchar::characterization::{self, EFunctionHandle};
use quantchar::experiments::{ExperimentConfig, ExperimentKind, ExperimentReport};
use quantchar::geometry::{covering_grid, verify_covering};
use quantchar::metrics::{self, QDistOptions};
use quantchar::quanterror::{self, LloydInit, LloydOptions};
use quantchar::{Grid, Measure, NormSpec, Point, Seed};

#[derive(Parser)]
#[command(name = "quantchar", version, about = "Quantization error functions as characterization tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate e_{N,p}(mu, grid).
    Qerr {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Norm exponent r (a number >= 1 or `inf`).
        #[arg(long, default_value = "2")]
        norm: String,
        #[arg(long)]
        mc_samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use Monte Carlo even when an exact route exists.
        #[arg(long)]
        force_mc: bool,
    },
    /// Quadratic Lloyd iteration.
    Lloyd {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        pool_size: usize,
    },
    /// Lower bound on Q_{N,p}(mu, nu) by lattice search and polish.
    Qdist {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// `lo,hi`, applied to every coordinate.
        #[arg(long = "box", allow_hyphen_values = true)]
        search_box: Option<String>,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "2")]
        norm: String,
        #[arg(long, default_value_t = 4096)]
        lattice_budget: usize,
        #[arg(long)]
        mc_samples: Option<usize>,
    },
    /// W_p between two one-dimensional measures.
    Wasserstein {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
    },
    /// Sphere covering grid and its sampled certificate.
    Covering {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        r: String,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Mollified density from error-function differences (CSV: x, density_estimate).
    Mollify {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, allow_hyphen_values = true)]
        xs: String,
        #[arg(long, default_value = "2")]
        norm: String,
        #[arg(long)]
        mc_samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Distribution function from e_{1,1} slopes (CSV: x, F_estimate).
    CdfExtract {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        xs: String,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        mc_samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Lognormal sequence: Q-Cauchy but not W_2-Cauchy.
    Counterexample {
        #[arg(long = "N", default_value_t = 2)]
        n_points: usize,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        #[arg(long, default_value_t = 0.25)]
        pitch: f64,
        #[arg(long, default_value_t = 10.0)]
        half_width: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Empirical law of Lloyd grids against the limit law.
    GridLaw {
        #[arg(long)]
        family: String,
        #[arg(long = "Ns", default_value = "10,25,50,100")]
        ns: String,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        pool_size: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Lattice sup of error-function differences against W_p along a sequence.
    Equivalence {
        #[arg(long)]
        family: String,
        #[arg(long = "N", default_value_t = 2)]
        n_points: usize,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long)]
        ns: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment from a JSON configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load_measure(path: &Path) -> Result<Measure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Measure::from_json_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad number `{t}`")))
        .collect()
}

fn parse_points(s: &str, dim: usize) -> Result<Vec<Point>> {
    let points: Vec<Point> = if dim == 1 {
        parse_floats(s)?.into_iter().map(Point::scalar).collect()
    } else {
        s.split(';')
            .map(|t| Ok(Point::new(parse_floats(t)?)?))
            .collect::<Result<_>>()?
    };
    if let Some(p) = points.iter().find(|p| p.dim() != dim) {
        bail!("point {:?} has dimension {}, expected {dim}", p.coords(), p.dim());
    }
    Ok(points)
}

fn parse_usizes(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().with_context(|| format!("bad count `{t}`")))
        .collect()
}

fn handle(mu: &Measure, mc_samples: Option<usize>, seed: u64) -> Result<EFunctionHandle> {
    Ok(EFunctionHandle::for_measure(mu, mc_samples.map(|n| (n, Seed(seed))))?)
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run_experiment(config: &ExperimentConfig) -> Result<bool> {
    let report = config.run()?;
    let sidecar = report.write(config)?;
    summarize(&report);
    eprintln!("wrote {} and {}", config.output_path.display(), sidecar.display());
    Ok(report.passed())
}

fn summarize(report: &ExperimentReport) {
    for c in report.checks() {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        if c.detail.is_empty() {
            eprintln!("{tag}  {}", c.name);
        } else {
            eprintln!("{tag}  {}  ({})", c.name, c.detail);
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Qerr {
            measure,
            grid,
            p,
            norm,
            mc_samples,
            seed,
            force_mc,
        } => {
            let mu = load_measure(&measure)?;
            let grid = Grid::new(parse_points(&grid, mu.dim())?)?;
            let norm = NormSpec::parse(&norm)?;
            let v = quanterror::qerr(&mu, &grid, p, norm, mc_samples.map(|n| (n, Seed(seed))), force_mc)?;
            print_json(&serde_json::to_value(v)?)?;
        }
        Command::Lloyd {
            measure,
            n,
            iters,
            seed,
            pool_size,
        } => {
            let mu = load_measure(&measure)?;
            let opts = LloydOptions {
                iterations: iters,
                pool_size,
                pool_seed: Seed(seed).derive(0x9001),
                ..Default::default()
            };
            let r = quanterror::lloyd(&mu, n, LloydInit::Seeded(Seed(seed)), &opts)?;
            print_json(&json!({
                "grid": r.grid,
                "distortion": r.distortion(),
                "iterations": r.iterations,
                "effective_n": r.effective_n,
            }))?;
        }
        Command::Qdist {
            mu,
            nu,
            n,
            p,
            search_box,
            restarts,
            seed,
            norm,
            lattice_budget,
            mc_samples,
        } => {
            let mu = load_measure(&mu)?;
            let nu = load_measure(&nu)?;
            let search_box = match search_box {
                Some(s) => {
                    let v = parse_floats(&s)?;
                    if v.len() != 2 {
                        bail!("--box expects `lo,hi`");
                    }
                    Some((vec![v[0]; mu.dim()], vec![v[1]; mu.dim()]))
                }
                None => None,
            };
            let opts = QDistOptions {
                search_box,
                restarts,
                seed: Seed(seed),
                lattice_budget,
                mc: mc_samples.map(|k| (k, Seed(seed).derive(7))),
                ..Default::default()
            };
            let r = metrics::qdist(&mu, &nu, n, p, NormSpec::parse(&norm)?, &opts)?;
            print_json(&serde_json::to_value(r)?)?;
        }
        Command::Wasserstein { mu, nu, p } => {
            let w = metrics::wasserstein_1d(&load_measure(&mu)?, &load_measure(&nu)?, p)?;
            println!("{}", w.cost);
        }
        Command::Covering { dim, r, samples, seed } => {
            let norm = NormSpec::parse(&r)?;
            let grid = covering_grid(dim, norm)?;
            let cert = verify_covering(&grid, norm, samples, Seed(seed))?;
            print_json(&json!({
                "centers": cert.centers,
                "r": cert.norm,
                "max_min_distance": cert.max_min_distance,
                "valid": cert.valid,
            }))?;
            return Ok(cert.valid);
        }
        Command::Mollify {
            measure,
            p,
            eps,
            xs,
            norm,
            mc_samples,
            seed,
        } => {
            let mu = load_measure(&measure)?;
            let norm = NormSpec::parse(&norm)?;
            let spec = characterization::make_mollifier(mu.dim(), p, norm, eps)?;
            let h = handle(&mu, mc_samples, seed)?;
            println!("x,density_estimate");
            for x in parse_points(&xs, mu.dim())? {
                let v = characterization::mollified_density(&h, &spec, &x)?;
                let label: Vec<String> = x.iter().map(|c| c.to_string()).collect();
                println!("\"{}\",{v}", label.join(","));
            }
        }
        Command::CdfExtract {
            measure,
            xs,
            h,
            mc_samples,
            seed,
        } => {
            let mu = load_measure(&measure)?;
            let handle = handle(&mu, mc_samples, seed)?;
            println!("x,F_estimate");
            for x in parse_floats(&xs)? {
                let est = characterization::cdf_from_e11(&handle, x, h)?;
                if est.clamped {
                    eprintln!("note: estimate at x={x} clamped from {} to {}", est.raw, est.value);
                }
                println!("{x},{}", est.value);
            }
        }
        Command::Counterexample {
            n_points,
            n_max,
            pitch,
            half_width,
            seed,
            out,
        } => {
            let config = ExperimentConfig::new(ExperimentKind::Counterexample, Seed(seed), out)
                .with("N", n_points)
                .with("n_max", n_max)
                .with("pitch", pitch)
                .with("half_width", half_width);
            return run_experiment(&config);
        }
        Command::GridLaw {
            family,
            ns,
            iters,
            pool_size,
            seed,
            out,
        } => {
            let mut config = ExperimentConfig::new(ExperimentKind::GridLaw, Seed(seed), out)
                .with("family", family)
                .with("Ns", parse_usizes(&ns)?);
            if let Some(i) = iters {
                config = config.with("lloyd_iters", i);
            }
            if let Some(s) = pool_size {
                config = config.with("pool_size", s);
            }
            return run_experiment(&config);
        }
        Command::Equivalence {
            family,
            n_points,
            p,
            ns,
            seed,
            out,
        } => {
            let mut config = ExperimentConfig::new(ExperimentKind::Equivalence, Seed(seed), out)
                .with("family", family)
                .with("N", n_points)
                .with("p", p);
            if let Some(ns) = ns {
                config = config.with("ns", parse_usizes(&ns)?);
            }
            return run_experiment(&config);
        }
        Command::Run { config } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let config: ExperimentConfig = serde_json::from_str(&text)?;
            return run_experiment(&config);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
