//! Quantization error functions of probability measures and the tools that
//! use them to tell measures apart: exact and Monte Carlo evaluation of
//! `e_{N,p}(μ, ·)`, Lloyd grids, Wasserstein and quantization-based
//! distances, Voronoi and sphere-covering geometry, reconstruction of
//! densities and distribution functions from error functions, and the
//! experiment runners behind the `quantchar` command line.

pub mod assignment;
pub mod characterization;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod measures;
pub mod metrics;
pub mod optimize;
pub mod quadrature;
pub mod quanterror;
pub mod special;

pub use error::{Error, Result};
pub use geometry::{Grid, NormSpec};
pub use measures::{Analytic1D, DiscreteMeasure, Measure, MeasureSpec, Point, SampledMeasure, Seed};
