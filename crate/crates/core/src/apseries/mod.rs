//! Truncated almost periodic series.
//!
//! A series lives on a [`Spectrum`]: a frequency window, a union-closed family of
//! index sets, and every multi-index of bounded order whose support is covered.
//! [`APSeries`] depends on `x` only; [`APSeries2`] carries a Chebyshev expansion in `y`
//! for every mode.

mod basis;
pub mod chebyshev;
mod io;
mod projection;
mod series;
mod series2;
mod spectrum;

pub use basis::{compensated_sum, weight, FrequencyBasis, MultiIndex, SpatialStructure};
pub use io::{read_series, read_series2, write_series, write_series2};
pub use projection::{torus_samples, Projector};
pub use series::{APSeries, ModeSeries, StripParams, DROP_TOL};
pub use series2::{APSeries2, YDomain, DEFAULT_CHEB_DEGREE};
pub use spectrum::{admissible_indices, Spectrum, DEFAULT_KMAX};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("invalid frequency basis: {0}")]
    InvalidBasis(String),
    #[error("invalid spatial structure: {0}")]
    InvalidStructure(String),
    #[error("no structure set covers the support of k = {0}")]
    NoCoveringSet(String),
    #[error("mode k = {0} is not retained by the spectrum")]
    ModeNotRetained(String),
    #[error("exact integer relation among frequencies at k = {0}")]
    ExactRelation(String),
    #[error("|Im θ| = {im} exceeds strip half-width {r}")]
    DomainExceeded { im: f64, r: f64 },
    #[error("series live on different spectra or y-domains")]
    BasisMismatch,
    #[error("projection residual {residual:e} exceeds tolerance {tol:e}")]
    ProjectionResidualExceeded { residual: f64, tol: f64 },
    #[error("time map not monotone: β + f' reaches {min_slope:e}")]
    NotMonotone { min_slope: f64 },
    #[error("invalid strip parameters: {0}")]
    InvalidStrip(String),
    #[error("parse error: {0}")]
    Parse(String),
}
