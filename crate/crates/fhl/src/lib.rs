//! Numerical laboratory for the fractional Hartree equation on bounded domains.

// `!(a < b)` is the idiom used throughout to reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod bubbles;
pub mod constants;
pub mod diagnostics;
pub mod domain;
pub mod error;
pub mod model;
pub mod quadrature;
pub mod riesz;
pub mod scalar;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Params = model::Params<f64>;
pub type Exponents = model::Exponents<f64>;
pub type DomainSpec = domain::DomainSpec<f64>;
pub type GridField = domain::GridField<f64>;
pub type Bubble = bubbles::Bubble<f64>;
pub type RieszWeights = riesz::RieszWeights<f64>;
pub type ModeSet = spectral::ModeSet<f64>;
pub type EigenBasis = spectral::EigenBasis<f64>;
pub type SpectralField = spectral::SpectralField<f64>;
pub type SolveOptions = solver::SolveOptions<f64>;
pub type SolutionRecord = solver::SolutionRecord<f64>;
pub type ContinuationReport = diagnostics::ContinuationReport<f64>;

pub use model::Regime;
