//! Second-order stochastic models of mispricing.
//!
//! * [`sds`]: vector fields, test functions and the diffusion operator.
//! * [`integrate`]: SDE and second-order integrators with reproducible noise.
//! * [`oscillator`]: a single damped, noisy oscillator in Cartesian and
//!   polar form, with its stationary radial density.
//! * [`market`]: `n` oscillators coupled by `sum x_i = 0`, their normal
//!   modes, the inverse mode problem and sector reduction.
//! * [`stochastic`]: the market driven mode by mode by polar noise.
//! * [`reduce`]: numerical projectability checks.
//! * [`stats`]: KS statistics, periodograms, batch means.
//! * [`ingest`]: price CSVs, mispricing and AR(2) fits.

// `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod ingest;
pub mod integrate;
pub mod linalg;
pub mod market;
pub mod oscillator;
pub mod quad;
pub mod reduce;
pub mod sds;
pub mod stats;
pub mod stochastic;

pub use error::{Error, Result};
pub use integrate::{ensemble, EnergyRecord, IntegratorConfig, Method, NoiseStream, Trajectory};
pub use market::{ConstrainedState, MarketSpec, NormalModeDecomposition};
pub use oscillator::{DampedOscillatorModel, DampingSpec, PotentialSpec, RadialConvention};
pub use reduce::{ProjectabilityReport, ProjectionSetup, Verdict};
pub use sds::{FdScheme, ScalarField, VectorField, VectorFieldSet};
pub use stochastic::{ModeParams, StochasticMarketModel};
