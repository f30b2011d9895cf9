// SPDX-License-Identifier: MIT
//! Identification and estimation of direct causal effects in structural
//! vector autoregressive (SVAR) processes with latent components.
//!
//! The crate is organised along the pipeline from a lag structure to an
//! estimated effect:
//!
//! * [`graph`]: the lag structure of a process and its time-shift-invariant
//!   full time graph (parents, descendants, residue classes, forbidden
//!   ancestors).
//! * [`svar`]: parameters, stability, simulation, exact and sample
//!   autocovariances, trek sums and parent decompositions.
//! * [`identify`]: construction and checking of identification certificates
//!   and the resulting estimator specifications (sets `R` and `C`).
//! * [`estimate`]: solving the covariance system `Γ_{R,C} · v = Γ_{R,Y_t}`
//!   from exact or sample covariances, plus a moving-block bootstrap.
//! * [`experiments`]: reproducible Monte Carlo studies.
//!
//! Numerical code is generic over the scalar type through [`scalar::Real`]
//! (implemented for `f32` and `f64`); the aliases below name the common
//! concrete instantiations.
//!
//! ```
//! use svarid::graph::{LagStructure, SeriesId, VertexSet};
//! use svarid::identify::EstimatorSpec;
//! use svarid::estimate::{build_system, solve_effects, Provenance};
//! use svarid::svar::exact_autocov;
//! use svarid::SvarParamsF64;
//! use nalgebra::DVector;
//!
//! let (u, y) = (SeriesId::Latent(0), SeriesId::Y);
//! let g = LagStructure::new(1, 1, [(u, u, vec![1]), (y, y, vec![3]), (y, u, vec![1])]).unwrap();
//! let params = SvarParamsF64::from_edge_values(g.clone(), &[0.6, 0.8, 0.4], DVector::from_element(2, 1.0)).unwrap();
//! let pa: VertexSet = [y.at(-3)].into_iter().collect();
//! let spec = EstimatorSpec::from_sets(
//!     &g,
//!     y.at(0),
//!     vec![y.at(-3), y.at(-2), y.at(-4)],
//!     vec![y.at(-3), y.at(4), y.at(1)],
//!     &pa,
//!     "doc",
//! )
//! .unwrap();
//! let table = exact_autocov(&params, spec.max_lag_span() as usize).unwrap();
//! let est = solve_effects(&build_system(&table, &spec).unwrap(), Provenance::Exact).unwrap();
//! assert!((est.coefficient(y, 3).unwrap() - 0.4).abs() < 1e-10);
//! ```

pub mod error;
pub mod estimate;
pub mod experiments;
pub mod graph;
pub mod identify;
pub mod scalar;
pub mod svar;

pub use error::{Error, Result};
pub use scalar::Real;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Parameters in double precision.
pub type SvarParamsF64 = svar::SvarParams<f64>;
/// Parameters in single precision.
pub type SvarParamsF32 = svar::SvarParams<f32>;
/// Observed or simulated series in double precision.
pub type SeriesDataF64 = svar::SeriesData<f64>;
/// Observed or simulated series in single precision.
pub type SeriesDataF32 = svar::SeriesData<f32>;
/// Autocovariance table in double precision.
pub type CovarianceTableF64 = svar::CovarianceTable<f64>;
/// Autocovariance table in single precision.
pub type CovarianceTableF32 = svar::CovarianceTable<f32>;
/// Effect estimate in double precision.
pub type EffectEstimateF64 = estimate::EffectEstimate<f64>;
/// Effect estimate in single precision.
pub type EffectEstimateF32 = estimate::EffectEstimate<f32>;
