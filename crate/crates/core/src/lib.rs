//! Fair-volatility analytics.
//!
//! The crate links the pointwise standard deviation of a multifractional
//! process with random exponent (MPRE) to its Hurst-Holder exponent and uses
//! that link to benchmark observed volatility against the level expected
//! under an efficient (semimartingale) market.
//!
//! * [`specfun`]: closed-form constants `V_H`, `A(H)`, the fBm/fGn covariance
//!   kernels and quadrature checks of the integral identities behind them.
//! * [`simulate`]: exact fGn/fBm generators, an MPRE discretisation and the
//!   illustrative IID/INID/AR(1)/concatenated-fGn panels.
//! * [`estimate`]: rolling Hurst-Holder estimation, the efficiency band,
//!   `nu(t)` recovery and the historical/theoretical/fair volatility triple.
//! * [`stats`]: descriptive statistics, ACF, ADF test, efficiency metrics.
//! * [`pipeline`]: CSV ingestion, end-to-end analysis and report export.
//! * [`validation`]: Monte-Carlo and quadrature validation suites.

pub mod error;
pub mod estimate;
pub mod pipeline;
pub mod quadrature;
pub mod simulate;
pub mod specfun;
pub mod stats;
pub mod validation;

mod numeric;

pub use error::{Error, Result};
pub use estimate::{HurstSeries, Regime, RollingConfig, ScaleNormalization, VolatilitySeries};
pub use pipeline::{AnalysisReport, PricePath};
pub use simulate::{PathSample, ProcessSpec, SimulationSpec};
pub use specfun::{Hurst, VhVariant};
