//! Cross-chain arbitrage toolkit.
//!
//! Two halves share this crate:
//!
//! * a profit-cost **model** for choosing between inventory-based and
//!   bridge-based cross-chain arbitrage, with closed forms in [`model`]
//!   and Monte Carlo estimators in [`stochastic`] that validate them;
//! * a **detection pipeline** for executed cross-chain arbitrages:
//!   normalized chain data ([`chaindata`]), heuristic matching and
//!   de-duplication ([`detector`]), bridge classification
//!   ([`bridgelink`]), and USD accounting plus summary statistics
//!   ([`accounting`]).
//!
//! [`scenario`] generates synthetic multi-chain event streams with
//! ground-truth labels so the pipeline can be evaluated end to end
//! without proprietary chain data.

pub mod accounting;
pub mod bridgelink;
pub mod chaindata;
pub mod detector;
pub mod model;
mod numeric;
pub mod scenario;
pub mod stochastic;

pub use model::ModelParams;
