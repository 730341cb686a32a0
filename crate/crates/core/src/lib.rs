//! Stage-game regret analysis, exact differential-privacy verification of
//! finite monitoring structures, and repeated-game equilibrium bound
//! certification.
//!
//! The crate is organized around five layers:
//!
//! - [`game`]: stage games (explicit tensors or anonymous population rules),
//!   mixed profiles, Nash and correlated-equilibrium regrets.
//! - [`signal`]: finite public/private monitoring structures, support and
//!   payoff-consistency checks.
//! - [`privacy`]: the exact `(eps, gamma)` verifier, Gaussian calibration,
//!   composition, subsampling, post-processing, and privacy curves.
//! - [`repeated`], [`conditional`], [`beliefs`]: strategy automata,
//!   continuation values, one-shot deviation analysis, and the per-period
//!   regret bound checks for public and private monitoring.
//! - [`suite`]: the noisy-histogram, noisy-Cournot, and noisy-counterfactual
//!   instance families with their sensitivity calculators.
//!
//! Everything is a pure function of immutable inputs; batch sweeps parallelize
//! per instance with deterministic output ordering.

pub mod automaton;
pub mod beliefs;
pub mod conditional;
pub mod error;
pub mod game;
pub mod instances;
pub(crate) mod joint;
pub mod numeric;
pub mod privacy;
pub mod repeated;
pub mod schema;
pub mod signal;
pub mod suite;

pub use error::{Error, Result};
