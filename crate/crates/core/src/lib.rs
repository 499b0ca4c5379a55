//! Security evaluation toolkit for subcarrier-wave quantum key
//! distribution systems.
//!
//! The crate bundles the quantitative pieces of a certification-style
//! evaluation:
//!
//! * [`scw`]: photon statistics of the subcarrier scheme, carrier and
//!   sideband mode occupancies, detection probabilities.
//! * [`keyrate`]: binary entropy, the collective-attack key fraction,
//!   and composable finite-block key lengths.
//! * [`attack`]: feasibility analyses for concrete attack strategies
//!   (discrimination filters, detector blinding, faked states, photon
//!   splitting, reference manipulation), each with a Monte-Carlo sampler
//!   and an exact enumeration of the same model.
//! * [`linkbudget`]: optical loss budgets of the terminals, probe-light
//!   injection requirements, laser-damage what-ifs.
//! * [`registry`]: a persistent vulnerability registry with
//!   countermeasure hardness tracking and certification verdicts.
//!
//! Every numeric routine validates its domain and returns a
//! [`DomainError`] instead of propagating NaN. Monte-Carlo samplers are
//! deterministic: a run is fully specified by its seed, and per-round
//! generator streams make results independent of evaluation order.

pub mod attack;
pub mod error;
pub mod keyrate;
pub mod linkbudget;
pub mod registry;
pub mod scw;

pub use attack::{AnalyticCompanion, AttackOutcome};
pub use error::DomainError;
pub use keyrate::{
    AsymptoticRate, EpsilonBudget, EpsilonTotals, FiniteKeyInputs, FiniteKeyReport, RateInputs,
};
pub use linkbudget::{ChainError, ComponentChain, ComponentSpec};
pub use registry::{Hardness, Layer, Registry, Risk, Verdict};
pub use scw::{BetaPrimeMap, ModeOccupancy, SystemParams};
