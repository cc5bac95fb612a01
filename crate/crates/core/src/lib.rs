//! Kelly-optimal trend followers interacting with power-law price impact.
//!
//! * [`kelly`]: optimal leverage and self-financing bookkeeping under a
//!   geometric Brownian belief.
//! * [`levy`]: the same leverage for geometric Lévy models.
//! * [`impact`]: the rebalance/impact feedback map and trajectories.
//! * [`phase`]: phase classification and `(leverage, gamma)` sweeps.
//! * [`options`]: calls whose replicating weights equal the Kelly weights.
//! * [`strategy`]: phase detection and the resulting trading advice.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fmt;
pub mod impact;
pub mod kelly;
pub mod levy;
pub mod normal;
pub mod options;
pub mod phase;
pub mod roots;
pub mod strategy;

pub use error::{Error, Result};
pub use impact::{simulate, FeedbackMap, HaltReason, ImpactLaw, Trajectory, TrajectoryPoint};
pub use kelly::{MarketParams, PortfolioState};
pub use levy::LevyModel;
pub use phase::{classify, sweep, PhaseGrid, PhaseLabel};
pub use strategy::{advise, detect_phase, Action, Detection, StrategyAdvice};
