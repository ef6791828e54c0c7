//! Top-k contextual bandits with inverse gap weighting, a tree-based reduction for very large arm
//! sets, and a replay harness that turns multi-label datasets into bandit streams.
//!
//! The main entry points are [`policy::Policy`] for the online loop,
//! [`hierarchy::build_hierarchy`] for the label tree and [`harness::run_experiment`] for
//! simulated runs.

pub mod error;
mod format;
pub mod harness;
pub mod hierarchy;
pub mod oracle;
pub mod policy;
pub mod rng;
pub mod sampling;
pub mod sparse;

pub use error::{Error, Result};
pub use hierarchy::{ArmId, Hierarchy, LabelTree, NodeId, RoutingBank};
pub use oracle::{BanditLog, RegressorBank};
pub use policy::{Mode, Policy, PolicyConfig};
pub use rng::Rng;
pub use sampling::{GammaSchedule, StrategyConfig, StrategyKind};
pub use sparse::{AugmentedWeights, SparseVector};
