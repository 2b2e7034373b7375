//! Bandit algorithms that learn which ranked list to show when every user
//! has a hidden topic and clicks the first relevant item (a cascade click
//! model partitioned by topic).
//!
//! - [`model`]: instances, exact rewards and success rates, the click simulator.
//! - [`oracle`]: greedy and brute-force optimal lists, regret-bound constants.
//! - [`index`]: Bernoulli KL divergence, exploration schedule, KL-UCB indices.
//! - [`policies`]: LDR, PIE*, RBA and static lists behind one [`Policy`] trait.
//! - [`harness`]: seeded episodes, batches, aggregation and instance generators.
//! - [`ingest`]: fitting an instance from a click log.
//! - [`report`]: SVG regret curves.

pub mod error;
pub mod harness;
pub mod index;
pub mod ingest;
pub mod model;
pub mod oracle;
pub mod policies;
pub mod report;

pub use error::{Error, Result};
pub use harness::{
    run_batch, run_episode, toy_instance, BatchResult, ExperimentConfig, InstanceSource, RegretMode, RegretTrajectory,
};
pub use model::{validate_instance, ClickFeedback, Instance, InstanceSpec, RankedList};
pub use oracle::{
    best_list_with_item_first, brute_force_optimal, greedy_optimal_list, ldr_upper_bound_constant, min_confusion_kl,
    regret_lower_bound, BoundReport, Confusion,
};
pub use policies::{ActionTag, ItemLayout, Ldr, LdrVariant, PieStar, Policy, PolicySpec, Rba, StaticList};
