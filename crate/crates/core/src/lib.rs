//! Estimates the achievable benefit of AI-model-guided clinical and operational
//! workflows before deployment, and the signals needed to watch them afterwards.
//!
//! The crate has four pillars:
//!
//! - [`workflow`] / [`cohort`] / [`sim`]: a declarative state-machine model of a
//!   screening workflow, synthetic patient cohorts scored by a classifier of
//!   configurable discrimination, and a seeded day-by-day simulator that enforces
//!   staffing capacities and alert fatigue. Utility is scored against Treat None /
//!   Treat All / Optimistic reference policies.
//! - [`sweep`]: parameter grids over the simulator (capacity curves, alert-fatigue
//!   curves, nurse-vs-doctor incremental-gain heatmaps) with per-cell seed
//!   derivation so results are independent of execution order and thread count.
//! - [`finance`]: multi-year margin projection with one-at-a-time sensitivity
//!   ranking, plus Little's-Law throughput arithmetic.
//! - [`monitor`]: reference baselines, >1 sigma drift triggers, label-lag-aware
//!   time-stratified sensitivity, adherence metrics, and trial-arm allocation.
//!
//! All stochastic paths are driven by one root seed with per-(day, node, patient)
//! substreams, so every result is reproducible bit-for-bit regardless of
//! scheduling. The `parallel` feature (on by default) runs sweep cells on a rayon
//! pool; disabling it falls back to a sequential executor with identical output.

pub mod cohort;
pub mod finance;
pub mod monitor;
pub mod plot;
pub mod seed;
pub mod sim;
pub mod sweep;
pub mod workflow;

pub use cohort::{auroc, calibrate_separation, generate_cohort, ClassifierSpec, CohortSpec, Patient};
pub use sim::{relative_utility, simulate, SimConfig, SimResult, Strategy};
pub use workflow::{DiseaseState, Outcome, UtilityTable, WorkflowGraph};
