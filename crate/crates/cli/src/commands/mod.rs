pub mod finance;
pub mod monitor;
pub mod report;
pub mod simulate;
pub mod sweep;
pub mod validate;

use crate::config::RunConfig;
use crate::Failure;
use caliper_core::sim::Strategy;
use caliper_core::workflow::{doctor_workflow, nurse_workflow, WorkflowGraph};

/// Graph for one arm: the custom graph when configured, otherwise the
/// built-in workflow matching the strategy.
pub fn graph_for(
    config: &RunConfig,
    strategy: &Strategy,
    nurse_capacity: u32,
    specialist_capacity: u32,
) -> anyhow::Result<WorkflowGraph> {
    if let Some(custom) = config.custom_graph().map_err(|e| Failure::validation(format!("{e:#}")))? {
        return Ok(custom);
    }
    Ok(match strategy {
        Strategy::DoctorAlert { .. } => doctor_workflow(specialist_capacity),
        Strategy::Thresholded { .. } => nurse_workflow(nurse_capacity, specialist_capacity, false),
        // Ranked and the reference policies run on the ranked nurse graph;
        // the reference policies bypass it anyway.
        _ => nurse_workflow(nurse_capacity, specialist_capacity, true),
    })
}
