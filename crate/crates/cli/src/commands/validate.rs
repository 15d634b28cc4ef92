//! `caliper validate`: structural validation of the workflow graph(s) and
//! utility table, with one report per graph.

use crate::{Ctx, Failure};
use caliper_core::workflow::{doctor_workflow, nurse_workflow, validate_workflow};

pub fn run(ctx: &Ctx) -> anyhow::Result<()> {
    let utilities = ctx.config.utilities().map_err(|e| Failure::validation(format!("{e:#}")))?;

    let graphs = match ctx.config.custom_graph().map_err(|e| Failure::validation(format!("{e:#}")))? {
        Some(custom) => vec![("custom".to_string(), custom)],
        None => {
            let (nurse_cap, specialist_cap) = match ctx.config.sim_base() {
                Ok(base) => (base.nurse_capacity, base.specialist_capacity),
                Err(_) => (1, 1), // capacities do not affect structural validity
            };
            vec![
                ("nurse_ranked".to_string(), nurse_workflow(nurse_cap, specialist_cap, true)),
                ("nurse_thresholded".to_string(), nurse_workflow(nurse_cap, specialist_cap, false)),
                ("doctor".to_string(), doctor_workflow(specialist_cap)),
            ]
        }
    };

    let mut all_valid = true;
    for (name, graph) in &graphs {
        let report = validate_workflow(graph, &utilities);
        println!("workflow '{name}':");
        print!("{report}");
        all_valid &= report.is_valid();
    }
    if !all_valid {
        return Err(Failure::validation("workflow validation failed"));
    }
    Ok(())
}
