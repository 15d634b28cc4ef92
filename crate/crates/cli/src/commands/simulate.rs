//! `caliper simulate`: every configured arm plus the three reference
//! policies, written as one CSV row per arm.

use crate::{Ctx, Failure};
use caliper_core::cohort::generate_cohort;
use caliper_core::seed::derive;
use caliper_core::sim::{simulate_with_baselines, SimConfig, Strategy};
use caliper_core::workflow::{DiseaseState, Outcome};
use crate::output::{num, opt_num};

const ARM_SEED_TAG: u64 = 0x73696d; // per-arm seed derivation

pub fn run(ctx: &Ctx) -> anyhow::Result<()> {
    let config = &ctx.config;
    let utilities = config.utilities().map_err(|e| Failure::validation(format!("{e:#}")))?;
    let cohort_spec =
        config.cohort_spec(&ctx.base_dir).map_err(|e| Failure::validation(format!("{e:#}")))?;
    let base = config.sim_base().map_err(|e| Failure::validation(format!("{e:#}")))?;
    let section = config.simulation.as_ref().expect("sim_base checked the section");

    let cohort = generate_cohort(&cohort_spec).map_err(|e| Failure::runtime(e.to_string()))?;

    let mut arms: Vec<(String, Strategy)> = section
        .arms
        .iter()
        .map(|arm| (arm.name.clone(), arm.strategy.to_core()))
        .collect();
    // Reference policies always run alongside the configured arms.
    for (name, strategy) in [
        ("treat_none", Strategy::TreatNone),
        ("treat_all", Strategy::TreatAll),
        ("optimistic", Strategy::Optimistic),
    ] {
        if !arms.iter().any(|(n, _)| n == name) {
            arms.push((name.to_string(), strategy));
        }
    }

    let mut csv = String::from(
        "arm,mean_utility,relative_utility_pct,patients_seen_by_specialist,\
         nurse_utilization,specialist_utilization",
    );
    for state in DiseaseState::ALL {
        for outcome in Outcome::ALL {
            csv.push_str(&format!(",count_{state}_{outcome}"));
        }
    }
    csv.push('\n');

    for (index, (name, strategy)) in arms.iter().enumerate() {
        let graph = super::graph_for(config, strategy, base.nurse_capacity, base.specialist_capacity)?;
        let sim_config = SimConfig {
            strategy: strategy.clone(),
            seed: derive(config.root_seed, &[ARM_SEED_TAG, index as u64]),
            ..base.clone()
        };
        let result = simulate_with_baselines(&graph, &utilities, &cohort, &sim_config)
            .map_err(|e| Failure::runtime(e.to_string()))?;

        csv.push_str(&format!(
            "{name},{},{},{},{},{}",
            num(result.mean_utility),
            opt_num(result.relative_utility),
            result.patients_seen_by_specialist,
            opt_num(result.resource_utilization.get("nurse").copied()),
            opt_num(result.resource_utilization.get("specialist").copied()),
        ));
        for state in DiseaseState::ALL {
            for outcome in Outcome::ALL {
                let count = result.outcome_counts.get(&(state, outcome)).copied().unwrap_or(0);
                csv.push_str(&format!(",{count}"));
            }
        }
        csv.push('\n');
        println!(
            "arm {name}: mean utility {:.6}, relative utility {}%",
            result.mean_utility,
            result
                .relative_utility
                .map(|r| format!("{r:.2}"))
                .unwrap_or_else(|| "n/a".into())
        );
    }

    let path = ctx
        .out
        .write("results.csv", csv.as_bytes())
        .map_err(|e| Failure::io(format!("{e:#}")))?;
    println!("wrote {}", path.display());
    Ok(())
}
