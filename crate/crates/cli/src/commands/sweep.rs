//! `caliper sweep`: capacity curves, alert-fatigue curves, and the
//! incremental-gain heatmap, as CSV and/or SVG.

use crate::config::{capacity, RunConfig};
use crate::{Ctx, Failure};
use caliper_core::plot::{emit_heatmap, emit_line_plot};
use caliper_core::sim::{SimConfig, Strategy};
use caliper_core::sweep::{
    emit_csv, incremental_gain_heatmap, sweep_alert_fatigue, sweep_capacity, AxisGrid, SweepResult,
    SweepSpec,
};

pub fn run(ctx: &Ctx) -> anyhow::Result<()> {
    let config = &ctx.config;
    let section = config
        .sweep
        .as_ref()
        .ok_or_else(|| Failure::validation("config has no [sweep] section"))?;
    let utilities = config.utilities().map_err(|e| Failure::validation(format!("{e:#}")))?;
    let cohort = config
        .cohort_spec(&ctx.base_dir)
        .map_err(|e| Failure::validation(format!("{e:#}")))?;
    let replicates = ctx.replicates_override.unwrap_or(section.replicates);

    let base_spec = |spec_cap: u32, nurse_strategy: Strategy, cutoff: f64| SweepSpec {
        cohort: cohort.clone(),
        utilities: utilities.clone(),
        nurse_base: SimConfig {
            strategy: nurse_strategy,
            nurse_capacity: 0,
            specialist_capacity: spec_cap,
            seed: 0,
        },
        doctor_base: SimConfig {
            strategy: Strategy::DoctorAlert { cutoff, alert_read_prob: 0.0 },
            nurse_capacity: 0,
            specialist_capacity: spec_cap,
            seed: 0,
        },
        replicates,
        root_seed: config.root_seed,
        axis1: AxisGrid::new("nurse_capacity", vec![0.0]),
        axis2: None,
    };

    let mut ran_any = false;

    if let Some(cap) = &section.capacity {
        let spec_cap = capacity("sweep.capacity.specialist_capacity", cap.specialist_capacity)
            .map_err(|e| Failure::validation(format!("{e:#}")))?;
        let strategy = match cap.cutoff {
            None => Strategy::Ranked,
            Some(cutoff) => Strategy::Thresholded { cutoff },
        };
        let mut spec = base_spec(spec_cap, strategy, cap.cutoff.unwrap_or(0.5));
        spec.axis1 = AxisGrid::new("nurse_capacity", grid_of(config, &cap.nurse_capacities)?);
        let result = sweep_capacity(&spec).map_err(|e| Failure::runtime(e.to_string()))?;
        write_result(ctx, "sweep_capacity", &result)?;
        if ctx.emit_plot() {
            let mut buf = Vec::new();
            emit_line_plot(&[("model", &result)], &mut buf)
                .map_err(|e| Failure::io(e.to_string()))?;
            let path = ctx
                .out
                .write("sweep_capacity.svg", &buf)
                .map_err(|e| Failure::io(format!("{e:#}")))?;
            println!("wrote {}", path.display());
        }
        ran_any = true;
    }

    if let Some(fatigue) = &section.alert_fatigue {
        let spec_cap =
            capacity("sweep.alert_fatigue.specialist_capacity", fatigue.specialist_capacity)
                .map_err(|e| Failure::validation(format!("{e:#}")))?;
        let mut spec = base_spec(spec_cap, Strategy::Ranked, fatigue.cutoff);
        spec.axis1 = AxisGrid::new("alert_read_prob", fatigue.read_probs.clone());
        let result = sweep_alert_fatigue(&spec).map_err(|e| Failure::runtime(e.to_string()))?;
        write_result(ctx, "sweep_alert_fatigue_model", &result.model)?;
        write_result(ctx, "sweep_alert_fatigue_treat_all", &result.treat_all)?;
        write_result(ctx, "sweep_alert_fatigue_difference", &result.difference)?;
        if ctx.emit_plot() {
            let mut buf = Vec::new();
            emit_line_plot(
                &[("model", &result.model), ("treat all", &result.treat_all)],
                &mut buf,
            )
            .map_err(|e| Failure::io(e.to_string()))?;
            let path = ctx
                .out
                .write("sweep_alert_fatigue.svg", &buf)
                .map_err(|e| Failure::io(format!("{e:#}")))?;
            println!("wrote {}", path.display());
        }
        ran_any = true;
    }

    if let Some(heatmap) = &section.heatmap {
        let spec_cap = capacity("sweep.heatmap.specialist_capacity", heatmap.specialist_capacity)
            .map_err(|e| Failure::validation(format!("{e:#}")))?;
        let mut spec = base_spec(spec_cap, Strategy::Ranked, heatmap.cutoff);
        spec.axis1 = AxisGrid::new("nurse_capacity", grid_of(config, &heatmap.nurse_capacities)?);
        spec.axis2 = Some(AxisGrid::new("alert_read_prob", heatmap.read_probs.clone()));
        let result =
            incremental_gain_heatmap(&spec).map_err(|e| Failure::runtime(e.to_string()))?;
        write_result(ctx, "sweep_heatmap", &result)?;
        if ctx.emit_plot() {
            let mut buf = Vec::new();
            emit_heatmap(&result, &mut buf).map_err(|e| Failure::io(e.to_string()))?;
            let path = ctx
                .out
                .write("sweep_heatmap.svg", &buf)
                .map_err(|e| Failure::io(format!("{e:#}")))?;
            println!("wrote {}", path.display());
        }
        ran_any = true;
    }

    if !ran_any {
        return Err(Failure::validation(
            "sweep section configures none of capacity, alert_fatigue, heatmap",
        ));
    }
    Ok(())
}

fn grid_of(_config: &RunConfig, values: &[i64]) -> anyhow::Result<Vec<f64>> {
    values
        .iter()
        .map(|&v| {
            if v < 0 {
                Err(Failure::validation(format!("capacity grid value {v} is negative")))
            } else {
                Ok(v as f64)
            }
        })
        .collect()
}

fn write_result(ctx: &Ctx, name: &str, result: &SweepResult) -> anyhow::Result<()> {
    if !ctx.emit_csv() {
        return Ok(());
    }
    let mut buf = Vec::new();
    emit_csv(result, &mut buf).map_err(|e| Failure::io(e.to_string()))?;
    let path = ctx
        .out
        .write(&format!("{name}.csv"), &buf)
        .map_err(|e| Failure::io(format!("{e:#}")))?;
    println!("wrote {}", path.display());
    Ok(())
}
