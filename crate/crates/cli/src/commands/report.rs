//! `caliper report`: one structured summary document assembled from whatever
//! artifacts previous commands left in the output directory. Sections for
//! artifacts that were not produced carry an explicit "not run" marker.

use crate::{Ctx, Failure};
use caliper_core::sweep::{parse_csv, saturation_point};
use std::fmt::Write as _;

const NOT_RUN: &str = "_not run: no artifact found._";

pub fn run(ctx: &Ctx) -> anyhow::Result<()> {
    let mut doc = String::new();
    let meta = &ctx.config.meta;
    writeln!(doc, "# Assessment Summary").unwrap();
    writeln!(doc).unwrap();
    writeln!(doc, "## Use Case").unwrap();
    writeln!(doc).unwrap();
    if meta.name.is_empty() && meta.description.is_empty() {
        writeln!(doc, "_no use-case metadata configured._").unwrap();
    } else {
        writeln!(doc, "**{}**", meta.name).unwrap();
        writeln!(doc).unwrap();
        writeln!(doc, "{}", meta.description).unwrap();
    }
    writeln!(doc).unwrap();

    usefulness_section(ctx, &mut doc);
    finance_section(ctx, &mut doc);
    sensitivity_section(ctx, &mut doc);
    monitoring_section(ctx, &mut doc);

    let path = ctx
        .out
        .write("report.md", doc.as_bytes())
        .map_err(|e| Failure::io(format!("{e:#}")))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn read(ctx: &Ctx, name: &str) -> Option<String> {
    std::fs::read_to_string(ctx.out.path(name)).ok()
}

fn usefulness_section(ctx: &Ctx, doc: &mut String) {
    writeln!(doc, "## Usefulness Estimates by Workflow Simulation").unwrap();
    writeln!(doc).unwrap();

    match read(ctx, "results.csv") {
        None => writeln!(doc, "{NOT_RUN}").unwrap(),
        Some(text) => {
            writeln!(doc, "| arm | mean utility | relative utility (%) | seen by specialist |").unwrap();
            writeln!(doc, "|---|---|---|---|").unwrap();
            for line in text.lines().skip(1) {
                let f: Vec<&str> = line.split(',').collect();
                if f.len() < 4 {
                    continue;
                }
                let rel = if f[2].is_empty() { "n/a" } else { f[2] };
                writeln!(doc, "| {} | {} | {} | {} |", f[0], f[1], rel, f[3]).unwrap();
            }
        }
    }
    writeln!(doc).unwrap();

    match read(ctx, "sweep_capacity.csv").and_then(|t| parse_csv(&t, "nurse_capacity", "").ok()) {
        None => writeln!(doc, "Capacity sweep: {NOT_RUN}").unwrap(),
        Some(result) => {
            let last = result.cells.last().map(|c| c.mean_pct).unwrap_or(0.0);
            match saturation_point(&result, 1.0) {
                Some(capacity) => writeln!(
                    doc,
                    "Capacity sweep: relative utility saturates at nurse capacity {capacity} \
                     (within 1 percentage point of the final value {last:.2}%)."
                )
                .unwrap(),
                None => writeln!(
                    doc,
                    "Capacity sweep: no saturation within the swept grid (final value {last:.2}%)."
                )
                .unwrap(),
            }
        }
    }

    match read(ctx, "sweep_alert_fatigue_difference.csv")
        .and_then(|t| parse_csv(&t, "alert_read_prob", "").ok())
    {
        None => writeln!(doc, "Alert-fatigue sweep: {NOT_RUN}").unwrap(),
        Some(diff) => {
            let crossing = diff
                .axis1
                .values
                .iter()
                .zip(&diff.cells)
                .find(|(_, c)| c.mean_pct > 2.0 * c.stderr_pct && c.mean_pct > 0.0);
            match crossing {
                Some((p, _)) => writeln!(
                    doc,
                    "Alert-fatigue sweep: the model overtakes Treat All (by more than two \
                     standard errors) from read probability {p}."
                )
                .unwrap(),
                None => writeln!(
                    doc,
                    "Alert-fatigue sweep: the model never exceeds Treat All by more than two \
                     standard errors on the swept grid."
                )
                .unwrap(),
            }
        }
    }

    match read(ctx, "sweep_heatmap.csv") {
        None => writeln!(doc, "Incremental-gain heatmap: {NOT_RUN}").unwrap(),
        Some(text) => {
            let rows = text.lines().count().saturating_sub(1);
            writeln!(
                doc,
                "Incremental-gain heatmap: {rows} cells written (positive = nurse-driven \
                 workflow preferred)."
            )
            .unwrap();
        }
    }
    writeln!(doc).unwrap();
}

fn finance_section(ctx: &Ctx, doc: &mut String) {
    writeln!(doc, "## Financial Projections").unwrap();
    writeln!(doc).unwrap();
    match read(ctx, "cashflow.csv") {
        None => writeln!(doc, "{NOT_RUN}").unwrap(),
        Some(text) => {
            let rows: Vec<Vec<String>> = text
                .lines()
                .skip(1)
                .map(|l| l.split(',').map(str::to_string).collect())
                .filter(|f: &Vec<String>| f.len() == 4)
                .collect();
            let header: Vec<String> = rows
                .iter()
                .map(|f| {
                    if f[0] == "0" {
                        "Y0 (Deployment)".to_string()
                    } else {
                        format!("Y{}", f[0])
                    }
                })
                .collect();
            writeln!(doc, "| | {} |", header.join(" | ")).unwrap();
            writeln!(doc, "|---|{}", "---|".repeat(rows.len())).unwrap();
            for (label, idx) in [("revenue", 1), ("cost", 2), ("margin", 3)] {
                let cells: Vec<&str> = rows.iter().map(|f| f[idx].as_str()).collect();
                writeln!(doc, "| {label} | {} |", cells.join(" | ")).unwrap();
            }
        }
    }
    writeln!(doc).unwrap();
}

fn sensitivity_section(ctx: &Ctx, doc: &mut String) {
    writeln!(doc, "## Sensitivity Ranking").unwrap();
    writeln!(doc).unwrap();
    match read(ctx, "sensitivity.csv") {
        None => writeln!(doc, "{NOT_RUN}").unwrap(),
        Some(text) => {
            let rows: Vec<Vec<&str>> =
                text.lines().skip(1).map(|l| l.split(',').collect()).collect();
            writeln!(doc, "Most sensitive to a 10% increase in:").unwrap();
            for f in rows.iter().take(3) {
                let pct = if f[2].is_empty() { "n/a".to_string() } else { format!("{}%", f[2]) };
                writeln!(doc, "- {} (margin delta {}, {})", f[0], f[1], pct).unwrap();
            }
            writeln!(doc).unwrap();
            writeln!(doc, "Least sensitive:").unwrap();
            for f in rows.iter().rev().take(3) {
                writeln!(doc, "- {}", f[0]).unwrap();
            }
        }
    }
    writeln!(doc).unwrap();
}

fn monitoring_section(ctx: &Ctx, doc: &mut String) {
    writeln!(doc, "## Monitoring").unwrap();
    writeln!(doc).unwrap();
    if let Some(section) = &ctx.config.monitor {
        writeln!(
            doc,
            "Plan: drift alert on >{} sigma mean shift; time-stratified sensitivity bins at \
             {:?} days; retirement considered after {} consecutive triggered intervals.",
            section.drift_threshold, section.sensitivity_bin_edges, section.retire_after_consecutive
        )
        .unwrap();
        writeln!(doc).unwrap();
    }
    match read(ctx, "alerts.csv") {
        None => writeln!(doc, "{NOT_RUN}").unwrap(),
        Some(text) => {
            let alerts = text.lines().count().saturating_sub(1);
            writeln!(doc, "Drift alerts emitted: {alerts}").unwrap();
            for line in text.lines().skip(1) {
                let f: Vec<&str> = line.split(',').collect();
                if f.len() >= 7 {
                    writeln!(
                        doc,
                        "- {} at {}: observed {} vs reference {} ({} sigma)",
                        f[0], f[2], f[3], f[4], f[6]
                    )
                    .unwrap();
                }
            }
            if let Some(rec) = read(ctx, "recommendation.txt") {
                writeln!(doc).unwrap();
                write!(doc, "{rec}").unwrap();
            }
        }
    }
    writeln!(doc).unwrap();
}
