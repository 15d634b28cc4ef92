//! `caliper finance`: cash-flow projection and one-at-a-time sensitivity
//! ranking, with the pinned CSV shapes `year,revenue,cost,margin` and
//! `parameter,delta_abs,delta_pct,rank`.

use crate::output::{num, opt_num};
use crate::{Ctx, Failure};
use caliper_core::finance::{project_cashflow, sensitivity_analysis};

pub fn run(ctx: &Ctx) -> anyhow::Result<()> {
    let section = ctx
        .config
        .finance
        .as_ref()
        .ok_or_else(|| Failure::validation("config has no [finance] section"))?;
    let model = section.to_model();
    model.validate().map_err(|e| Failure::validation(e.to_string()))?;

    let flow = project_cashflow(&model).map_err(|e| Failure::runtime(e.to_string()))?;
    let mut csv = String::from("year,revenue,cost,margin\n");
    for year in &flow.years {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            year.year,
            num(year.revenue),
            num(year.cost),
            num(year.margin)
        ));
    }
    let path = ctx
        .out
        .write("cashflow.csv", csv.as_bytes())
        .map_err(|e| Failure::io(format!("{e:#}")))?;
    println!("wrote {}", path.display());

    let target_year = section.sensitivity_target_year.unwrap_or(model.horizon_years);
    let report = sensitivity_analysis(&model, section.sensitivity_perturbation, target_year)
        .map_err(|e| Failure::runtime(e.to_string()))?;
    let mut csv = String::from("parameter,delta_abs,delta_pct,rank\n");
    for (rank, entry) in report.entries.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            entry.parameter,
            num(entry.delta_abs),
            opt_num(entry.delta_pct),
            rank + 1
        ));
    }
    let path = ctx
        .out
        .write("sensitivity.csv", csv.as_bytes())
        .map_err(|e| Failure::io(format!("{e:#}")))?;
    println!("wrote {}", path.display());

    for year in &flow.years {
        println!("Y{}: margin {}", year.year, num(year.margin));
    }
    Ok(())
}
