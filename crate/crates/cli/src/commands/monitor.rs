//! `caliper monitor`: batch evaluation of monitoring logs.
//!
//! Reads the documented delimited logs (predictions, labels, adherence),
//! builds reference baselines from the baseline prediction file and the
//! leading adherence intervals, and emits drift alerts, time-stratified
//! sensitivity under label lag, adherence ratios, and the update
//! recommendation.

use crate::output::{num, opt_num};
use crate::{Ctx, Failure};
use caliper_core::monitor::{
    adherence_metrics, build_baseline, check_drift, evaluate_update_trigger,
    time_stratified_sensitivity, AlertEvent, LabeledPrediction, ObservationWindow,
    Recommendation, SeriesKey,
};
use chrono::NaiveDate;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::Path;

const LABEL_LAG_DAYS: f64 = 365.0;

#[derive(Debug, Deserialize)]
struct PredictionRow {
    patient_id: u64,
    score: f64,
    predicted_label: u8,
    date: String,
}

#[derive(Debug, Deserialize)]
struct LabelRow {
    patient_id: u64,
    event: u8,
    event_date: String,
}

#[derive(Debug, Deserialize)]
struct AdherenceRow {
    interval: String,
    flagged: u64,
    orders: u64,
    completed: u64,
}

pub fn run(ctx: &Ctx) -> anyhow::Result<()> {
    let section = ctx
        .config
        .monitor
        .as_ref()
        .ok_or_else(|| Failure::validation("config has no [monitor] section"))?;
    let as_of = parse_date(&section.as_of)
        .map_err(|e| Failure::validation(format!("monitor.as_of: {e}")))?;

    let baseline_rows: Vec<PredictionRow> =
        read_rows(&ctx.base_dir.join(&section.baseline_predictions))?;
    let current_rows: Vec<PredictionRow> = read_rows(&ctx.base_dir.join(&section.predictions))?;
    let label_rows: Vec<LabelRow> = read_rows(&ctx.base_dir.join(&section.labels))?;
    let adherence_rows: Vec<AdherenceRow> = read_rows(&ctx.base_dir.join(&section.adherence))?;

    // Reference distributions from the baseline file (retrospective test set
    // or silent deployment).
    let mut samples: BTreeMap<SeriesKey, Vec<f64>> = BTreeMap::new();
    for row in &baseline_rows {
        samples
            .entry(SeriesKey::new("output_probability", ""))
            .or_default()
            .push(row.score);
        samples
            .entry(SeriesKey::new("flag_rate", ""))
            .or_default()
            .push(row.predicted_label as f64);
    }
    let baseline = build_baseline(&samples, "baseline_predictions")
        .map_err(|e| Failure::runtime(e.to_string()))?;

    let mut alerts: Vec<AlertEvent> = Vec::new();

    // Monthly score / flag-rate windows over the current predictions.
    let mut monthly: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for row in &current_rows {
        let date = parse_date(&row.date)
            .map_err(|e| Failure::validation(format!("predictions date: {e}")))?;
        let month = date.format("%Y-%m").to_string();
        let entry = monthly.entry(month).or_default();
        entry.0.push(row.score);
        entry.1.push(row.predicted_label as f64);
    }
    for (month, (scores, flags)) in &monthly {
        for (metric, values) in
            [("output_probability", scores), ("flag_rate", flags)]
        {
            let window = ObservationWindow {
                key: SeriesKey::new(metric, ""),
                values: values.clone(),
                interval: month.clone(),
            };
            if let Some(alert) = check_drift(&window, &baseline, section.drift_threshold)
                .map_err(|e| Failure::runtime(e.to_string()))?
            {
                alerts.push(alert);
            }
        }
    }

    // Label-lag-aware sensitivity bins.
    let labels: BTreeMap<u64, &LabelRow> =
        label_rows.iter().map(|r| (r.patient_id, r)).collect();
    let mut preds = Vec::with_capacity(current_rows.len());
    for row in &current_rows {
        let pred_date = parse_date(&row.date)
            .map_err(|e| Failure::validation(format!("predictions date: {e}")))?;
        let horizon =
            ((as_of - pred_date).num_days() as f64).clamp(0.0, LABEL_LAG_DAYS);
        let time_to_event = match labels.get(&row.patient_id) {
            Some(label) if label.event == 1 => {
                let event_date = parse_date(&label.event_date)
                    .map_err(|e| Failure::validation(format!("labels event_date: {e}")))?;
                Some((event_date - pred_date).num_days() as f64)
            }
            _ => None,
        };
        preds.push(LabeledPrediction {
            patient_id: row.patient_id,
            predicted_positive: row.predicted_label == 1,
            time_to_event,
            analysis_horizon: horizon,
        });
    }
    let bins = time_stratified_sensitivity(&preds, &section.sensitivity_bin_edges)
        .map_err(|e| Failure::runtime(e.to_string()))?;
    let mut csv =
        String::from("lo_days,hi_days,observable_events,predicted_positive,sensitivity\n");
    for bin in &bins {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            num(bin.lo_days),
            num(bin.hi_days),
            bin.observable_events,
            bin.predicted_positive,
            opt_num(bin.sensitivity)
        ));
    }
    write(ctx, "sensitivity_bins.csv", &csv)?;

    // Adherence ratios per interval; drift on the rates relative to the
    // leading baseline intervals.
    let mut adherence_csv = String::from("interval,flagged,orders,completed,uptake,adoption\n");
    let mut rates: Vec<(String, Option<f64>, Option<f64>)> = Vec::new();
    for row in &adherence_rows {
        let adherence = adherence_metrics(row.flagged, row.orders, row.completed)
            .map_err(|e| Failure::runtime(e.to_string()))?;
        adherence_csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.interval,
            row.flagged,
            row.orders,
            row.completed,
            opt_num(adherence.uptake),
            opt_num(adherence.adoption)
        ));
        rates.push((row.interval.clone(), adherence.uptake, adherence.adoption));
    }
    write(ctx, "adherence.csv", &adherence_csv)?;

    let split = section.adherence_baseline_intervals.min(rates.len());
    let mut adherence_samples: BTreeMap<SeriesKey, Vec<f64>> = BTreeMap::new();
    for (_, uptake, adoption) in &rates[..split] {
        if let Some(u) = uptake {
            adherence_samples.entry(SeriesKey::new("uptake", "")).or_default().push(*u);
        }
        if let Some(a) = adoption {
            adherence_samples.entry(SeriesKey::new("adoption", "")).or_default().push(*a);
        }
    }
    adherence_samples.retain(|_, v| v.len() >= 2);
    if !adherence_samples.is_empty() {
        let adherence_baseline = build_baseline(&adherence_samples, "adherence_baseline")
            .map_err(|e| Failure::runtime(e.to_string()))?;
        for (interval, uptake, adoption) in &rates[split..] {
            for (metric, value) in [("uptake", uptake), ("adoption", adoption)] {
                let Some(value) = value else { continue };
                let key = SeriesKey::new(metric, "");
                if !adherence_baseline.stats.contains_key(&key) {
                    continue;
                }
                let window = ObservationWindow {
                    key,
                    values: vec![*value],
                    interval: interval.clone(),
                };
                if let Some(alert) =
                    check_drift(&window, &adherence_baseline, section.drift_threshold)
                        .map_err(|e| Failure::runtime(e.to_string()))?
                {
                    alerts.push(alert);
                }
            }
        }
    }

    alerts.sort_by(|a, b| (&a.interval, &a.key).cmp(&(&b.interval, &b.key)));
    let mut csv = String::from(
        "metric,stratum,interval,observed_mean,reference_mean,reference_std,\
         deviation_sigma,degenerate_baseline\n",
    );
    for alert in &alerts {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            alert.key.metric,
            alert.key.stratum,
            alert.interval,
            num(alert.observed_mean),
            num(alert.reference_mean),
            num(alert.reference_std),
            num(alert.deviation_sigma),
            alert.degenerate_baseline
        ));
    }
    write(ctx, "alerts.csv", &csv)?;

    let recommendation = recommend(ctx, &monthly, &rates, &alerts, section.retire_after_consecutive);
    write(ctx, "recommendation.txt", &recommendation)?;
    print!("{recommendation}");
    println!("{} alert(s) emitted", alerts.len());
    Ok(())
}

/// Trailing-streak trigger evaluation over chronologically sorted interval
/// labels (lexicographic works for YYYY-MM).
fn recommend(
    _ctx: &Ctx,
    monthly: &BTreeMap<String, (Vec<f64>, Vec<f64>)>,
    rates: &[(String, Option<f64>, Option<f64>)],
    alerts: &[AlertEvent],
    retire_after: u32,
) -> String {
    let mut intervals: Vec<String> = monthly.keys().cloned().collect();
    for (interval, _, _) in rates {
        if !intervals.contains(interval) {
            intervals.push(interval.clone());
        }
    }
    intervals.sort();
    if intervals.is_empty() {
        return "recommendation: leave_as_is (no intervals observed)\n".to_string();
    }
    let triggered: Vec<bool> = intervals
        .iter()
        .map(|i| alerts.iter().any(|a| &a.interval == i))
        .collect();
    let last = intervals.len() - 1;
    let prior_streak = triggered[..last].iter().rev().take_while(|&&t| t).count() as u32;
    let last_alerts: Vec<AlertEvent> = alerts
        .iter()
        .filter(|a| a.interval == intervals[last])
        .cloned()
        .collect();
    let recommendation = evaluate_update_trigger(&last_alerts, prior_streak, retire_after);
    let word = match recommendation {
        Recommendation::LeaveAsIs => "leave_as_is",
        Recommendation::Update => "update",
        Recommendation::ConsiderRetire => "consider_retire",
    };
    format!(
        "recommendation: {word} (interval {}, {} alert(s) this interval, {} prior consecutive triggered interval(s), retire threshold {})\n",
        intervals[last],
        last_alerts.len(),
        prior_streak,
        retire_after
    )
}

fn write(ctx: &Ctx, name: &str, contents: &str) -> anyhow::Result<()> {
    let path = ctx
        .out
        .write(name, contents.as_bytes())
        .map_err(|e| Failure::io(format!("{e:#}")))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn parse_date(s: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|e| format!("'{s}': {e}"))
}

fn read_rows<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Failure::io(format!("opening {}: {e}", path.display())))?;
    reader
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| Failure::validation(format!("parsing {}: {e}", path.display())))
}
