//! Post-deployment monitoring primitives: reference baselines, drift alerts on
//! a strict >1 sigma rule, time-stratified sensitivity under label lag,
//! adherence metrics, alternating trial-arm allocation, and the model-update
//! trigger that ties them together.
//!
//! Everything here is a pure function of its inputs; replaying the same logs
//! reproduces the same alert stream.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Key of one monitored series: a metric name plus an optional demographic
/// stratum (empty string = unstratified).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SeriesKey {
    pub metric: String,
    pub stratum: String,
}

impl SeriesKey {
    pub fn new(metric: &str, stratum: &str) -> Self {
        Self { metric: metric.to_string(), stratum: stratum.to_string() }
    }
}

impl fmt::Display for SeriesKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.stratum.is_empty() {
            write!(f, "{}", self.metric)
        } else {
            write!(f, "{}[{}]", self.metric, self.stratum)
        }
    }
}

/// Reference statistics per series, built from a retrospective test set or a
/// silent-deployment window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorBaseline {
    pub source: String,
    pub stats: BTreeMap<SeriesKey, BaselineStat>,
}

/// Population mean/std (divisor n) and sample count for one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineStat {
    pub mean: f64,
    pub std: f64,
    pub count: u64,
}

/// One interval's observations for a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationWindow {
    pub key: SeriesKey,
    pub values: Vec<f64>,
    /// Interval label, e.g. "2031-04" for a monthly window.
    pub interval: String,
}

/// Emitted when a window's mean moves more than the threshold (in baseline
/// standard deviations) away from the reference mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertEvent {
    pub key: SeriesKey,
    pub interval: String,
    pub observed_mean: f64,
    pub reference_mean: f64,
    pub reference_std: f64,
    /// |observed - reference| / reference std; infinite for a degenerate
    /// zero-std baseline.
    pub deviation_sigma: f64,
    /// True when the baseline std is zero and any change alerts.
    pub degenerate_baseline: bool,
}

/// One prediction joined with its (possibly lagged) label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPrediction {
    pub patient_id: u64,
    pub predicted_positive: bool,
    /// Days from prediction to the observed event; None while no event has
    /// been observed.
    pub time_to_event: Option<f64>,
    /// Days of follow-up available for this prediction so far. Events beyond
    /// the horizon are not yet observable.
    pub analysis_horizon: f64,
}

/// Sensitivity within one time-to-event bin (lo, hi].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSensitivity {
    pub lo_days: f64,
    pub hi_days: f64,
    pub observable_events: u64,
    pub predicted_positive: u64,
    /// None when the bin holds no observable events (undefined, not zero).
    pub sensitivity: Option<f64>,
}

/// Uptake and adoption for one interval; None marks an undefined ratio
/// (division by a zero denominator), which is distinct from zero adherence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Adherence {
    pub uptake: Option<f64>,
    pub adoption: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Intervention,
    Control,
}

/// What the monitoring evidence recommends for the model this interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recommendation {
    LeaveAsIs,
    Update,
    ConsiderRetire,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MonitorError {
    #[error("series {0} has fewer than 2 samples")]
    InsufficientSamples(SeriesKey),
    #[error("series {0} is not in the baseline")]
    UnknownMetric(SeriesKey),
    #[error("bin edges must contain at least two strictly increasing values")]
    EmptyBinEdges,
    #[error("count ordering violated: flagged {flagged} >= orders {orders} >= completed {completed} must hold")]
    CountOrderingViolation { flagged: u64, orders: u64, completed: u64 },
    #[error("observation window for {0} is empty")]
    EmptyWindow(SeriesKey),
}

/// Builds reference statistics (population mean/std, divisor n) per series.
/// Requires at least two samples per series.
pub fn build_baseline(
    samples: &BTreeMap<SeriesKey, Vec<f64>>,
    source: &str,
) -> Result<MonitorBaseline, MonitorError> {
    let mut stats = BTreeMap::new();
    for (key, values) in samples {
        if values.len() < 2 {
            return Err(MonitorError::InsufficientSamples(key.clone()));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        stats.insert(
            key.clone(),
            BaselineStat { mean, std: var.sqrt(), count: values.len() as u64 },
        );
    }
    Ok(MonitorBaseline { source: source.to_string(), stats })
}

/// Compares a window's mean against the baseline. Alerts only when the shift
/// strictly exceeds `threshold` baseline standard deviations: a deviation of
/// exactly 1.0 sigma does not alert under the default threshold.
///
/// A zero-std baseline is degenerate: any nonzero change alerts, and the
/// event is flagged so downstream consumers can treat it with suspicion.
pub fn check_drift(
    window: &ObservationWindow,
    baseline: &MonitorBaseline,
    threshold: f64,
) -> Result<Option<AlertEvent>, MonitorError> {
    let stat = baseline
        .stats
        .get(&window.key)
        .ok_or_else(|| MonitorError::UnknownMetric(window.key.clone()))?;
    if window.values.is_empty() {
        return Err(MonitorError::EmptyWindow(window.key.clone()));
    }
    let observed = window.values.iter().sum::<f64>() / window.values.len() as f64;
    let shift = (observed - stat.mean).abs();

    let (alert, deviation, degenerate) = if stat.std == 0.0 {
        (shift > 0.0, f64::INFINITY, true)
    } else {
        let sigma = shift / stat.std;
        (sigma > threshold, sigma, false)
    };
    Ok(alert.then(|| AlertEvent {
        key: window.key.clone(),
        interval: window.interval.clone(),
        observed_mean: observed,
        reference_mean: stat.mean,
        reference_std: stat.std,
        deviation_sigma: deviation,
        degenerate_baseline: degenerate,
    }))
}

/// Sensitivity stratified by time-to-event bins (lo, hi], counting only
/// events that are already observable (time_to_event <= analysis_horizon).
/// Bins with no observable events report None, not zero.
pub fn time_stratified_sensitivity(
    preds: &[LabeledPrediction],
    bin_edges_days: &[f64],
) -> Result<Vec<BinSensitivity>, MonitorError> {
    if bin_edges_days.len() < 2 || bin_edges_days.windows(2).any(|w| w[0] >= w[1]) {
        return Err(MonitorError::EmptyBinEdges);
    }
    let mut bins: Vec<BinSensitivity> = bin_edges_days
        .windows(2)
        .map(|w| BinSensitivity {
            lo_days: w[0],
            hi_days: w[1],
            observable_events: 0,
            predicted_positive: 0,
            sensitivity: None,
        })
        .collect();
    for pred in preds {
        let Some(tte) = pred.time_to_event else { continue };
        if tte > pred.analysis_horizon {
            continue; // not yet observable
        }
        for bin in &mut bins {
            if tte > bin.lo_days && tte <= bin.hi_days {
                bin.observable_events += 1;
                if pred.predicted_positive {
                    bin.predicted_positive += 1;
                }
                break;
            }
        }
    }
    for bin in &mut bins {
        if bin.observable_events > 0 {
            bin.sensitivity = Some(bin.predicted_positive as f64 / bin.observable_events as f64);
        }
    }
    Ok(bins)
}

/// Uptake = outreach orders / flagged; adoption = completed tests / orders.
/// Zero denominators yield None: a month with no flagged patients is not a
/// month of zero uptake.
pub fn adherence_metrics(
    flagged: u64,
    outreach_orders: u64,
    completed_tests: u64,
) -> Result<Adherence, MonitorError> {
    if outreach_orders > flagged || completed_tests > outreach_orders {
        return Err(MonitorError::CountOrderingViolation {
            flagged,
            orders: outreach_orders,
            completed: completed_tests,
        });
    }
    Ok(Adherence {
        uptake: (flagged > 0).then(|| outreach_orders as f64 / flagged as f64),
        adoption: (outreach_orders > 0).then(|| completed_tests as f64 / outreach_orders as f64),
    })
}

/// Alternating arm assignment over patients in evaluation order (the caller
/// sorts by descending risk). Deterministic; arm sizes differ by at most one.
pub fn allocate_arms(ordered_patients: &[u64], first: Arm) -> Vec<(u64, Arm)> {
    let other = match first {
        Arm::Intervention => Arm::Control,
        Arm::Control => Arm::Intervention,
    };
    ordered_patients
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, if i % 2 == 0 { first } else { other }))
        .collect()
}

/// Surfaces the update/retire trigger conditions. Any alert this interval
/// recommends an update; `prior_consecutive_triggered` intervals of alerts
/// immediately before this one escalate to retirement consideration once the
/// streak reaches `retire_after_consecutive` (the human decision itself stays
/// out of scope).
pub fn evaluate_update_trigger(
    interval_alerts: &[AlertEvent],
    prior_consecutive_triggered: u32,
    retire_after_consecutive: u32,
) -> Recommendation {
    if interval_alerts.is_empty() {
        return Recommendation::LeaveAsIs;
    }
    if prior_consecutive_triggered + 1 >= retire_after_consecutive.max(1) {
        Recommendation::ConsiderRetire
    } else {
        Recommendation::Update
    }
}
