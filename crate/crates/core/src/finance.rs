//! Multi-year financial projection of a deployed model-guided workflow,
//! one-at-a-time sensitivity ranking, and Little's-Law throughput arithmetic.
//!
//! The projection is differential against the existing state: volumes compound
//! by growth and retention, the model flags a stable fraction of the volume,
//! flags split into true and false positives by PPV, and each channel carries
//! its own revenue or cost driver. Everything is an explicit named parameter
//! so an institution-specific model is pure configuration.

use serde::{Deserialize, Serialize};

/// Inputs of the projection. Currency values are in whatever unit the caller
/// uses throughout (the math never mixes units); rates are fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinancialModel {
    /// Projection horizon: years Y0 (deployment) through Y`horizon_years`.
    pub horizon_years: u32,
    /// Patient volume in year 0.
    pub volume_y0: f64,
    /// Year-over-year volume growth rate.
    pub volume_growth: f64,
    /// Year-over-year patient retention rate.
    pub retention_rate: f64,
    /// Fraction of the volume flagged by the model.
    pub flag_rate: f64,
    /// Positive predictive value of a flag.
    pub ppv: f64,
    pub revenue_per_true_positive: f64,
    pub revenue_per_false_positive: f64,
    /// One-time build/deploy cost borne by Y0.
    pub cost_fixed_y0: f64,
    /// Yearly model maintenance cost.
    pub cost_maintenance: f64,
    /// Workflow cost per flagged patient (outreach, confirmatory testing).
    pub cost_per_intervention: f64,
    /// Operating cost as a fraction of revenue.
    pub operating_cost_rate: f64,
    /// Yearly inflation applied to both revenue and cost.
    pub inflation_rate: f64,
}

impl FinancialModel {
    pub fn validate(&self) -> Result<(), FinanceError> {
        if self.horizon_years < 1 {
            return Err(FinanceError::InvalidModel("horizon_years must be >= 1".into()));
        }
        for (name, value) in [
            ("retention_rate", self.retention_rate),
            ("flag_rate", self.flag_rate),
            ("ppv", self.ppv),
            ("operating_cost_rate", self.operating_cost_rate),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(FinanceError::InvalidModel(format!("{name} {value} outside [0, 1]")));
            }
        }
        for (name, value) in [
            ("volume_y0", self.volume_y0),
            ("volume_growth", self.volume_growth),
            ("inflation_rate", self.inflation_rate),
            ("revenue_per_true_positive", self.revenue_per_true_positive),
            ("revenue_per_false_positive", self.revenue_per_false_positive),
            ("cost_fixed_y0", self.cost_fixed_y0),
            ("cost_maintenance", self.cost_maintenance),
            ("cost_per_intervention", self.cost_per_intervention),
        ] {
            if !value.is_finite() {
                return Err(FinanceError::InvalidModel(format!("{name} must be finite")));
            }
        }
        if self.volume_y0 < 0.0 {
            return Err(FinanceError::InvalidModel("volume_y0 must be >= 0".into()));
        }
        Ok(())
    }
}

/// One projected year, with the revenue/cost decomposition by driver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearFlow {
    pub year: u32,
    pub volume: f64,
    pub flagged: f64,
    pub true_positives: f64,
    pub false_positives: f64,
    pub revenue_true_positive: f64,
    pub revenue_false_positive: f64,
    pub revenue: f64,
    pub cost_fixed: f64,
    pub cost_maintenance: f64,
    pub cost_intervention: f64,
    pub cost_operating: f64,
    pub cost: f64,
    pub margin: f64,
}

/// Projection output: Y0..=Yn flows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CashFlow {
    pub years: Vec<YearFlow>,
}

impl CashFlow {
    pub fn margin(&self, year: u32) -> Option<f64> {
        self.years.iter().find(|y| y.year == year).map(|y| y.margin)
    }
}

/// One parameter's effect on the target-year margin under a relative bump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityEntry {
    pub parameter: String,
    /// Margin change in currency units.
    pub delta_abs: f64,
    /// Margin change as a percent of the base margin; None when the base
    /// margin is zero.
    pub delta_pct: Option<f64>,
}

/// Parameters ranked by |percent margin change|, descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub perturbation: f64,
    pub target_year: u32,
    pub base_margin: f64,
    pub entries: Vec<SensitivityEntry>,
}

impl SensitivityReport {
    /// The n parameters the margin reacts to most.
    pub fn most_sensitive(&self, n: usize) -> &[SensitivityEntry] {
        &self.entries[..n.min(self.entries.len())]
    }

    /// The n parameters the margin reacts to least.
    pub fn least_sensitive(&self, n: usize) -> Vec<&SensitivityEntry> {
        self.entries.iter().rev().take(n).collect()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FinanceError {
    #[error("invalid financial model: {0}")]
    InvalidModel(String),
    #[error("target year {target} beyond horizon {horizon}")]
    TargetBeyondHorizon { target: u32, horizon: u32 },
    #[error("inconsistent time units: rate is per {rate_unit}, time in {time_unit}")]
    UnitMismatch { rate_unit: String, time_unit: String },
    #[error("little's law inputs must be >= 0")]
    NegativeInput,
}

/// Projects the yearly cash flow.
///
/// Year y: volume = volume_y0 x (1+growth)^y x retention^y; flagged = volume x
/// flag_rate; true positives = flagged x ppv; base revenue and cost follow the
/// per-unit drivers; both are inflated by (1+inflation)^y; Y0 additionally
/// bears the fixed build cost. Margin is revenue minus cost, exactly.
pub fn project_cashflow(model: &FinancialModel) -> Result<CashFlow, FinanceError> {
    model.validate()?;
    let years = (0..=model.horizon_years).map(|year| year_flow(model, year)).collect();
    Ok(CashFlow { years })
}

/// One year of the projection formula. Shared by the full projection and the
/// sensitivity what-ifs so both follow the exact same arithmetic.
fn year_flow(model: &FinancialModel, year: u32) -> YearFlow {
    let y = year as f64;
    let volume =
        model.volume_y0 * (1.0 + model.volume_growth).powf(y) * model.retention_rate.powf(y);
    let flagged = volume * model.flag_rate;
    let true_positives = flagged * model.ppv;
    let false_positives = flagged - true_positives;

    let inflation = (1.0 + model.inflation_rate).powf(y);
    let revenue_true_positive = true_positives * model.revenue_per_true_positive * inflation;
    let revenue_false_positive = false_positives * model.revenue_per_false_positive * inflation;
    let revenue = revenue_true_positive + revenue_false_positive;

    let cost_fixed = if year == 0 { model.cost_fixed_y0 } else { 0.0 };
    let cost_maintenance = model.cost_maintenance * inflation;
    let cost_intervention = flagged * model.cost_per_intervention * inflation;
    let cost_operating = model.operating_cost_rate * revenue;
    let cost = cost_fixed + cost_maintenance + cost_intervention + cost_operating;

    YearFlow {
        year,
        volume,
        flagged,
        true_positives,
        false_positives,
        revenue_true_positive,
        revenue_false_positive,
        revenue,
        cost_fixed,
        cost_maintenance,
        cost_intervention,
        cost_operating,
        cost,
        margin: revenue - cost,
    }
}

/// The perturbable parameters, in a fixed reporting order.
pub const SENSITIVITY_PARAMETERS: [&str; 12] = [
    "volume_y0",
    "volume_growth",
    "retention_rate",
    "flag_rate",
    "ppv",
    "revenue_per_true_positive",
    "revenue_per_false_positive",
    "cost_fixed_y0",
    "cost_maintenance",
    "cost_per_intervention",
    "operating_cost_rate",
    "inflation_rate",
];

fn scaled(model: &FinancialModel, parameter: &str, factor: f64) -> FinancialModel {
    let mut m = model.clone();
    match parameter {
        "volume_y0" => m.volume_y0 *= factor,
        "volume_growth" => m.volume_growth *= factor,
        "retention_rate" => m.retention_rate *= factor,
        "flag_rate" => m.flag_rate *= factor,
        "ppv" => m.ppv *= factor,
        "revenue_per_true_positive" => m.revenue_per_true_positive *= factor,
        "revenue_per_false_positive" => m.revenue_per_false_positive *= factor,
        "cost_fixed_y0" => m.cost_fixed_y0 *= factor,
        "cost_maintenance" => m.cost_maintenance *= factor,
        "cost_per_intervention" => m.cost_per_intervention *= factor,
        "operating_cost_rate" => m.operating_cost_rate *= factor,
        "inflation_rate" => m.inflation_rate *= factor,
        other => unreachable!("unknown parameter {other}"),
    }
    m
}

/// Scales each parameter by (1 + perturbation) one at a time, recomputes the
/// margin at the target year, and ranks parameters by the magnitude of the
/// percent change.
///
/// Perturbed values are deliberately not re-validated: a what-if bump may push
/// a rate past 1 and the derivative is still the quantity of interest.
pub fn sensitivity_analysis(
    model: &FinancialModel,
    perturbation: f64,
    target_year: u32,
) -> Result<SensitivityReport, FinanceError> {
    model.validate()?;
    if target_year > model.horizon_years {
        return Err(FinanceError::TargetBeyondHorizon {
            target: target_year,
            horizon: model.horizon_years,
        });
    }
    let base_margin = year_flow(model, target_year).margin;

    let mut entries = Vec::with_capacity(SENSITIVITY_PARAMETERS.len());
    for parameter in SENSITIVITY_PARAMETERS {
        let bumped = scaled(model, parameter, 1.0 + perturbation);
        let margin = year_flow(&bumped, target_year).margin;
        let delta_abs = margin - base_margin;
        let delta_pct =
            (base_margin != 0.0).then(|| 100.0 * delta_abs / base_margin.abs());
        entries.push(SensitivityEntry { parameter: parameter.to_string(), delta_abs, delta_pct });
    }
    // Rank by |percent delta| (equivalently |absolute delta| since the base
    // margin is a common factor); stable for ties by parameter order.
    entries.sort_by(|a, b| {
        b.delta_abs
            .abs()
            .partial_cmp(&a.delta_abs.abs())
            .expect("deltas are finite")
    });
    Ok(SensitivityReport { perturbation, target_year, base_margin, entries })
}

/// Symbolic time unit for Little's-Law inputs. Month-based and day-based
/// families convert exactly within themselves; mixing families is an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    Day,
    Week,
    Month,
    Quarter,
    Year,
}

impl TimeUnit {
    fn months(self) -> Option<f64> {
        match self {
            TimeUnit::Month => Some(1.0),
            TimeUnit::Quarter => Some(3.0),
            TimeUnit::Year => Some(12.0),
            _ => None,
        }
    }

    fn days(self) -> Option<f64> {
        match self {
            TimeUnit::Day => Some(1.0),
            TimeUnit::Week => Some(7.0),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TimeUnit::Day => "day",
            TimeUnit::Week => "week",
            TimeUnit::Month => "month",
            TimeUnit::Quarter => "quarter",
            TimeUnit::Year => "year",
        }
    }
}

/// Arrival/completion rate: `value` items per `unit`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub value: f64,
    pub unit: TimeUnit,
}

/// Time in system: `value` units of `unit`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeInSystem {
    pub value: f64,
    pub unit: TimeUnit,
}

/// L = lambda x W: the average number of items in flight in a stationary
/// system. Units convert exactly within the month family (month, quarter,
/// year) and the day family (day, week); mixing families is a unit mismatch.
pub fn littles_law(arrival_rate: Rate, time_in_system: TimeInSystem) -> Result<f64, FinanceError> {
    if arrival_rate.value < 0.0 || time_in_system.value < 0.0 {
        return Err(FinanceError::NegativeInput);
    }
    let rate_per_time_unit = if arrival_rate.unit == time_in_system.unit {
        arrival_rate.value
    } else {
        let convert = match (arrival_rate.unit.months(), time_in_system.unit.months()) {
            (Some(rate_m), Some(time_m)) => Some(arrival_rate.value * time_m / rate_m),
            _ => match (arrival_rate.unit.days(), time_in_system.unit.days()) {
                (Some(rate_d), Some(time_d)) => Some(arrival_rate.value * time_d / rate_d),
                _ => None,
            },
        };
        convert.ok_or_else(|| FinanceError::UnitMismatch {
            rate_unit: arrival_rate.unit.label().to_string(),
            time_unit: time_in_system.unit.label().to_string(),
        })?
    };
    Ok(rate_per_time_unit * time_in_system.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn example_model() -> FinancialModel {
        FinancialModel {
            horizon_years: 5,
            volume_y0: 20_000.0,
            volume_growth: 0.04,
            retention_rate: 0.76,
            flag_rate: 0.05,
            ppv: 0.6,
            revenue_per_true_positive: 4_000.0,
            revenue_per_false_positive: 900.0,
            cost_fixed_y0: 250_000.0,
            cost_maintenance: 40_000.0,
            cost_per_intervention: 350.0,
            operating_cost_rate: 0.3,
            inflation_rate: 0.02,
        }
    }

    /// Blunt spreadsheet-style recomputation, kept independent of the
    /// implementation's decomposition.
    fn oracle_margin(m: &FinancialModel, year: u32) -> f64 {
        let mut volume = m.volume_y0;
        for _ in 0..year {
            volume = volume * (1.0 + m.volume_growth) * m.retention_rate;
        }
        let flagged = volume * m.flag_rate;
        let tp = flagged * m.ppv;
        let fp = flagged * (1.0 - m.ppv);
        let mut infl = 1.0;
        for _ in 0..year {
            infl *= 1.0 + m.inflation_rate;
        }
        let revenue = (tp * m.revenue_per_true_positive + fp * m.revenue_per_false_positive) * infl;
        let mut cost = m.cost_maintenance * infl
            + flagged * m.cost_per_intervention * infl
            + m.operating_cost_rate * revenue;
        if year == 0 {
            cost += m.cost_fixed_y0;
        }
        revenue - cost
    }

    #[test]
    fn degenerate_parameters_give_constant_margin() {
        let m = FinancialModel {
            horizon_years: 4,
            volume_y0: 1.0,
            volume_growth: 0.0,
            retention_rate: 1.0,
            flag_rate: 1.0,
            ppv: 1.0,
            revenue_per_true_positive: 100.0,
            revenue_per_false_positive: 0.0,
            cost_fixed_y0: 0.0,
            cost_maintenance: 0.0,
            cost_per_intervention: 0.0,
            operating_cost_rate: 0.0,
            inflation_rate: 0.0,
        };
        let flow = project_cashflow(&m).unwrap();
        for year in &flow.years {
            assert_abs_diff_eq!(year.margin, 100.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn retention_compounds_on_volume() {
        let m = FinancialModel { volume_growth: 0.0, ..example_model() };
        let flow = project_cashflow(&m).unwrap();
        for year in &flow.years {
            let expected = m.volume_y0 * 0.76_f64.powi(year.year as i32);
            assert_abs_diff_eq!(year.volume, expected, epsilon = 1e-6);
        }
    }

    #[test]
    fn projection_matches_independent_recomputation() {
        let m = example_model();
        let flow = project_cashflow(&m).unwrap();
        for year in 0..=5 {
            assert_abs_diff_eq!(
                flow.margin(year).unwrap(),
                oracle_margin(&m, year),
                epsilon = 1e-6
            );
        }
    }

    #[test]
    fn accounting_identity_and_breakdowns() {
        let flow = project_cashflow(&example_model()).unwrap();
        for y in &flow.years {
            assert_abs_diff_eq!(y.margin, y.revenue - y.cost, epsilon = 1e-9);
            assert_abs_diff_eq!(
                y.revenue,
                y.revenue_true_positive + y.revenue_false_positive,
                epsilon = y.revenue.abs() * 1e-12
            );
            assert_abs_diff_eq!(
                y.cost,
                y.cost_fixed + y.cost_maintenance + y.cost_intervention + y.cost_operating,
                epsilon = y.cost.abs() * 1e-12
            );
        }
    }

    #[test]
    fn homogeneity_in_money_parameters() {
        let m = example_model();
        let mut doubled = m.clone();
        doubled.revenue_per_true_positive *= 2.0;
        doubled.revenue_per_false_positive *= 2.0;
        doubled.cost_fixed_y0 *= 2.0;
        doubled.cost_maintenance *= 2.0;
        doubled.cost_per_intervention *= 2.0;
        let base = project_cashflow(&m).unwrap();
        let twice = project_cashflow(&doubled).unwrap();
        for (a, b) in base.years.iter().zip(&twice.years) {
            assert_eq!(2.0 * a.margin, b.margin);
        }
    }

    #[test]
    fn dead_parameter_has_zero_delta() {
        // ppv = 1 kills the false-positive channel.
        let m = FinancialModel { ppv: 1.0, ..example_model() };
        let report = sensitivity_analysis(&m, 0.10, 5).unwrap();
        let fp = report
            .entries
            .iter()
            .find(|e| e.parameter == "revenue_per_false_positive")
            .unwrap();
        assert_eq!(fp.delta_abs, 0.0);
        // The one-time build cost never touches later years.
        let fixed = report.entries.iter().find(|e| e.parameter == "cost_fixed_y0").unwrap();
        assert_eq!(fixed.delta_abs, 0.0);
    }

    #[test]
    fn linear_channel_bump_is_exact() {
        // Only TP revenue, no costs: +10% on revenue_per_true_positive moves
        // the margin by exactly 10% of TP revenue.
        let m = FinancialModel {
            cost_fixed_y0: 0.0,
            cost_maintenance: 0.0,
            cost_per_intervention: 0.0,
            operating_cost_rate: 0.0,
            revenue_per_false_positive: 0.0,
            ..example_model()
        };
        let report = sensitivity_analysis(&m, 0.10, 3).unwrap();
        let entry = report
            .entries
            .iter()
            .find(|e| e.parameter == "revenue_per_true_positive")
            .unwrap();
        assert_abs_diff_eq!(entry.delta_pct.unwrap(), 10.0, epsilon = 1e-9);
    }

    #[test]
    fn ranking_matches_brute_force() {
        // Independent one-at-a-time recomputation. volume_y0 and flag_rate
        // are algebraically tied channels, so the comparison allows relative
        // slack of 1e-9 where the two routes round differently.
        let m = example_model();
        let report = sensitivity_analysis(&m, 0.10, 5).unwrap();
        let base = oracle_margin(&m, 5);
        let oracle_delta = |p: &str| (oracle_margin(&scaled(&m, p, 1.10), 5) - base).abs();

        for entry in &report.entries {
            let expected = oracle_delta(&entry.parameter);
            assert_abs_diff_eq!(
                entry.delta_abs.abs(),
                expected,
                epsilon = 1e-9 * (1.0 + expected)
            );
        }
        for pair in report.entries.windows(2) {
            let earlier = oracle_delta(&pair[0].parameter);
            let later = oracle_delta(&pair[1].parameter);
            assert!(
                earlier >= later - 1e-9 * (1.0 + later),
                "ranking disagrees with oracle: {} ({earlier}) before {} ({later})",
                pair[0].parameter,
                pair[1].parameter
            );
        }
    }

    #[test]
    fn antisymmetry_for_linear_parameter() {
        let m = example_model();
        let up = sensitivity_analysis(&m, 0.10, 5).unwrap();
        let down = sensitivity_analysis(&m, -0.10, 5).unwrap();
        let pick = |r: &SensitivityReport| {
            r.entries
                .iter()
                .find(|e| e.parameter == "revenue_per_true_positive")
                .unwrap()
                .delta_abs
        };
        assert_abs_diff_eq!(pick(&up), -pick(&down), epsilon = 1e-9 * pick(&up).abs());
    }

    #[test]
    fn sensitivity_errors() {
        let m = example_model();
        assert!(matches!(
            sensitivity_analysis(&m, 0.10, 9),
            Err(FinanceError::TargetBeyondHorizon { .. })
        ));
        let bad = FinancialModel { ppv: 1.5, ..m };
        assert!(matches!(sensitivity_analysis(&bad, 0.10, 5), Err(FinanceError::InvalidModel(_))));
    }

    #[test]
    fn littles_law_monthly_cadence() {
        // One assessment per month, two months in flight each.
        let l = littles_law(
            Rate { value: 1.0, unit: TimeUnit::Month },
            TimeInSystem { value: 2.0, unit: TimeUnit::Month },
        )
        .unwrap();
        assert_eq!(l, 2.0);
    }

    #[test]
    fn littles_law_zero_rate() {
        let l = littles_law(
            Rate { value: 0.0, unit: TimeUnit::Month },
            TimeInSystem { value: 5.0, unit: TimeUnit::Month },
        )
        .unwrap();
        assert_eq!(l, 0.0);
    }

    #[test]
    fn littles_law_cross_unit_exact() {
        // Twelve per year with two months in flight: rate converts to
        // one per month exactly, so L = 2 exactly.
        let l = littles_law(
            Rate { value: 12.0, unit: TimeUnit::Year },
            TimeInSystem { value: 2.0, unit: TimeUnit::Month },
        )
        .unwrap();
        assert_eq!(l, 2.0);
    }

    #[test]
    fn littles_law_unit_mismatch_and_negatives() {
        assert!(matches!(
            littles_law(
                Rate { value: 1.0, unit: TimeUnit::Week },
                TimeInSystem { value: 1.0, unit: TimeUnit::Month },
            ),
            Err(FinanceError::UnitMismatch { .. })
        ));
        assert!(matches!(
            littles_law(
                Rate { value: -1.0, unit: TimeUnit::Month },
                TimeInSystem { value: 1.0, unit: TimeUnit::Month },
            ),
            Err(FinanceError::NegativeInput)
        ));
    }
}
