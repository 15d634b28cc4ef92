//! Property tests for cross-cutting invariants.

use caliper_core::cohort::{auroc, calibrate_separation, Patient};
use caliper_core::finance::{project_cashflow, FinancialModel};
use caliper_core::monitor::{allocate_arms, time_stratified_sensitivity, Arm, LabeledPrediction};
use caliper_core::sim::{
    baseline_utilities, relative_utility, simulate, SimConfig, Strategy as SimStrategy,
};
use caliper_core::sweep::{emit_csv, parse_csv, AxisGrid, SweepCell, SweepResult};
use caliper_core::workflow::{
    lookup_utility, nurse_workflow, DiseaseState, Outcome, UtilityTable,
};
use proptest::prelude::*;

fn auroc_brute_force(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            pairs += 1.0;
            wins += if scores[i] > scores[j] {
                1.0
            } else if scores[i] == scores[j] {
                0.5
            } else {
                0.0
            };
        }
    }
    wins / pairs
}

fn arb_patients(max: usize) -> impl Strategy<Value = Vec<Patient>> {
    prop::collection::vec(
        (0..3u8, 0..=100u32, 0..5u32),
        1..max,
    )
    .prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (state, score, day))| Patient {
                id: i as u64,
                true_state: match state {
                    0 => DiseaseState::NoDisease,
                    1 => DiseaseState::Moderate,
                    _ => DiseaseState::Severe,
                },
                risk_score: score as f64 / 100.0,
                arrival_day: day,
            })
            .collect()
    })
}

fn arb_strategy() -> impl Strategy<Value = SimStrategy> {
    prop_oneof![
        Just(SimStrategy::Ranked),
        (0..=10u32).prop_map(|c| SimStrategy::Thresholded { cutoff: c as f64 / 10.0 }),
        (0..=10u32, 0..=10u32).prop_map(|(c, p)| SimStrategy::DoctorAlert {
            cutoff: c as f64 / 10.0,
            alert_read_prob: p as f64 / 10.0,
        }),
        Just(SimStrategy::TreatNone),
        Just(SimStrategy::TreatAll),
        Just(SimStrategy::Optimistic),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn auroc_equals_pairwise_count(
        rows in prop::collection::vec((0..=10u32, any::<bool>()), 2..120)
    ) {
        let mut scores: Vec<f64> = rows.iter().map(|(s, _)| *s as f64 / 10.0).collect();
        let mut labels: Vec<bool> = rows.iter().map(|(_, l)| *l).collect();
        if !labels.contains(&true) { labels[0] = true; scores[0] = 0.3; }
        if !labels.contains(&false) { labels[rows.len() - 1] = false; }
        prop_assert_eq!(
            auroc(&scores, &labels).unwrap(),
            auroc_brute_force(&scores, &labels)
        );
    }

    #[test]
    fn simulate_invariants_hold_for_any_config(
        cohort in arb_patients(80),
        strategy in arb_strategy(),
        nurse_capacity in 0..6u32,
        specialist_capacity in 0..4u32,
        seed in any::<u64>(),
    ) {
        let utilities = UtilityTable::pad_default();
        let ranked = !matches!(strategy, SimStrategy::Thresholded { .. });
        let graph = match strategy {
            SimStrategy::DoctorAlert { .. } => caliper_core::workflow::doctor_workflow(specialist_capacity),
            _ => nurse_workflow(nurse_capacity, specialist_capacity, ranked),
        };
        let config = SimConfig {
            strategy: strategy.clone(),
            nurse_capacity,
            specialist_capacity,
            seed,
        };
        let a = simulate(&graph, &utilities, &cohort, &config).unwrap();
        let b = simulate(&graph, &utilities, &cohort, &config).unwrap();
        prop_assert_eq!(&a, &b, "same inputs, different results");

        prop_assert_eq!(a.cohort_size(), cohort.len() as u64);
        let n_days = {
            let mut days: Vec<u32> = cohort.iter().map(|p| p.arrival_day).collect();
            days.sort();
            days.dedup();
            days.len() as u64
        };
        if !matches!(strategy, SimStrategy::Optimistic) {
            prop_assert!(
                a.patients_seen_by_specialist <= specialist_capacity as u64 * n_days
            );
        }
        let recomputed: f64 = a
            .outcome_counts
            .iter()
            .map(|(&(s, o), &c)| c as f64 * lookup_utility(&utilities, s, o))
            .sum::<f64>() / cohort.len() as f64;
        prop_assert!((recomputed - a.mean_utility).abs() < 1e-9);
        for utilization in a.resource_utilization.values() {
            prop_assert!((0.0..=1.0).contains(utilization));
        }
    }

    #[test]
    fn treat_none_always_anchors_at_zero(
        cohort in arb_patients(60),
        seed in any::<u64>(),
    ) {
        let utilities = UtilityTable::pad_default();
        let graph = nurse_workflow(2, 1, true);
        let config = SimConfig {
            strategy: SimStrategy::TreatNone,
            nurse_capacity: 2,
            specialist_capacity: 1,
            seed,
        };
        let result = simulate(&graph, &utilities, &cohort, &config).unwrap();
        let (u_none, u_opt) = baseline_utilities(&utilities, &cohort);
        if u_opt > u_none {
            let rel = relative_utility(result.mean_utility, u_none, u_opt).unwrap();
            prop_assert_eq!(rel, 0.0);
        }
    }

    #[test]
    fn arm_allocation_alternates_for_any_order(ids in prop::collection::vec(any::<u64>(), 0..200)) {
        let arms = allocate_arms(&ids, Arm::Intervention);
        prop_assert_eq!(arms.len(), ids.len());
        for (i, (id, arm)) in arms.iter().enumerate() {
            prop_assert_eq!(*id, ids[i]);
            let expected = if i % 2 == 0 { Arm::Intervention } else { Arm::Control };
            prop_assert_eq!(*arm, expected);
        }
        let intervention = arms.iter().filter(|(_, a)| *a == Arm::Intervention).count();
        prop_assert!(intervention.abs_diff(arms.len() - intervention) <= 1);
    }

    #[test]
    fn raising_horizon_never_hides_events(
        records in prop::collection::vec((any::<bool>(), 1..=400u32, 0..=400u32), 1..60),
        extension in 1..=200u32,
    ) {
        let make = |extra: f64| -> Vec<LabeledPrediction> {
            records
                .iter()
                .enumerate()
                .map(|(i, &(positive, tte, horizon))| LabeledPrediction {
                    patient_id: i as u64,
                    predicted_positive: positive,
                    time_to_event: Some((tte as f64).min(365.0)),
                    analysis_horizon: horizon as f64 + extra,
                })
                .collect()
        };
        let edges = [0.0, 90.0, 180.0, 270.0, 365.0];
        let before = time_stratified_sensitivity(&make(0.0), &edges).unwrap();
        let after = time_stratified_sensitivity(&make(extension as f64), &edges).unwrap();
        for (b, a) in before.iter().zip(&after) {
            prop_assert!(a.observable_events >= b.observable_events);
        }
    }

    #[test]
    fn csv_roundtrip_is_idempotent(
        axis1 in prop::collection::vec(0..1000u32, 1..8),
        cells in prop::collection::vec((-500.0..500.0f64, 0.0..50.0f64), 1..8),
        replicates in 1..100u32,
    ) {
        let n = axis1.len().min(cells.len());
        let mut values: Vec<f64> = axis1.iter().take(n).map(|&v| v as f64).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        let result = SweepResult {
            axis1: AxisGrid::new("nurse_capacity", values.clone()),
            axis2: None,
            replicates,
            cells: cells
                .iter()
                .take(values.len())
                .map(|&(m, s)| SweepCell { mean_pct: m, stderr_pct: s })
                .collect(),
        };
        let mut first = Vec::new();
        emit_csv(&result, &mut first).unwrap();
        let parsed = parse_csv(std::str::from_utf8(&first).unwrap(), "nurse_capacity", "").unwrap();
        let mut second = Vec::new();
        emit_csv(&parsed, &mut second).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn calibration_is_monotone(a in 0.5f64..0.99, delta in 0.001f64..0.2) {
        let b = (a + delta).min(0.999);
        prop_assert!(calibrate_separation(a).unwrap() <= calibrate_separation(b).unwrap());
    }

    #[test]
    fn doubling_unit_money_doubles_margins(
        volume in 1.0..50_000.0f64,
        rev_tp in 0.0..10_000.0f64,
        rev_fp in 0.0..2_000.0f64,
        cost in 0.0..5_000.0f64,
    ) {
        let model = FinancialModel {
            horizon_years: 4,
            volume_y0: volume,
            volume_growth: 0.03,
            retention_rate: 0.8,
            flag_rate: 0.1,
            ppv: 0.5,
            revenue_per_true_positive: rev_tp,
            revenue_per_false_positive: rev_fp,
            cost_fixed_y0: cost * 10.0,
            cost_maintenance: cost,
            cost_per_intervention: cost / 10.0,
            operating_cost_rate: 0.2,
            inflation_rate: 0.01,
        };
        let mut doubled = model.clone();
        doubled.revenue_per_true_positive *= 2.0;
        doubled.revenue_per_false_positive *= 2.0;
        doubled.cost_fixed_y0 *= 2.0;
        doubled.cost_maintenance *= 2.0;
        doubled.cost_per_intervention *= 2.0;
        let base = project_cashflow(&model).unwrap();
        let twice = project_cashflow(&doubled).unwrap();
        for (a, b) in base.years.iter().zip(&twice.years) {
            prop_assert_eq!(2.0 * a.margin, b.margin);
        }
    }

    #[test]
    fn optimal_outcome_never_below_untreated(
        cells in prop::collection::vec(0.0..=1.0f64, 9..=9)
    ) {
        let mut spec: Vec<(DiseaseState, Outcome, f64)> = Vec::new();
        let mut idx = 0;
        for state in DiseaseState::ALL {
            for outcome in Outcome::ALL {
                let v = if state == DiseaseState::NoDisease && outcome == Outcome::Untreated {
                    1.0
                } else {
                    cells[idx]
                };
                spec.push((state, outcome, v));
                idx += 1;
            }
        }
        let table = UtilityTable::from_cells(&spec).unwrap();
        for state in DiseaseState::ALL {
            let best = caliper_core::workflow::optimal_outcome(&table, state);
            for outcome in Outcome::ALL {
                prop_assert!(
                    lookup_utility(&table, state, best) >= lookup_utility(&table, state, outcome)
                );
            }
        }
    }
}
