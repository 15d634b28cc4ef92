//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its elapsed time (visible with `--nocapture`). Tolerances are pinned in
//! the assertions.

use caliper_core::cohort::{
    auroc, calibrate_separation, generate_cohort, ClassifierSpec, CohortSpec,
};
use caliper_core::finance::{
    littles_law, project_cashflow, sensitivity_analysis, FinancialModel, Rate, TimeInSystem,
    TimeUnit,
};
use caliper_core::monitor::{
    adherence_metrics, build_baseline, check_drift, time_stratified_sensitivity,
    LabeledPrediction, ObservationWindow, SeriesKey,
};
use caliper_core::seed::derive;
use caliper_core::sim::{
    baseline_utilities, relative_utility, simulate, simulate_with_baselines, SimConfig, Strategy,
};
use caliper_core::sweep::{
    emit_csv, incremental_gain_heatmap, sweep_alert_fatigue, sweep_capacity, AxisGrid, ExecMode,
    SweepResult, SweepSpec,
};
use caliper_core::workflow::{
    lookup_utility, nurse_workflow, optimal_outcome, DiseaseState, Outcome, UtilityTable,
};
use std::collections::BTreeMap;
use std::time::Instant;

fn pad_cohort_spec(target_auroc: f64, seed: u64) -> CohortSpec {
    CohortSpec {
        n_per_day: 100,
        horizon_days: 100,
        prevalence: 0.10,
        severe_fraction: 0.5,
        classifier: ClassifierSpec::Binormal {
            separation: calibrate_separation(target_auroc).unwrap(),
        },
        seed,
    }
}

fn pad_sweep_spec(specialist_capacity: u32, replicates: u32, root_seed: u64) -> SweepSpec {
    SweepSpec {
        cohort: pad_cohort_spec(0.9, 0),
        utilities: UtilityTable::pad_default(),
        nurse_base: SimConfig {
            strategy: Strategy::Ranked,
            nurse_capacity: 0,
            specialist_capacity,
            seed: 0,
        },
        doctor_base: SimConfig {
            strategy: Strategy::DoctorAlert { cutoff: 0.5, alert_read_prob: 0.0 },
            nurse_capacity: 0,
            specialist_capacity,
            seed: 0,
        },
        replicates,
        root_seed,
        axis1: AxisGrid::new("nurse_capacity", vec![0.0]),
        axis2: None,
    }
}

fn finish(criterion: u32, name: &str, start: Instant, budget_secs: f64) {
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        elapsed < budget_secs,
        "criterion {criterion} exceeded its {budget_secs}s budget: {elapsed:.1}s"
    );
    println!("ACCEPTANCE {criterion:02} {name}: PASS ({elapsed:.2}s)");
}

#[test]
fn acceptance_01_baseline_anchoring() {
    let start = Instant::now();
    let utilities = UtilityTable::pad_default();
    for seed in [1u64, 99, 123_456_789] {
        let cohort = generate_cohort(&CohortSpec {
            n_per_day: 50,
            horizon_days: 20,
            seed,
            ..pad_cohort_spec(0.9, seed)
        })
        .unwrap();
        let graph = nurse_workflow(5, 2, true);
        let base =
            SimConfig { strategy: Strategy::Ranked, nurse_capacity: 5, specialist_capacity: 2, seed };

        let none = simulate_with_baselines(
            &graph,
            &utilities,
            &cohort,
            &SimConfig { strategy: Strategy::TreatNone, ..base.clone() },
        )
        .unwrap();
        assert_eq!(none.relative_utility, Some(0.0), "treat-none must anchor at exactly 0%");

        let optimistic = simulate_with_baselines(
            &graph,
            &utilities,
            &cohort,
            &SimConfig { strategy: Strategy::Optimistic, ..base },
        )
        .unwrap();
        let rel = optimistic.relative_utility.unwrap();
        assert!((rel - 100.0).abs() <= 1e-6, "optimistic anchored at {rel}, expected 100 +- 1e-6");
    }
    finish(1, "baseline anchoring", start, 5.0);
}

#[test]
fn acceptance_02_utility_table_fidelity() {
    let start = Instant::now();
    let t = UtilityTable::pad_default();
    let stated = [
        (DiseaseState::NoDisease, Outcome::Untreated, 1.0),
        (DiseaseState::NoDisease, Outcome::Medication, 0.95),
        (DiseaseState::Moderate, Outcome::Medication, 0.9),
        (DiseaseState::Moderate, Outcome::Untreated, 0.85),
        (DiseaseState::NoDisease, Outcome::Surgery, 0.7),
        (DiseaseState::Severe, Outcome::Surgery, 0.68),
        (DiseaseState::Severe, Outcome::Untreated, 0.6),
    ];
    for (state, outcome, expected) in stated {
        assert_eq!(lookup_utility(&t, state, outcome), expected);
    }
    assert_eq!(optimal_outcome(&t, DiseaseState::NoDisease), Outcome::Untreated);
    assert_eq!(optimal_outcome(&t, DiseaseState::Moderate), Outcome::Medication);
    assert_eq!(optimal_outcome(&t, DiseaseState::Severe), Outcome::Surgery);
    finish(2, "utility table fidelity", start, 1.0);
}

#[test]
fn acceptance_03_capacity_saturation() {
    let start = Instant::now();
    let mut spec = pad_sweep_spec(2, 20, 77);
    spec.axis1 =
        AxisGrid::new("nurse_capacity", (0..=10).map(|c| c as f64).collect());
    let result = sweep_capacity(&spec).unwrap();

    for (i, pair) in result.cells.windows(2).enumerate() {
        assert!(
            pair[1].mean_pct >= pair[0].mean_pct - 1e-9,
            "relative utility decreased from capacity {i} to {}",
            i + 1
        );
    }
    // Flat within one percentage point across capacities 4..=10.
    let plateau: Vec<f64> = result.cells[4..=10].iter().map(|c| c.mean_pct).collect();
    let (lo, hi) = plateau
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    assert!(hi - lo < 1.0, "plateau spans {lo:.3}..{hi:.3}, more than 1 percentage point");
    finish(3, "capacity saturation", start, 120.0);
}

#[test]
fn acceptance_04_alert_fatigue_crossing() {
    let start = Instant::now();
    let mut spec = pad_sweep_spec(2, 20, 78);
    spec.axis1 = AxisGrid::new("alert_read_prob", (0..=10).map(|p| p as f64 / 10.0).collect());
    let sweep = sweep_alert_fatigue(&spec).unwrap();

    // Paired model-minus-treat-all differences; "above" means > 2 SE.
    let above: Vec<bool> = sweep
        .difference
        .cells
        .iter()
        .map(|c| c.mean_pct > 2.0 * c.stderr_pct && c.mean_pct > 0.0)
        .collect();
    let crossing = above.iter().position(|&a| a);
    let crossing = crossing.expect("model never exceeded treat-all by more than 2 SE");
    assert!(crossing > 0, "model already above treat-all at read probability 0");
    assert!(
        above[crossing..].iter().all(|&a| a),
        "model fell back below treat-all after the crossing: {above:?}"
    );
    assert!(
        !above[..crossing].iter().any(|&a| a),
        "inconsistent crossing pattern: {above:?}"
    );
    finish(4, "alert fatigue crossing", start, 120.0);
}

#[test]
fn acceptance_05_heatmap_monotonicity() {
    let start = Instant::now();
    let mut spec = pad_sweep_spec(5, 20, 79);
    spec.axis1 = AxisGrid::new("nurse_capacity", (0..=8).map(|c| c as f64).collect());
    spec.axis2 = Some(AxisGrid::new("alert_read_prob", vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]));
    let result = incremental_gain_heatmap(&spec).unwrap();

    let rows = result.axis1.values.len();
    let cols = result.axis2.as_ref().unwrap().values.len();
    let two_se = |i1: usize, j1: usize, i2: usize, j2: usize| {
        let a = result.cell(i1, j1).stderr_pct;
        let b = result.cell(i2, j2).stderr_pct;
        2.0 * (a * a + b * b).sqrt()
    };
    // Down each column: more nurse capacity never hurts.
    for j in 0..cols {
        for i in 0..rows - 1 {
            let lo = result.cell(i, j).mean_pct;
            let hi = result.cell(i + 1, j).mean_pct;
            assert!(
                hi >= lo - two_se(i, j, i + 1, j),
                "gain decreased with capacity at column {j}: {lo:.3} -> {hi:.3}"
            );
        }
    }
    // Along each row: doctors reading more alerts never favors nurses more.
    for i in 0..rows {
        for j in 0..cols - 1 {
            let lo = result.cell(i, j + 1).mean_pct;
            let hi = result.cell(i, j).mean_pct;
            assert!(
                hi >= lo - two_se(i, j, i, j + 1),
                "gain increased with read probability at row {i}: {hi:.3} -> {lo:.3}"
            );
        }
    }
    // Degenerate corner: both arms collapse to treat-none.
    let corner = result.cell(0, 0);
    assert!(
        corner.mean_pct.abs() <= f64::max(2.0 * corner.stderr_pct, 1e-9),
        "corner gain {} not within 2 SE of zero",
        corner.mean_pct
    );
    finish(5, "heatmap monotonicity", start, 300.0);
}

#[test]
fn acceptance_06_model_quality_ordering() {
    let start = Instant::now();
    let utilities = UtilityTable::pad_default();
    let replicates = 20;
    let root = 80u64;

    let mut summaries = Vec::new();
    for (slot, target) in [0.65, 0.80, 0.95].into_iter().enumerate() {
        let mut values = Vec::with_capacity(replicates);
        for rep in 0..replicates {
            // Same per-replicate cohort seed across classifiers: the true
            // states pair up, only the scores differ.
            let cohort = generate_cohort(&pad_cohort_spec(
                target,
                derive(root, &[1, rep as u64]),
            ))
            .unwrap();
            let graph = nurse_workflow(5, 2, true);
            let config = SimConfig {
                strategy: Strategy::Ranked,
                nurse_capacity: 5,
                specialist_capacity: 2,
                seed: derive(root, &[2, slot as u64, rep as u64]),
            };
            let result = simulate(&graph, &utilities, &cohort, &config).unwrap();
            let (u_none, u_opt) = baseline_utilities(&utilities, &cohort);
            values.push(relative_utility(result.mean_utility, u_none, u_opt).unwrap());
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        summaries.push((target, mean, (var / n).sqrt()));
    }
    for pair in summaries.windows(2) {
        let (a_target, a_mean, a_se) = pair[0];
        let (b_target, b_mean, b_se) = pair[1];
        let two_se = 2.0 * (a_se * a_se + b_se * b_se).sqrt();
        assert!(
            b_mean >= a_mean - two_se,
            "relative utility not non-decreasing in model quality: \
             auroc {a_target} -> {a_mean:.3}%, auroc {b_target} -> {b_mean:.3}%"
        );
    }
    finish(6, "model quality ordering", start, 120.0);
}

#[test]
fn acceptance_07_auroc_oracle_and_calibration() {
    let start = Instant::now();

    // Exact equivalence with the O(n^2) pairwise count, ties = 1/2.
    fn brute_force(scores: &[f64], labels: &[bool]) -> f64 {
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
    let mut state = 0x243f_6a88_85a3_08d3u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    for case in 0..100 {
        let n = 2 + (next() % 199) as usize;
        let scores: Vec<f64> = (0..n).map(|_| (next() % 21) as f64 / 20.0).collect();
        let mut labels: Vec<bool> = (0..n).map(|_| next() % 5 < 2).collect();
        if !labels.contains(&true) {
            labels[0] = true;
        }
        if !labels.contains(&false) {
            labels[n - 1] = false;
        }
        assert_eq!(
            auroc(&scores, &labels).unwrap(),
            brute_force(&scores, &labels),
            "case {case} mismatch (n={n})"
        );
    }

    // Binormal calibration at cohort scale: 100k patients, balanced classes.
    for (i, target) in [0.6, 0.75, 0.9].into_iter().enumerate() {
        let cohort = generate_cohort(&CohortSpec {
            n_per_day: 1000,
            horizon_days: 100,
            prevalence: 0.5,
            severe_fraction: 0.5,
            classifier: ClassifierSpec::Binormal {
                separation: calibrate_separation(target).unwrap(),
            },
            seed: 9000 + i as u64,
        })
        .unwrap();
        let scores: Vec<f64> = cohort.iter().map(|p| p.risk_score).collect();
        let labels: Vec<bool> =
            cohort.iter().map(|p| p.true_state != DiseaseState::NoDisease).collect();
        let empirical = auroc(&scores, &labels).unwrap();
        assert!(
            (empirical - target).abs() <= 0.005,
            "target {target}: empirical auroc {empirical:.4} off by more than 0.005"
        );
    }
    finish(7, "auroc oracle and calibration", start, 30.0);
}

#[test]
fn acceptance_08_littles_law() {
    let start = Instant::now();
    let in_flight = littles_law(
        Rate { value: 1.0, unit: TimeUnit::Month },
        TimeInSystem { value: 2.0, unit: TimeUnit::Month },
    )
    .unwrap();
    assert_eq!(in_flight, 2.0);
    finish(8, "little's law", start, 1.0);
}

#[test]
fn acceptance_09_finance() {
    let start = Instant::now();

    // Accounting identity to 1e-6 relative on a fully loaded model.
    let model = FinancialModel {
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
    };
    let flow = project_cashflow(&model).unwrap();
    for y in &flow.years {
        let identity_gap = (y.margin - (y.revenue - y.cost)).abs();
        assert!(identity_gap <= 1e-6 * y.revenue.abs().max(1.0));
        // Retention 0.76 with zero growth would compound as 0.76^y; with
        // growth g the volume is volume_y0 * ((1+g) * 0.76)^y.
    }
    let no_growth = FinancialModel { volume_growth: 0.0, ..model.clone() };
    let flow = project_cashflow(&no_growth).unwrap();
    for y in &flow.years {
        let expected = 20_000.0 * 0.76_f64.powi(y.year as i32);
        assert!((y.volume - expected).abs() <= 1e-6 * expected);
    }

    // Ranking vs an independent brute force on a six-parameter example
    // (six live channels; volume_y0 and flag_rate are algebraically tied,
    // so comparison is modulo tie groups at 1e-9 relative).
    let example = FinancialModel {
        horizon_years: 5,
        volume_y0: 1000.0,
        volume_growth: 0.0,
        retention_rate: 1.0,
        flag_rate: 0.2,
        ppv: 0.5,
        revenue_per_true_positive: 1000.0,
        revenue_per_false_positive: 200.0,
        cost_fixed_y0: 0.0,
        cost_maintenance: 10_000.0,
        cost_per_intervention: 150.0,
        operating_cost_rate: 0.0,
        inflation_rate: 0.0,
    };
    let report = sensitivity_analysis(&example, 0.10, 5).unwrap();

    // Brute force: rebuild each bumped model by hand and recompute the
    // margin from the raw formula.
    let margin_of = |m: &FinancialModel| {
        let volume = m.volume_y0 * (1.0 + m.volume_growth).powi(5) * m.retention_rate.powi(5);
        let flagged = volume * m.flag_rate;
        let tp = flagged * m.ppv;
        let fp = flagged - tp;
        let infl = (1.0 + m.inflation_rate).powi(5);
        let revenue = (tp * m.revenue_per_true_positive + fp * m.revenue_per_false_positive) * infl;
        revenue
            - (m.cost_maintenance * infl
                + flagged * m.cost_per_intervention * infl
                + m.operating_cost_rate * revenue)
    };
    let base = margin_of(&example);
    let bump = |field: &str| {
        let mut m = example.clone();
        match field {
            "volume_y0" => m.volume_y0 *= 1.1,
            "volume_growth" => m.volume_growth *= 1.1,
            "retention_rate" => m.retention_rate *= 1.1,
            "flag_rate" => m.flag_rate *= 1.1,
            "ppv" => m.ppv *= 1.1,
            "revenue_per_true_positive" => m.revenue_per_true_positive *= 1.1,
            "revenue_per_false_positive" => m.revenue_per_false_positive *= 1.1,
            "cost_fixed_y0" => m.cost_fixed_y0 *= 1.1,
            "cost_maintenance" => m.cost_maintenance *= 1.1,
            "cost_per_intervention" => m.cost_per_intervention *= 1.1,
            "operating_cost_rate" => m.operating_cost_rate *= 1.1,
            "inflation_rate" => m.inflation_rate *= 1.1,
            other => panic!("unknown field {other}"),
        }
        (margin_of(&m) - base).abs()
    };
    for entry in &report.entries {
        let expected = bump(&entry.parameter);
        assert!(
            (entry.delta_abs.abs() - expected).abs() <= 1e-9 * (1.0 + expected),
            "{}: impl delta {} vs oracle {expected}",
            entry.parameter,
            entry.delta_abs
        );
    }
    for pair in report.entries.windows(2) {
        let earlier = bump(&pair[0].parameter);
        let later = bump(&pair[1].parameter);
        assert!(
            earlier >= later - 1e-9 * (1.0 + later),
            "ranking disagrees with brute force: {} before {}",
            pair[0].parameter,
            pair[1].parameter
        );
    }
    finish(9, "finance", start, 1.0);
}

#[test]
fn acceptance_10_monitoring() {
    let start = Instant::now();

    // Drift: baseline mean 10, population std 2.
    let mut samples = BTreeMap::new();
    samples.insert(SeriesKey::new("feature", ""), vec![8.0, 12.0]);
    let baseline = build_baseline(&samples, "test").unwrap();
    let window = |mean: f64| ObservationWindow {
        key: SeriesKey::new("feature", ""),
        values: vec![mean],
        interval: "m".into(),
    };
    assert!(check_drift(&window(13.0), &baseline, 1.0).unwrap().is_some()); // +1.5 sigma
    assert!(check_drift(&window(11.0), &baseline, 1.0).unwrap().is_none()); // +0.5 sigma
    assert!(check_drift(&window(12.0), &baseline, 1.0).unwrap().is_none()); // exactly 1.0 sigma

    // Hand-built six-record sensitivity fixture.
    let pred = |id: u64, positive: bool, tte: Option<f64>, horizon: f64| LabeledPrediction {
        patient_id: id,
        predicted_positive: positive,
        time_to_event: tte,
        analysis_horizon: horizon,
    };
    let preds = vec![
        pred(1, true, Some(30.0), 365.0),
        pred(2, false, Some(60.0), 365.0),
        pred(3, true, Some(120.0), 365.0),
        pred(4, true, Some(200.0), 90.0), // beyond horizon: censored
        pred(5, false, None, 365.0),
        pred(6, true, Some(300.0), 365.0),
    ];
    let bins = time_stratified_sensitivity(&preds, &[0.0, 90.0, 180.0, 365.0]).unwrap();
    assert_eq!(
        bins.iter().map(|b| (b.observable_events, b.sensitivity)).collect::<Vec<_>>(),
        vec![(2, Some(0.5)), (1, Some(1.0)), (1, Some(1.0))]
    );

    let adherence = adherence_metrics(100, 80, 40).unwrap();
    assert_eq!(adherence.uptake, Some(0.8));
    assert_eq!(adherence.adoption, Some(0.5));

    finish(10, "monitoring", start, 1.0);
}

#[test]
fn acceptance_11_determinism() {
    let start = Instant::now();

    // simulate: identical runs produce identical results.
    let utilities = UtilityTable::pad_default();
    let cohort = generate_cohort(&pad_cohort_spec(0.9, 5)).unwrap();
    let graph = nurse_workflow(4, 2, false);
    let config = SimConfig {
        strategy: Strategy::Thresholded { cutoff: 0.5 },
        nurse_capacity: 4,
        specialist_capacity: 2,
        seed: 5,
    };
    assert_eq!(
        simulate(&graph, &utilities, &cohort, &config).unwrap(),
        simulate(&graph, &utilities, &cohort, &config).unwrap()
    );

    // sweep: byte-identical CSV, sequential vs auto, and across rayon pool
    // sizes when the parallel feature is active.
    let mut spec = pad_sweep_spec(2, 5, 81);
    spec.cohort.n_per_day = 50;
    spec.cohort.horizon_days = 20;
    spec.axis1 = AxisGrid::new("nurse_capacity", (0..=6).map(|c| c as f64).collect());

    let bytes = |result: &SweepResult| {
        let mut buf = Vec::new();
        emit_csv(result, &mut buf).unwrap();
        buf
    };
    let sequential =
        bytes(&caliper_core::sweep::sweep_capacity_with_mode(&spec, ExecMode::Sequential).unwrap());
    let auto = bytes(&sweep_capacity(&spec).unwrap());
    assert_eq!(sequential, auto, "sequential and auto execution diverged");

    #[cfg(feature = "parallel")]
    {
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| bytes(&sweep_capacity(&spec).unwrap()));
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap()
            .install(|| bytes(&sweep_capacity(&spec).unwrap()));
        assert_eq!(single, many, "thread count changed the sweep output");
        assert_eq!(single, sequential, "thread pool output diverged from sequential");
    }

    // Alert-fatigue sweep repeats byte-identically too (random draws live in
    // per-(cell, replicate) substreams).
    let mut fatigue = pad_sweep_spec(2, 5, 82);
    fatigue.cohort.n_per_day = 50;
    fatigue.cohort.horizon_days = 20;
    fatigue.axis1 = AxisGrid::new("alert_read_prob", vec![0.0, 0.5, 1.0]);
    let a = sweep_alert_fatigue(&fatigue).unwrap();
    let b = sweep_alert_fatigue(&fatigue).unwrap();
    assert_eq!(bytes(&a.model), bytes(&b.model));
    assert_eq!(bytes(&a.treat_all), bytes(&b.treat_all));

    finish(11, "determinism", start, 60.0);
}
