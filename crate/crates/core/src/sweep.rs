//! Parameter grids over simulation configurations.
//!
//! Three sweep families mirror the study questions a deployment team asks:
//! how does achievable utility respond to staffing capacity, to alert
//! fatigue, and which of the two workflows wins where (incremental-gain
//! heatmap).
//!
//! Every cell/replicate gets its seed from (root seed, arm, cell index,
//! replicate index), so grids can be evaluated in any order, on any number of
//! threads, with bit-identical results. With the `parallel` feature (default)
//! cells run on the rayon pool; `ExecMode::Sequential` or building without
//! the feature runs them in order on one thread.

use crate::cohort::{generate_cohort, ClassifierSpec, CohortSpec, Patient};
use crate::seed::derive;
use crate::sim::{baseline_utilities, relative_utility, simulate, SimConfig, SimError, Strategy};
use crate::workflow::{doctor_workflow, nurse_workflow, UtilityTable, WorkflowGraph};
use serde::{Deserialize, Serialize};
use std::io::{self, Write};

/// One sweep axis: a parameter name and its ordered value grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisGrid {
    pub name: String,
    pub values: Vec<f64>,
}

impl AxisGrid {
    pub fn new(name: &str, values: Vec<f64>) -> Self {
        Self { name: name.to_string(), values }
    }

    fn validate(&self) -> Result<(), SweepError> {
        if self.values.is_empty() {
            return Err(SweepError::EmptyGrid(self.name.clone()));
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SweepError::NonIncreasingGrid(self.name.clone()));
        }
        Ok(())
    }
}

/// Inputs shared by all sweep operations.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    /// Cohort template; its `seed` is ignored in favor of per-replicate seeds
    /// derived from `root_seed`.
    pub cohort: CohortSpec,
    pub utilities: UtilityTable,
    /// Base config for the nurse-driven workflow (Ranked or Thresholded).
    pub nurse_base: SimConfig,
    /// Base config for the doctor-driven workflow (DoctorAlert).
    pub doctor_base: SimConfig,
    /// Seeded runs per cell; replicate r of every cell sees the same cohort.
    pub replicates: u32,
    pub root_seed: u64,
    pub axis1: AxisGrid,
    pub axis2: Option<AxisGrid>,
}

/// How to execute the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    /// Rayon pool when the `parallel` feature is on, sequential otherwise.
    #[default]
    Auto,
    /// Always one cell at a time, in index order.
    Sequential,
}

/// One grid cell: mean and standard error of relative utility, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub mean_pct: f64,
    pub stderr_pct: f64,
}

/// Result of a sweep: row-major cells over (axis1, axis2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis1: AxisGrid,
    pub axis2: Option<AxisGrid>,
    pub replicates: u32,
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, i: usize, j: usize) -> &SweepCell {
        let width = self.axis2.as_ref().map_or(1, |a| a.values.len());
        &self.cells[i * width + j]
    }
}

/// Alert-fatigue sweep output: the model curve, the Treat All reference curve
/// (a constant-1 classifier pushed through the same workflow), and their
/// paired per-replicate difference (model minus Treat All).
#[derive(Debug, Clone, PartialEq)]
pub struct FatigueSweep {
    pub model: SweepResult,
    pub treat_all: SweepResult,
    pub difference: SweepResult,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SweepError {
    #[error("axis '{0}' has an empty grid")]
    EmptyGrid(String),
    #[error("axis '{0}' values must be strictly increasing")]
    NonIncreasingGrid(String),
    #[error("expected axis '{expected}', found '{found}'")]
    AxisMismatch { expected: String, found: String },
    #[error("axis '{name}' value {value} is not a non-negative integer capacity")]
    BadCapacityValue { name: String, value: f64 },
    #[error("replicates must be >= 1")]
    NoReplicates,
    #[error("strategy mismatch: {0}")]
    BadStrategy(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("invalid cohort spec: {0}")]
    Cohort(String),
    #[error("malformed sweep csv at line {line}: {reason}")]
    MalformedCsv { line: usize, reason: String },
}

const COHORT_ARM: u64 = 1;
const NURSE_ARM: u64 = 2;
const DOCTOR_ARM: u64 = 3;
const TREAT_ALL_ARM: u64 = 4;

fn check_common(spec: &SweepSpec) -> Result<(), SweepError> {
    if spec.replicates < 1 {
        return Err(SweepError::NoReplicates);
    }
    spec.axis1.validate()?;
    if let Some(axis2) = &spec.axis2 {
        axis2.validate()?;
    }
    spec.cohort.validate().map_err(|e| SweepError::Cohort(e.to_string()))?;
    Ok(())
}

fn expect_axis(axis: &AxisGrid, expected: &str) -> Result<(), SweepError> {
    if axis.name != expected {
        return Err(SweepError::AxisMismatch {
            expected: expected.to_string(),
            found: axis.name.clone(),
        });
    }
    Ok(())
}

fn as_capacity(axis: &AxisGrid, value: f64) -> Result<u32, SweepError> {
    if value < 0.0 || value.fract() != 0.0 || value > u32::MAX as f64 {
        return Err(SweepError::BadCapacityValue { name: axis.name.clone(), value });
    }
    Ok(value as u32)
}

/// Replicate cohorts shared by every cell: replicate r is generated from
/// (root seed, r) with the spec's classifier (or an override).
fn replicate_cohorts(
    spec: &SweepSpec,
    classifier: Option<ClassifierSpec>,
    mode: ExecMode,
) -> Result<Vec<Vec<Patient>>, SweepError> {
    let reps = spec.replicates as usize;
    let results = map_indexed(mode, reps, |r| {
        let mut cohort_spec = spec.cohort.clone();
        if let Some(c) = &classifier {
            cohort_spec.classifier = c.clone();
        }
        cohort_spec.seed = derive(spec.root_seed, &[COHORT_ARM, r as u64]);
        generate_cohort(&cohort_spec)
    });
    results
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| SweepError::Cohort(e.to_string()))
}

/// Per-replicate relative utilities for one arm across its 1-D grid.
/// Returns `values[cell][replicate]`.
#[allow(clippy::too_many_arguments)]
fn arm_values(
    spec: &SweepSpec,
    cohorts: &[Vec<Patient>],
    arm_tag: u64,
    grid_len: usize,
    make: impl Fn(usize, u64) -> Result<(WorkflowGraph, SimConfig), SweepError> + Sync,
    mode: ExecMode,
) -> Result<Vec<Vec<f64>>, SweepError> {
    let reps = spec.replicates as usize;
    let baselines: Vec<(f64, f64)> =
        cohorts.iter().map(|c| baseline_utilities(&spec.utilities, c)).collect();
    let jobs = grid_len * reps;
    let utilities = &spec.utilities;
    let results = map_indexed(mode, jobs, |job| -> Result<f64, SweepError> {
        let (cell, rep) = (job / reps, job % reps);
        let seed = derive(spec.root_seed, &[arm_tag, cell as u64, rep as u64]);
        let (graph, config) = make(cell, seed)?;
        let result = simulate(&graph, utilities, &cohorts[rep], &config)?;
        let (u_none, u_opt) = baselines[rep];
        Ok(relative_utility(result.mean_utility, u_none, u_opt)?)
    });
    let flat: Vec<f64> = results.into_iter().collect::<Result<_, _>>()?;
    Ok(flat.chunks(reps).map(|c| c.to_vec()).collect())
}

fn summarize(values: &[Vec<f64>]) -> Vec<SweepCell> {
    values.iter().map(|reps| mean_stderr(reps)).collect()
}

fn mean_stderr(values: &[f64]) -> SweepCell {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let stderr = if values.len() < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    };
    SweepCell { mean_pct: mean, stderr_pct: stderr }
}

fn nurse_builder<'a>(
    spec: &'a SweepSpec,
    capacities: &'a [u32],
) -> Result<impl Fn(usize, u64) -> Result<(WorkflowGraph, SimConfig), SweepError> + Sync + 'a, SweepError>
{
    let ranked = match spec.nurse_base.strategy {
        Strategy::Ranked => true,
        Strategy::Thresholded { .. } => false,
        ref other => {
            return Err(SweepError::BadStrategy(format!(
                "nurse workflow sweeps need Ranked or Thresholded, got {other:?}"
            )))
        }
    };
    Ok(move |cell: usize, seed: u64| {
        let capacity = capacities[cell];
        let graph = nurse_workflow(capacity, spec.nurse_base.specialist_capacity, ranked);
        let config = SimConfig { nurse_capacity: capacity, seed, ..spec.nurse_base.clone() };
        Ok((graph, config))
    })
}

fn doctor_builder<'a>(
    spec: &'a SweepSpec,
    read_probs: &'a [f64],
) -> Result<impl Fn(usize, u64) -> Result<(WorkflowGraph, SimConfig), SweepError> + Sync + 'a, SweepError>
{
    let cutoff = match spec.doctor_base.strategy {
        Strategy::DoctorAlert { cutoff, .. } => cutoff,
        ref other => {
            return Err(SweepError::BadStrategy(format!(
                "alert-fatigue sweeps need DoctorAlert, got {other:?}"
            )))
        }
    };
    Ok(move |cell: usize, seed: u64| {
        let graph = doctor_workflow(spec.doctor_base.specialist_capacity);
        let config = SimConfig {
            strategy: Strategy::DoctorAlert { cutoff, alert_read_prob: read_probs[cell] },
            seed,
            ..spec.doctor_base.clone()
        };
        Ok((graph, config))
    })
}

/// Relative utility of the nurse-driven workflow across nurse capacities
/// (axis1 = `nurse_capacity`).
pub fn sweep_capacity(spec: &SweepSpec) -> Result<SweepResult, SweepError> {
    sweep_capacity_with_mode(spec, ExecMode::Auto)
}

pub fn sweep_capacity_with_mode(
    spec: &SweepSpec,
    mode: ExecMode,
) -> Result<SweepResult, SweepError> {
    check_common(spec)?;
    expect_axis(&spec.axis1, "nurse_capacity")?;
    let capacities: Vec<u32> = spec
        .axis1
        .values
        .iter()
        .map(|&v| as_capacity(&spec.axis1, v))
        .collect::<Result<_, _>>()?;
    let cohorts = replicate_cohorts(spec, None, mode)?;
    let make = nurse_builder(spec, &capacities)?;
    let values = arm_values(spec, &cohorts, NURSE_ARM, capacities.len(), make, mode)?;
    Ok(SweepResult {
        axis1: spec.axis1.clone(),
        axis2: None,
        replicates: spec.replicates,
        cells: summarize(&values),
    })
}

/// Relative utility of the doctor-driven workflow across alert-read
/// probabilities (axis1 = `alert_read_prob`), with a Treat All reference
/// curve and the paired model-minus-Treat-All difference.
pub fn sweep_alert_fatigue(spec: &SweepSpec) -> Result<FatigueSweep, SweepError> {
    sweep_alert_fatigue_with_mode(spec, ExecMode::Auto)
}

pub fn sweep_alert_fatigue_with_mode(
    spec: &SweepSpec,
    mode: ExecMode,
) -> Result<FatigueSweep, SweepError> {
    check_common(spec)?;
    expect_axis(&spec.axis1, "alert_read_prob")?;
    let read_probs = &spec.axis1.values;
    if read_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(SweepError::BadStrategy("alert_read_prob values must lie in [0, 1]".into()));
    }

    let model_cohorts = replicate_cohorts(spec, None, mode)?;
    let make = doctor_builder(spec, read_probs)?;
    let model_values =
        arm_values(spec, &model_cohorts, DOCTOR_ARM, read_probs.len(), make, mode)?;

    // Treat All: the same workflow fed by a constant-1 classifier. Replicate
    // seeds match, so true states pair up with the model arm.
    let all_cohorts =
        replicate_cohorts(spec, Some(ClassifierSpec::Constant { score: 1.0 }), mode)?;
    let make = doctor_builder(spec, read_probs)?;
    let all_values =
        arm_values(spec, &all_cohorts, TREAT_ALL_ARM, read_probs.len(), make, mode)?;

    let diff_values: Vec<Vec<f64>> = model_values
        .iter()
        .zip(&all_values)
        .map(|(m, t)| m.iter().zip(t).map(|(a, b)| a - b).collect())
        .collect();

    let result = |values: &[Vec<f64>]| SweepResult {
        axis1: spec.axis1.clone(),
        axis2: None,
        replicates: spec.replicates,
        cells: summarize(values),
    };
    Ok(FatigueSweep {
        model: result(&model_values),
        treat_all: result(&all_values),
        difference: result(&diff_values),
    })
}

/// Incremental gain of the nurse-driven workflow at capacity i over the
/// doctor-driven workflow at read probability j: cell(i, j) is the paired
/// per-replicate mean of rel(nurse, i) - rel(doctor, j), positive when the
/// nurse-driven workflow is preferable.
pub fn incremental_gain_heatmap(spec: &SweepSpec) -> Result<SweepResult, SweepError> {
    incremental_gain_heatmap_with_mode(spec, ExecMode::Auto)
}

pub fn incremental_gain_heatmap_with_mode(
    spec: &SweepSpec,
    mode: ExecMode,
) -> Result<SweepResult, SweepError> {
    check_common(spec)?;
    expect_axis(&spec.axis1, "nurse_capacity")?;
    let axis2 = spec.axis2.as_ref().ok_or_else(|| SweepError::AxisMismatch {
        expected: "alert_read_prob".into(),
        found: "(missing axis2)".into(),
    })?;
    expect_axis(axis2, "alert_read_prob")?;

    let capacities: Vec<u32> = spec
        .axis1
        .values
        .iter()
        .map(|&v| as_capacity(&spec.axis1, v))
        .collect::<Result<_, _>>()?;
    let read_probs = &axis2.values;

    let cohorts = replicate_cohorts(spec, None, mode)?;
    let make = nurse_builder(spec, &capacities)?;
    let nurse_values = arm_values(spec, &cohorts, NURSE_ARM, capacities.len(), make, mode)?;
    let make = doctor_builder(spec, read_probs)?;
    let doctor_values = arm_values(spec, &cohorts, DOCTOR_ARM, read_probs.len(), make, mode)?;

    let reps = spec.replicates as usize;
    let mut cells = Vec::with_capacity(capacities.len() * read_probs.len());
    for nurse in &nurse_values {
        for doctor in &doctor_values {
            let diffs: Vec<f64> = (0..reps).map(|r| nurse[r] - doctor[r]).collect();
            cells.push(mean_stderr(&diffs));
        }
    }
    Ok(SweepResult {
        axis1: spec.axis1.clone(),
        axis2: Some(axis2.clone()),
        replicates: spec.replicates,
        cells,
    })
}

/// Smallest axis1 value from which the curve stays within `tolerance_pct` of
/// its final cell; None if even the last point is alone in that band.
pub fn saturation_point(result: &SweepResult, tolerance_pct: f64) -> Option<f64> {
    let last = result.cells.last()?.mean_pct;
    let mut saturated_from = None;
    for (value, cell) in result.axis1.values.iter().zip(&result.cells) {
        if (cell.mean_pct - last).abs() <= tolerance_pct {
            if saturated_from.is_none() {
                saturated_from = Some(*value);
            }
        } else {
            saturated_from = None;
        }
    }
    saturated_from
}

/// Writes the pinned CSV form: header
/// `axis1,axis2,mean_relative_utility_pct,stderr_pct,replicates`, rows in
/// row-major grid order, six fractional digits. Byte-identical across runs
/// with equal inputs.
pub fn emit_csv<W: Write>(result: &SweepResult, mut writer: W) -> io::Result<()> {
    writeln!(writer, "axis1,axis2,mean_relative_utility_pct,stderr_pct,replicates")?;
    let axis2 = result.axis2.as_ref().map(|a| a.values.as_slice()).unwrap_or(&[]);
    for (i, &a1) in result.axis1.values.iter().enumerate() {
        if axis2.is_empty() {
            let cell = result.cell(i, 0);
            writeln!(
                writer,
                "{a1:.6},,{:.6},{:.6},{}",
                cell.mean_pct, cell.stderr_pct, result.replicates
            )?;
        } else {
            for (j, &a2) in axis2.iter().enumerate() {
                let cell = result.cell(i, j);
                writeln!(
                    writer,
                    "{a1:.6},{a2:.6},{:.6},{:.6},{}",
                    cell.mean_pct, cell.stderr_pct, result.replicates
                )?;
            }
        }
    }
    Ok(())
}

/// Parses the CSV form back into a result. Axis names are not stored in the
/// file, so they come back as the given names.
pub fn parse_csv(
    text: &str,
    axis1_name: &str,
    axis2_name: &str,
) -> Result<SweepResult, SweepError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or(SweepError::MalformedCsv { line: 1, reason: "empty file".into() })?;
    if header != "axis1,axis2,mean_relative_utility_pct,stderr_pct,replicates" {
        return Err(SweepError::MalformedCsv { line: 1, reason: "unexpected header".into() });
    }
    let mut axis1 = Vec::new();
    let mut axis2 = Vec::new();
    let mut cells = Vec::new();
    let mut replicates = 1u32;
    let mut has_axis2 = false;
    for (idx, line) in lines {
        let line_no = idx + 1;
        let bad = |reason: &str| SweepError::MalformedCsv {
            line: line_no,
            reason: reason.to_string(),
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(bad("expected 5 fields"));
        }
        let a1: f64 = fields[0].parse().map_err(|_| bad("bad axis1 value"))?;
        if axis1.last() != Some(&a1) && !axis1.contains(&a1) {
            axis1.push(a1);
        }
        if !fields[1].is_empty() {
            has_axis2 = true;
            let a2: f64 = fields[1].parse().map_err(|_| bad("bad axis2 value"))?;
            if !axis2.contains(&a2) {
                axis2.push(a2);
            }
        }
        cells.push(SweepCell {
            mean_pct: fields[2].parse().map_err(|_| bad("bad mean"))?,
            stderr_pct: fields[3].parse().map_err(|_| bad("bad stderr"))?,
        });
        replicates = fields[4].parse().map_err(|_| bad("bad replicates"))?;
    }
    if cells.is_empty() {
        return Err(SweepError::MalformedCsv { line: 2, reason: "no data rows".into() });
    }
    Ok(SweepResult {
        axis1: AxisGrid::new(axis1_name, axis1),
        axis2: has_axis2.then(|| AxisGrid::new(axis2_name, axis2)),
        replicates,
        cells,
    })
}

#[cfg(feature = "parallel")]
fn map_indexed<T: Send>(
    mode: ExecMode,
    n: usize,
    f: impl Fn(usize) -> T + Sync + Send,
) -> Vec<T> {
    use rayon::prelude::*;
    match mode {
        ExecMode::Auto => (0..n).into_par_iter().map(f).collect(),
        ExecMode::Sequential => (0..n).map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn map_indexed<T: Send>(
    _mode: ExecMode,
    n: usize,
    f: impl Fn(usize) -> T + Sync + Send,
) -> Vec<T> {
    (0..n).map(f).collect()
}
