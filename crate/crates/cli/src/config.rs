//! TOML run configuration: one documented schema, unknown keys rejected.
//!
//! Sections are independently validatable; each command reads only the
//! sections it needs. Conversion into core types happens here so every
//! range/shape error surfaces as a validation failure before any work runs.

use anyhow::{bail, Context};
use caliper_core::cohort::{ClassifierSpec, CohortSpec};
use caliper_core::finance::FinancialModel;
use caliper_core::sim::{SimConfig, Strategy};
use caliper_core::workflow::{
    DiseaseState, Outcome, UtilityTable, ValidationIssue, WorkflowGraph,
};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Root seed for every stochastic path; mandatory for simulate/sweep.
    pub root_seed: u64,
    #[serde(default)]
    pub meta: MetaSection,
    pub workflow: WorkflowSection,
    pub cohort: Option<CohortSection>,
    pub simulation: Option<SimulationSection>,
    pub sweep: Option<SweepSection>,
    pub finance: Option<FinanceSection>,
    pub monitor: Option<MonitorSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaSection {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkflowSection {
    /// "builtin" derives the graph from each arm's strategy; "custom" uses
    /// the nodes/edges given here for every arm.
    #[serde(default = "default_workflow_kind")]
    pub kind: String,
    pub start: Option<String>,
    #[serde(default)]
    pub nodes: Vec<toml::Value>,
    #[serde(default)]
    pub edges: Vec<toml::Value>,
    pub utilities: Option<UtilitiesSection>,
}

fn default_workflow_kind() -> String {
    "builtin".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilitiesSection {
    pub no_disease: UtilityRow,
    pub moderate: UtilityRow,
    pub severe: UtilityRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityRow {
    pub untreated: f64,
    pub medication: f64,
    pub surgery: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortSection {
    pub n_per_day: i64,
    pub horizon_days: i64,
    #[serde(default = "default_prevalence")]
    pub prevalence: f64,
    #[serde(default = "default_severe_fraction")]
    pub severe_fraction: f64,
    pub classifier: ClassifierSection,
}

fn default_prevalence() -> f64 {
    0.10
}

fn default_severe_fraction() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum ClassifierSection {
    /// Either a target AUROC in [0.5, 1) or an explicit separation.
    Binormal { target_auroc: Option<f64>, separation: Option<f64> },
    /// Two-column labeled score file: header `label,score`, label in {0,1}.
    Empirical { path: String },
    Constant { score: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub nurse_capacity: i64,
    pub specialist_capacity: i64,
    #[serde(default)]
    pub arms: Vec<ArmSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmSection {
    pub name: String,
    pub strategy: StrategySection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum StrategySection {
    Ranked,
    Thresholded { cutoff: f64 },
    DoctorAlert { cutoff: f64, alert_read_prob: f64 },
    TreatNone,
    TreatAll,
    Optimistic,
}

impl StrategySection {
    pub fn to_core(&self) -> Strategy {
        match self {
            StrategySection::Ranked => Strategy::Ranked,
            StrategySection::Thresholded { cutoff } => Strategy::Thresholded { cutoff: *cutoff },
            StrategySection::DoctorAlert { cutoff, alert_read_prob } => Strategy::DoctorAlert {
                cutoff: *cutoff,
                alert_read_prob: *alert_read_prob,
            },
            StrategySection::TreatNone => Strategy::TreatNone,
            StrategySection::TreatAll => Strategy::TreatAll,
            StrategySection::Optimistic => Strategy::Optimistic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_replicates")]
    pub replicates: u32,
    pub capacity: Option<CapacitySweepSection>,
    pub alert_fatigue: Option<FatigueSweepSection>,
    pub heatmap: Option<HeatmapSweepSection>,
}

fn default_replicates() -> u32 {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacitySweepSection {
    pub nurse_capacities: Vec<i64>,
    pub specialist_capacity: i64,
    /// "ranked" or a cutoff for thresholded screening.
    #[serde(default)]
    pub cutoff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FatigueSweepSection {
    pub read_probs: Vec<f64>,
    pub specialist_capacity: i64,
    pub cutoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatmapSweepSection {
    pub nurse_capacities: Vec<i64>,
    pub read_probs: Vec<f64>,
    pub specialist_capacity: i64,
    pub cutoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinanceSection {
    pub horizon_years: u32,
    pub volume_y0: f64,
    pub volume_growth: f64,
    pub retention_rate: f64,
    pub flag_rate: f64,
    pub ppv: f64,
    pub revenue_per_true_positive: f64,
    pub revenue_per_false_positive: f64,
    pub cost_fixed_y0: f64,
    pub cost_maintenance: f64,
    pub cost_per_intervention: f64,
    pub operating_cost_rate: f64,
    pub inflation_rate: f64,
    #[serde(default = "default_perturbation")]
    pub sensitivity_perturbation: f64,
    pub sensitivity_target_year: Option<u32>,
}

fn default_perturbation() -> f64 {
    0.10
}

impl FinanceSection {
    pub fn to_model(&self) -> FinancialModel {
        FinancialModel {
            horizon_years: self.horizon_years,
            volume_y0: self.volume_y0,
            volume_growth: self.volume_growth,
            retention_rate: self.retention_rate,
            flag_rate: self.flag_rate,
            ppv: self.ppv,
            revenue_per_true_positive: self.revenue_per_true_positive,
            revenue_per_false_positive: self.revenue_per_false_positive,
            cost_fixed_y0: self.cost_fixed_y0,
            cost_maintenance: self.cost_maintenance,
            cost_per_intervention: self.cost_per_intervention,
            operating_cost_rate: self.operating_cost_rate,
            inflation_rate: self.inflation_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorSection {
    pub baseline_predictions: String,
    pub predictions: String,
    pub labels: String,
    pub adherence: String,
    /// Follow-up cutoff for label observability, `YYYY-MM-DD`.
    pub as_of: String,
    #[serde(default = "default_drift_threshold")]
    pub drift_threshold: f64,
    #[serde(default = "default_bin_edges")]
    pub sensitivity_bin_edges: Vec<f64>,
    /// Leading adherence intervals that form the adherence-rate baseline.
    #[serde(default = "default_adherence_baseline_intervals")]
    pub adherence_baseline_intervals: usize,
    #[serde(default = "default_retire_after")]
    pub retire_after_consecutive: u32,
}

fn default_drift_threshold() -> f64 {
    1.0
}

fn default_bin_edges() -> Vec<f64> {
    vec![0.0, 90.0, 180.0, 270.0, 365.0]
}

fn default_adherence_baseline_intervals() -> usize {
    3
}

fn default_retire_after() -> u32 {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub directory: String,
    /// "csv", "plot", or "both".
    #[serde(default = "default_format")]
    pub format: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: default_out_dir(), format: default_format() }
    }
}

fn default_out_dir() -> String {
    "out".to_string()
}

fn default_format() -> String {
    "both".to_string()
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: RunConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        config.check()?;
        let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Ok((config, base_dir))
    }

    fn check(&self) -> anyhow::Result<()> {
        match self.output.format.as_str() {
            "csv" | "plot" | "both" => {}
            other => bail!("output.format must be csv, plot, or both; got '{other}'"),
        }
        match self.workflow.kind.as_str() {
            "builtin" => {}
            "custom" => {
                if self.workflow.start.is_none() || self.workflow.nodes.is_empty() {
                    bail!("custom workflow needs start, nodes, and edges");
                }
            }
            other => bail!("workflow.kind must be builtin or custom; got '{other}'"),
        }
        Ok(())
    }

    pub fn utilities(&self) -> anyhow::Result<UtilityTable> {
        match &self.workflow.utilities {
            None => Ok(UtilityTable::pad_default()),
            Some(u) => {
                let cells = [
                    (DiseaseState::NoDisease, &u.no_disease),
                    (DiseaseState::Moderate, &u.moderate),
                    (DiseaseState::Severe, &u.severe),
                ]
                .into_iter()
                .flat_map(|(state, row)| {
                    [
                        (state, Outcome::Untreated, row.untreated),
                        (state, Outcome::Medication, row.medication),
                        (state, Outcome::Surgery, row.surgery),
                    ]
                })
                .collect::<Vec<_>>();
                UtilityTable::from_cells(&cells).map_err(|issues| {
                    anyhow::anyhow!(
                        "invalid utility table:\n{}",
                        issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("\n")
                    )
                })
            }
        }
    }

    /// Custom workflow graph, when `workflow.kind = "custom"`.
    pub fn custom_graph(&self) -> anyhow::Result<Option<WorkflowGraph>> {
        if self.workflow.kind != "custom" {
            return Ok(None);
        }
        let as_toml = toml::Value::Table({
            let mut t = toml::map::Map::new();
            t.insert("start".into(), toml::Value::String(self.workflow.start.clone().unwrap()));
            t.insert("nodes".into(), toml::Value::Array(self.workflow.nodes.clone()));
            t.insert("edges".into(), toml::Value::Array(self.workflow.edges.clone()));
            t
        });
        let graph: WorkflowGraph = as_toml
            .try_into()
            .context("parsing custom workflow nodes/edges")?;
        Ok(Some(graph))
    }

    pub fn cohort_spec(&self, base_dir: &Path) -> anyhow::Result<CohortSpec> {
        let section = self
            .cohort
            .as_ref()
            .context("config has no [cohort] section")?;
        let n_per_day = non_negative("cohort.n_per_day", section.n_per_day)?;
        let horizon_days = non_negative("cohort.horizon_days", section.horizon_days)?;
        let classifier = match &section.classifier {
            ClassifierSection::Binormal { target_auroc, separation } => {
                let separation = match (target_auroc, separation) {
                    (Some(auroc), None) => caliper_core::calibrate_separation(*auroc)
                        .map_err(|e| anyhow::anyhow!("cohort.classifier: {e}"))?,
                    (None, Some(sep)) => *sep,
                    _ => bail!(
                        "cohort.classifier: give exactly one of target_auroc or separation"
                    ),
                };
                ClassifierSpec::Binormal { separation }
            }
            ClassifierSection::Empirical { path } => load_empirical(&base_dir.join(path))?,
            ClassifierSection::Constant { score } => ClassifierSpec::Constant { score: *score },
        };
        let spec = CohortSpec {
            n_per_day,
            horizon_days,
            prevalence: section.prevalence,
            severe_fraction: section.severe_fraction,
            classifier,
            seed: self.root_seed,
        };
        spec.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
        Ok(spec)
    }

    pub fn sim_base(&self) -> anyhow::Result<SimConfig> {
        let section = self
            .simulation
            .as_ref()
            .context("config has no [simulation] section")?;
        Ok(SimConfig {
            strategy: Strategy::Ranked,
            nurse_capacity: capacity("simulation.nurse_capacity", section.nurse_capacity)?,
            specialist_capacity: capacity(
                "simulation.specialist_capacity",
                section.specialist_capacity,
            )?,
            seed: self.root_seed,
        })
    }
}

pub fn capacity(name: &str, value: i64) -> anyhow::Result<u32> {
    if value < 0 {
        // Mirrors the workflow validation error for capacities.
        bail!(
            "{name}: {}",
            ValidationIssue::NegativeCapacity { id: name.to_string(), capacity: value }
        );
    }
    u32::try_from(value).with_context(|| format!("{name} too large"))
}

fn non_negative(name: &str, value: i64) -> anyhow::Result<u32> {
    if value < 0 {
        bail!("{name} must be >= 0, got {value}");
    }
    u32::try_from(value).with_context(|| format!("{name} too large"))
}

/// Loads a two-column `label,score` file (header required) into an empirical
/// classifier.
pub fn load_empirical(path: &Path) -> anyhow::Result<ClassifierSpec> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading score file {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().context("empty score file")?;
    if header.trim() != "label,score" {
        bail!("score file {} must start with header 'label,score'", path.display());
    }
    let mut positive_scores = Vec::new();
    let mut negative_scores = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (label, score) = (fields.next(), fields.next());
        let err = || format!("score file {} line {}", path.display(), idx + 2);
        let label: u8 = label
            .unwrap_or_default()
            .trim()
            .parse()
            .with_context(err)?;
        let score: f64 = score
            .unwrap_or_default()
            .trim()
            .parse()
            .with_context(err)?;
        match label {
            0 => negative_scores.push(score),
            1 => positive_scores.push(score),
            other => bail!("{}: label must be 0 or 1, got {other}", err()),
        }
    }
    let spec = ClassifierSpec::Empirical { positive_scores, negative_scores };
    spec.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
    Ok(spec)
}
