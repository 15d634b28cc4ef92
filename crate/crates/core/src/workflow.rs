//! Workflow state-machine data model and utility semantics of terminal outcomes.
//!
//! A [`WorkflowGraph`] is a declarative description of one model-guided
//! screening pathway: patients enter at the single start node, flow through
//! decision points (score thresholds, Bernoulli draws) and capacity-constrained
//! resources, and end at a terminal treatment outcome. A [`UtilityTable`] maps
//! each (true disease state, terminal outcome) pair to a utility multiplier on
//! remaining years living.

use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

/// True underlying condition of a patient; fixed at cohort generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiseaseState {
    NoDisease,
    Moderate,
    Severe,
}

impl DiseaseState {
    pub const ALL: [DiseaseState; 3] = [
        DiseaseState::NoDisease,
        DiseaseState::Moderate,
        DiseaseState::Severe,
    ];

    pub fn index(self) -> usize {
        match self {
            DiseaseState::NoDisease => 0,
            DiseaseState::Moderate => 1,
            DiseaseState::Severe => 2,
        }
    }
}

impl fmt::Display for DiseaseState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiseaseState::NoDisease => write!(f, "no_disease"),
            DiseaseState::Moderate => write!(f, "moderate"),
            DiseaseState::Severe => write!(f, "severe"),
        }
    }
}

/// Terminal treatment outcome. Ordered least to most invasive; surgery implies
/// prior medication, which the utility table already reflects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Untreated,
    Medication,
    Surgery,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [Outcome::Untreated, Outcome::Medication, Outcome::Surgery];

    pub fn index(self) -> usize {
        match self {
            Outcome::Untreated => 0,
            Outcome::Medication => 1,
            Outcome::Surgery => 2,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Untreated => write!(f, "untreated"),
            Outcome::Medication => write!(f, "medication"),
            Outcome::Surgery => write!(f, "surgery"),
        }
    }
}

/// Utility of each (true disease state, terminal outcome) pair, as a
/// dimensionless multiplier on remaining years living in [0, 1].
///
/// A healthy untreated patient anchors the scale at 1.0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityTable {
    cells: [[f64; 3]; 3],
    /// Cells filled by modelling assumption rather than a sourced estimate;
    /// surfaced as warnings by [`validate_workflow`].
    extrapolated: Vec<(DiseaseState, Outcome)>,
}

impl UtilityTable {
    /// Builds a table from explicit cells. All nine must be present, in [0, 1],
    /// and (NoDisease, Untreated) must equal 1.0.
    pub fn from_cells(
        cells: &[(DiseaseState, Outcome, f64)],
    ) -> Result<Self, Vec<ValidationIssue>> {
        let mut grid = [[f64::NAN; 3]; 3];
        for &(state, outcome, utility) in cells {
            grid[state.index()][outcome.index()] = utility;
        }
        let mut issues = Vec::new();
        for state in DiseaseState::ALL {
            for outcome in Outcome::ALL {
                let value = grid[state.index()][outcome.index()];
                if value.is_nan() {
                    issues.push(ValidationIssue::MissingUtilityCell { state, outcome });
                } else if !(0.0..=1.0).contains(&value) {
                    issues.push(ValidationIssue::UtilityOutOfRange { state, outcome, value });
                }
            }
        }
        if grid[0][0].is_finite() && grid[0][0] != 1.0 {
            issues.push(ValidationIssue::BaselineUtilityNotOne { value: grid[0][0] });
        }
        if issues.is_empty() {
            Ok(Self { cells: grid, extrapolated: Vec::new() })
        } else {
            Err(issues)
        }
    }

    /// Default table for the PAD screening use case.
    ///
    /// Severe-disease patients who are not operated on sit at 0.6 whether or
    /// not they receive medication; medication only shifts utility for moderate
    /// disease. Two cells have no sourced estimate and are filled by
    /// assumption: (Moderate, Surgery) reuses the severe surgery value, since
    /// surgery is the most costly outcome for every patient, and
    /// (Severe, Medication) reuses the severe no-surgery value.
    pub fn pad_default() -> Self {
        let mut table = Self::from_cells(&[
            (DiseaseState::NoDisease, Outcome::Untreated, 1.0),
            (DiseaseState::NoDisease, Outcome::Medication, 0.95),
            (DiseaseState::NoDisease, Outcome::Surgery, 0.7),
            (DiseaseState::Moderate, Outcome::Untreated, 0.85),
            (DiseaseState::Moderate, Outcome::Medication, 0.9),
            (DiseaseState::Moderate, Outcome::Surgery, 0.68),
            (DiseaseState::Severe, Outcome::Untreated, 0.6),
            (DiseaseState::Severe, Outcome::Medication, 0.6),
            (DiseaseState::Severe, Outcome::Surgery, 0.68),
        ])
        .expect("default table is complete and in range");
        table.extrapolated = vec![
            (DiseaseState::Moderate, Outcome::Surgery),
            (DiseaseState::Severe, Outcome::Medication),
        ];
        table
    }

    /// Cells that were filled by assumption rather than a sourced estimate.
    pub fn extrapolated_cells(&self) -> &[(DiseaseState, Outcome)] {
        &self.extrapolated
    }

    pub fn marked_extrapolated(mut self, cells: Vec<(DiseaseState, Outcome)>) -> Self {
        self.extrapolated = cells;
        self
    }
}

/// Returns the stored utility multiplier for a (state, outcome) pair.
pub fn lookup_utility(table: &UtilityTable, state: DiseaseState, outcome: Outcome) -> f64 {
    table.cells[state.index()][outcome.index()]
}

/// The outcome a fully informed specialist would choose for a patient in the
/// given state: the argmax of utility, ties broken toward the least invasive
/// outcome.
pub fn optimal_outcome(table: &UtilityTable, state: DiseaseState) -> Outcome {
    let mut best = Outcome::Untreated;
    let mut best_utility = lookup_utility(table, state, best);
    for outcome in [Outcome::Medication, Outcome::Surgery] {
        let utility = lookup_utility(table, state, outcome);
        if utility > best_utility {
            best = outcome;
            best_utility = utility;
        }
    }
    best
}

/// A guard parameter: either a literal value or a name resolved from the
/// simulation configuration (e.g. `"cutoff"`, `"alert_read_prob"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Literal(f64),
    Named(String),
}

impl Param {
    pub fn resolve(&self, env: &HashMap<String, f64>) -> Result<f64, ValidationIssue> {
        match self {
            Param::Literal(v) => Ok(*v),
            Param::Named(name) => env
                .get(name)
                .copied()
                .ok_or_else(|| ValidationIssue::UnresolvedParam { name: name.clone() }),
        }
    }
}

/// Edge guard. Guards are limited to three predicate families: risk-score
/// threshold tests, Bernoulli draws on a named probability, and resource
/// admission results. `Otherwise` is the complement of its sibling guard on
/// the same decision node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Guard {
    Always,
    /// risk score > threshold
    ScoreAbove { threshold: Param },
    /// risk score >= threshold
    ScoreAtLeast { threshold: Param },
    /// Bernoulli draw with the given success probability came up true
    DrawSuccess { prob: Param },
    /// Complement of the sibling score/draw guard.
    Otherwise,
    /// Patient was admitted within the resource's daily capacity.
    Admitted,
    /// Patient overflowed the resource's daily capacity.
    Rejected,
}

/// How a resource picks which of the day's arrivals to admit when over capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceOrder {
    /// Highest risk score first; ties by ascending patient id.
    ByRiskDescending,
    /// First come, first served in arrival order.
    ArrivalOrder,
    /// Uniform random subset of the day's arrivals.
    RandomUniform,
}

/// What a terminal node assigns to patients that reach it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "decision", rename_all = "snake_case")]
pub enum TerminalCare {
    /// Fixed outcome regardless of the patient's true state.
    Fixed { outcome: Outcome },
    /// The utility-maximizing outcome for the patient's true state; models a
    /// specialist with full diagnostic information.
    Optimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeKind {
    Start,
    Decision,
    Resource {
        name: String,
        daily_capacity: u32,
        service_order: ServiceOrder,
    },
    Terminal(TerminalCare),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    #[serde(flatten)]
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub guard: Guard,
}

/// Declarative state machine of a model-guided workflow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkflowGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub start: String,
}

impl WorkflowGraph {
    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    /// Out-edges of a node in declaration order.
    pub fn out_edges(&self, id: &str) -> Vec<&Edge> {
        self.edges.iter().filter(|e| e.from == id).collect()
    }

    /// Named parameters referenced anywhere in the graph's guards.
    pub fn named_params(&self) -> Vec<String> {
        let mut names = Vec::new();
        let mut push = |p: &Param| {
            if let Param::Named(n) = p {
                if !names.contains(n) {
                    names.push(n.clone());
                }
            }
        };
        for edge in &self.edges {
            match &edge.guard {
                Guard::ScoreAbove { threshold } | Guard::ScoreAtLeast { threshold } => {
                    push(threshold)
                }
                Guard::DrawSuccess { prob } => push(prob),
                _ => {}
            }
        }
        names
    }
}

/// One problem found while validating a workflow or utility table.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ValidationIssue {
    #[error("graph has no start node")]
    NoStart,
    #[error("graph declares more than one start node: {ids:?}")]
    MultipleStart { ids: Vec<String> },
    #[error("start field '{start}' does not name a start node")]
    StartMismatch { start: String },
    #[error("node '{id}' is not reachable from the start node")]
    UnreachableNode { id: String },
    #[error("node '{id}' can be left without reaching a terminal")]
    NonTerminatingPath { id: String },
    #[error("edge '{from}' -> '{to}' references an unknown node")]
    UnknownNode { from: String, to: String },
    #[error("node '{id}' is declared more than once")]
    DuplicateNode { id: String },
    #[error("resource '{id}' has negative daily capacity {capacity}")]
    NegativeCapacity { id: String, capacity: i64 },
    #[error("out-edges of node '{id}' do not partition the input space")]
    NonExhaustiveGuards { id: String },
    #[error("utility table is missing the ({state}, {outcome}) cell")]
    MissingUtilityCell { state: DiseaseState, outcome: Outcome },
    #[error("utility for ({state}, {outcome}) is {value}, outside [0, 1]")]
    UtilityOutOfRange { state: DiseaseState, outcome: Outcome, value: f64 },
    #[error("(no_disease, untreated) must anchor the scale at 1.0, found {value}")]
    BaselineUtilityNotOne { value: f64 },
    #[error("guard references parameter '{name}' which has no configured value")]
    UnresolvedParam { name: String },
}

/// Outcome of validating a graph + utility table pair: hard errors plus
/// advisory warnings (e.g. utility cells filled by assumption).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub errors: Vec<ValidationIssue>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.errors.is_empty() {
            writeln!(f, "workflow valid")?;
        } else {
            for err in &self.errors {
                writeln!(f, "error: {err}")?;
            }
        }
        for warning in &self.warnings {
            writeln!(f, "warning: {warning}")?;
        }
        Ok(())
    }
}

/// Checks every structural invariant of the graph and the completeness of the
/// utility table. Pure and idempotent: the same inputs produce the same report.
pub fn validate_workflow(graph: &WorkflowGraph, utilities: &UtilityTable) -> ValidationReport {
    let mut report = ValidationReport::default();
    let errors = &mut report.errors;

    // Node table; duplicates are reported once per extra declaration.
    let mut seen = HashSet::new();
    for node in &graph.nodes {
        if !seen.insert(node.id.as_str()) {
            errors.push(ValidationIssue::DuplicateNode { id: node.id.clone() });
        }
    }

    let starts: Vec<&Node> = graph
        .nodes
        .iter()
        .filter(|n| matches!(n.kind, NodeKind::Start))
        .collect();
    match starts.len() {
        0 => errors.push(ValidationIssue::NoStart),
        1 => {
            if starts[0].id != graph.start {
                errors.push(ValidationIssue::StartMismatch { start: graph.start.clone() });
            }
        }
        _ => errors.push(ValidationIssue::MultipleStart {
            ids: starts.iter().map(|n| n.id.clone()).collect(),
        }),
    }

    for edge in &graph.edges {
        if graph.node(&edge.from).is_none() || graph.node(&edge.to).is_none() {
            errors.push(ValidationIssue::UnknownNode {
                from: edge.from.clone(),
                to: edge.to.clone(),
            });
        }
    }

    // Guard partition per node. Legal out-edge shapes:
    //   Start:    [Always]
    //   Decision: [Always] | [ScoreAbove, Otherwise] | [ScoreAtLeast, Otherwise]
    //             | [DrawSuccess, Otherwise]
    //   Resource: [Admitted, Rejected]
    //   Terminal: []
    for node in &graph.nodes {
        let out = graph.out_edges(&node.id);
        let guards: Vec<&Guard> = out.iter().map(|e| &e.guard).collect();
        let ok = match &node.kind {
            NodeKind::Start => matches!(guards.as_slice(), [Guard::Always]),
            NodeKind::Decision => matches!(
                guards.as_slice(),
                [Guard::Always]
                    | [Guard::ScoreAbove { .. }, Guard::Otherwise]
                    | [Guard::ScoreAtLeast { .. }, Guard::Otherwise]
                    | [Guard::DrawSuccess { .. }, Guard::Otherwise]
            ),
            NodeKind::Resource { .. } => {
                matches!(guards.as_slice(), [Guard::Admitted, Guard::Rejected])
            }
            NodeKind::Terminal(_) => guards.is_empty(),
        };
        if !ok {
            errors.push(ValidationIssue::NonExhaustiveGuards { id: node.id.clone() });
        }
    }

    // Reachability from start.
    if let Some(start) = graph.node(&graph.start) {
        let mut reachable = HashSet::new();
        let mut queue = VecDeque::from([start.id.as_str()]);
        while let Some(id) = queue.pop_front() {
            if reachable.insert(id) {
                for edge in graph.out_edges(id) {
                    if graph.node(&edge.to).is_some() {
                        queue.push_back(edge.to.as_str());
                    }
                }
            }
        }
        for node in &graph.nodes {
            if !reachable.contains(node.id.as_str()) {
                errors.push(ValidationIssue::UnreachableNode { id: node.id.clone() });
            }
        }

        // Termination: no cycles, and every non-terminal has out-edges.
        for node in &graph.nodes {
            let is_terminal = matches!(node.kind, NodeKind::Terminal(_));
            if !is_terminal && graph.out_edges(&node.id).is_empty() {
                errors.push(ValidationIssue::NonTerminatingPath { id: node.id.clone() });
            }
        }
        if topo_order(graph).is_none() {
            // A cycle exists; attribute it to the start for a stable report.
            errors.push(ValidationIssue::NonTerminatingPath { id: graph.start.clone() });
        }
    }

    // Utility table completeness is enforced at construction; re-check here so
    // a hand-built table with NaN poked in is still caught.
    for state in DiseaseState::ALL {
        for outcome in Outcome::ALL {
            let value = lookup_utility(utilities, state, outcome);
            if value.is_nan() {
                errors.push(ValidationIssue::MissingUtilityCell { state, outcome });
            } else if !(0.0..=1.0).contains(&value) {
                errors.push(ValidationIssue::UtilityOutOfRange { state, outcome, value });
            }
        }
    }

    for &(state, outcome) in utilities.extrapolated_cells() {
        report.warnings.push(format!(
            "utility cell ({state}, {outcome}) = {} is an assumption, not a sourced estimate",
            lookup_utility(utilities, state, outcome)
        ));
    }

    report
}

/// Topological order of node indices, or None if the graph has a cycle.
pub(crate) fn topo_order(graph: &WorkflowGraph) -> Option<Vec<usize>> {
    let index: HashMap<&str, usize> = graph
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id.as_str(), i))
        .collect();
    let mut in_degree = vec![0usize; graph.nodes.len()];
    for edge in &graph.edges {
        if let (Some(_), Some(&to)) = (index.get(edge.from.as_str()), index.get(edge.to.as_str()))
        {
            in_degree[to] += 1;
        }
    }
    // Kahn's algorithm with an index-ordered frontier for a stable order.
    let mut frontier: Vec<usize> = (0..graph.nodes.len()).filter(|&i| in_degree[i] == 0).collect();
    let mut order = Vec::with_capacity(graph.nodes.len());
    while let Some(&next) = frontier.iter().min() {
        frontier.retain(|&i| i != next);
        order.push(next);
        for edge in graph.out_edges(&graph.nodes[next].id) {
            if let Some(&to) = index.get(edge.to.as_str()) {
                in_degree[to] -= 1;
                if in_degree[to] == 0 {
                    frontier.push(to);
                }
            }
        }
    }
    (order.len() == graph.nodes.len()).then_some(order)
}

/// Built-in nurse-driven screening workflow.
///
/// A centralized nurse team reviews the day's predictions and refers the
/// selected patients straight to the specialist. `ranked` selection takes the
/// top scores; thresholded selection (ranked = false) takes a uniform random
/// subset of patients whose score exceeds the `cutoff` parameter.
pub fn nurse_workflow(nurse_capacity: u32, specialist_capacity: u32, ranked: bool) -> WorkflowGraph {
    let (triage_guard, nurse_order, specialist_order) = if ranked {
        // Nurses never act on a zero risk score, so a score-0 model routes nobody.
        (
            Guard::ScoreAbove { threshold: Param::Literal(0.0) },
            ServiceOrder::ByRiskDescending,
            ServiceOrder::ByRiskDescending,
        )
    } else {
        (
            Guard::ScoreAbove { threshold: Param::Named("cutoff".into()) },
            ServiceOrder::RandomUniform,
            ServiceOrder::ArrivalOrder,
        )
    };
    WorkflowGraph {
        start: "visit".into(),
        nodes: vec![
            Node { id: "visit".into(), kind: NodeKind::Start },
            Node { id: "model_review".into(), kind: NodeKind::Decision },
            Node {
                id: "nurse_team".into(),
                kind: NodeKind::Resource {
                    name: "nurse".into(),
                    daily_capacity: nurse_capacity,
                    service_order: nurse_order,
                },
            },
            Node {
                id: "specialist".into(),
                kind: NodeKind::Resource {
                    name: "specialist".into(),
                    daily_capacity: specialist_capacity,
                    service_order: specialist_order,
                },
            },
            Node {
                id: "specialist_care".into(),
                kind: NodeKind::Terminal(TerminalCare::Optimal),
            },
            Node {
                id: "untreated".into(),
                kind: NodeKind::Terminal(TerminalCare::Fixed { outcome: Outcome::Untreated }),
            },
        ],
        edges: vec![
            Edge { from: "visit".into(), to: "model_review".into(), guard: Guard::Always },
            Edge { from: "model_review".into(), to: "nurse_team".into(), guard: triage_guard },
            Edge { from: "model_review".into(), to: "untreated".into(), guard: Guard::Otherwise },
            Edge { from: "nurse_team".into(), to: "specialist".into(), guard: Guard::Admitted },
            Edge { from: "nurse_team".into(), to: "untreated".into(), guard: Guard::Rejected },
            Edge { from: "specialist".into(), to: "specialist_care".into(), guard: Guard::Admitted },
            Edge { from: "specialist".into(), to: "untreated".into(), guard: Guard::Rejected },
        ],
    }
}

/// Built-in doctor-driven alerting workflow.
///
/// The model raises an EHR alert when the risk score reaches the `cutoff`
/// parameter. The attending physician reads each alert independently with
/// probability `alert_read_prob`; a read alert leads either to specialist
/// referral (score at or above `referral_cutoff`, which defaults to `cutoff`)
/// or to medication administered by the physician.
pub fn doctor_workflow(specialist_capacity: u32) -> WorkflowGraph {
    WorkflowGraph {
        start: "visit".into(),
        nodes: vec![
            Node { id: "visit".into(), kind: NodeKind::Start },
            Node { id: "alert_gate".into(), kind: NodeKind::Decision },
            Node { id: "doctor_reads".into(), kind: NodeKind::Decision },
            Node { id: "doctor_judgment".into(), kind: NodeKind::Decision },
            Node {
                id: "specialist".into(),
                kind: NodeKind::Resource {
                    name: "specialist".into(),
                    daily_capacity: specialist_capacity,
                    service_order: ServiceOrder::ArrivalOrder,
                },
            },
            Node {
                id: "specialist_care".into(),
                kind: NodeKind::Terminal(TerminalCare::Optimal),
            },
            Node {
                id: "medication".into(),
                kind: NodeKind::Terminal(TerminalCare::Fixed { outcome: Outcome::Medication }),
            },
            Node {
                id: "untreated".into(),
                kind: NodeKind::Terminal(TerminalCare::Fixed { outcome: Outcome::Untreated }),
            },
        ],
        edges: vec![
            Edge { from: "visit".into(), to: "alert_gate".into(), guard: Guard::Always },
            Edge {
                from: "alert_gate".into(),
                to: "doctor_reads".into(),
                guard: Guard::ScoreAtLeast { threshold: Param::Named("cutoff".into()) },
            },
            Edge { from: "alert_gate".into(), to: "untreated".into(), guard: Guard::Otherwise },
            Edge {
                from: "doctor_reads".into(),
                to: "doctor_judgment".into(),
                guard: Guard::DrawSuccess { prob: Param::Named("alert_read_prob".into()) },
            },
            Edge { from: "doctor_reads".into(), to: "untreated".into(), guard: Guard::Otherwise },
            Edge {
                from: "doctor_judgment".into(),
                to: "specialist".into(),
                guard: Guard::ScoreAtLeast { threshold: Param::Named("referral_cutoff".into()) },
            },
            Edge {
                from: "doctor_judgment".into(),
                to: "medication".into(),
                guard: Guard::Otherwise,
            },
            Edge { from: "specialist".into(), to: "specialist_care".into(), guard: Guard::Admitted },
            Edge { from: "specialist".into(), to: "untreated".into(), guard: Guard::Rejected },
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pad_default_matches_stated_utilities() {
        let t = UtilityTable::pad_default();
        assert_eq!(lookup_utility(&t, DiseaseState::NoDisease, Outcome::Untreated), 1.0);
        assert_eq!(lookup_utility(&t, DiseaseState::NoDisease, Outcome::Medication), 0.95);
        assert_eq!(lookup_utility(&t, DiseaseState::NoDisease, Outcome::Surgery), 0.7);
        assert_eq!(lookup_utility(&t, DiseaseState::Moderate, Outcome::Untreated), 0.85);
        assert_eq!(lookup_utility(&t, DiseaseState::Moderate, Outcome::Medication), 0.9);
        assert_eq!(lookup_utility(&t, DiseaseState::Severe, Outcome::Untreated), 0.6);
        assert_eq!(lookup_utility(&t, DiseaseState::Severe, Outcome::Surgery), 0.68);
    }

    #[test]
    fn optimal_outcome_per_state() {
        let t = UtilityTable::pad_default();
        assert_eq!(optimal_outcome(&t, DiseaseState::NoDisease), Outcome::Untreated);
        assert_eq!(optimal_outcome(&t, DiseaseState::Moderate), Outcome::Medication);
        assert_eq!(optimal_outcome(&t, DiseaseState::Severe), Outcome::Surgery);
    }

    #[test]
    fn optimal_outcome_is_argmax() {
        let t = UtilityTable::pad_default();
        for state in DiseaseState::ALL {
            let best = optimal_outcome(&t, state);
            for outcome in Outcome::ALL {
                assert!(lookup_utility(&t, state, best) >= lookup_utility(&t, state, outcome));
            }
        }
    }

    #[test]
    fn optimal_outcome_ties_break_least_invasive() {
        let t = UtilityTable::from_cells(&[
            (DiseaseState::NoDisease, Outcome::Untreated, 1.0),
            (DiseaseState::NoDisease, Outcome::Medication, 1.0),
            (DiseaseState::NoDisease, Outcome::Surgery, 1.0),
            (DiseaseState::Moderate, Outcome::Untreated, 0.5),
            (DiseaseState::Moderate, Outcome::Medication, 0.5),
            (DiseaseState::Moderate, Outcome::Surgery, 0.4),
            (DiseaseState::Severe, Outcome::Untreated, 0.1),
            (DiseaseState::Severe, Outcome::Medication, 0.5),
            (DiseaseState::Severe, Outcome::Surgery, 0.5),
        ])
        .unwrap();
        assert_eq!(optimal_outcome(&t, DiseaseState::NoDisease), Outcome::Untreated);
        assert_eq!(optimal_outcome(&t, DiseaseState::Moderate), Outcome::Untreated);
        assert_eq!(optimal_outcome(&t, DiseaseState::Severe), Outcome::Medication);
    }

    #[test]
    fn builtin_workflows_validate() {
        let t = UtilityTable::pad_default();
        for graph in [
            nurse_workflow(5, 2, true),
            nurse_workflow(5, 2, false),
            doctor_workflow(2),
        ] {
            let report = validate_workflow(&graph, &t);
            assert!(report.is_valid(), "unexpected errors: {report}");
        }
        // Default table carries two assumption warnings.
        let report = validate_workflow(&nurse_workflow(5, 2, true), &t);
        assert_eq!(report.warnings.len(), 2);
    }

    #[test]
    fn validation_is_idempotent() {
        let graph = nurse_workflow(3, 2, true);
        let t = UtilityTable::pad_default();
        assert_eq!(validate_workflow(&graph, &t), validate_workflow(&graph, &t));
    }

    #[test]
    fn unreachable_terminal_is_reported() {
        let mut graph = nurse_workflow(3, 2, true);
        graph.nodes.push(Node {
            id: "orphan".into(),
            kind: NodeKind::Terminal(TerminalCare::Fixed { outcome: Outcome::Surgery }),
        });
        let report = validate_workflow(&graph, &UtilityTable::pad_default());
        assert!(report
            .errors
            .contains(&ValidationIssue::UnreachableNode { id: "orphan".into() }));
    }

    #[test]
    fn missing_utility_cell_is_reported() {
        let mut table = UtilityTable::pad_default();
        table.cells[DiseaseState::Severe.index()][Outcome::Medication.index()] = f64::NAN;
        let report = validate_workflow(&nurse_workflow(3, 2, true), &table);
        assert!(report.errors.contains(&ValidationIssue::MissingUtilityCell {
            state: DiseaseState::Severe,
            outcome: Outcome::Medication,
        }));
    }

    #[test]
    fn cycle_is_nonterminating() {
        let mut graph = nurse_workflow(3, 2, true);
        // Send specialist rejects back to the nurse team: a loop.
        for edge in &mut graph.edges {
            if edge.from == "specialist" && edge.guard == Guard::Rejected {
                edge.to = "nurse_team".into();
            }
        }
        let report = validate_workflow(&graph, &UtilityTable::pad_default());
        assert!(!report.is_valid());
        assert!(report
            .errors
            .iter()
            .any(|e| matches!(e, ValidationIssue::NonTerminatingPath { .. })));
    }

    #[test]
    fn missing_start_and_double_start() {
        let mut graph = nurse_workflow(3, 2, true);
        graph.nodes[0].kind = NodeKind::Decision;
        let report = validate_workflow(&graph, &UtilityTable::pad_default());
        assert!(report.errors.contains(&ValidationIssue::NoStart));

        let mut graph = nurse_workflow(3, 2, true);
        graph.nodes.push(Node { id: "visit2".into(), kind: NodeKind::Start });
        let report = validate_workflow(&graph, &UtilityTable::pad_default());
        assert!(report
            .errors
            .iter()
            .any(|e| matches!(e, ValidationIssue::MultipleStart { .. })));
    }

    #[test]
    fn guard_partition_enforced() {
        let mut graph = nurse_workflow(3, 2, true);
        // Drop the otherwise-branch of the model review decision.
        graph
            .edges
            .retain(|e| !(e.from == "model_review" && e.guard == Guard::Otherwise));
        let report = validate_workflow(&graph, &UtilityTable::pad_default());
        assert!(report
            .errors
            .contains(&ValidationIssue::NonExhaustiveGuards { id: "model_review".into() }));
    }

    #[test]
    fn utility_table_rejects_out_of_range_and_bad_anchor() {
        let err = UtilityTable::from_cells(&[
            (DiseaseState::NoDisease, Outcome::Untreated, 0.9),
            (DiseaseState::NoDisease, Outcome::Medication, 1.2),
        ])
        .unwrap_err();
        assert!(err
            .iter()
            .any(|e| matches!(e, ValidationIssue::UtilityOutOfRange { .. })));
        assert!(err
            .iter()
            .any(|e| matches!(e, ValidationIssue::BaselineUtilityNotOne { .. })));
        assert!(err
            .iter()
            .any(|e| matches!(e, ValidationIssue::MissingUtilityCell { .. })));
    }
}
