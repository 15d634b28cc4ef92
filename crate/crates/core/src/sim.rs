//! Day-by-day execution of a workflow policy over a cohort.
//!
//! Patients are processed in daily batches by arrival day. Resource nodes
//! admit at most their daily capacity, in the declared service order; overflow
//! follows the rejected edge. Patients who reach an optimal-care terminal (the
//! specialist) receive the utility-maximizing outcome for their true state.
//!
//! A single run is sequential over days, because capacity state orders days
//! causally. Distinct runs are independent: all randomness comes from
//! substreams of the config seed keyed by (day, node, patient), never from
//! shared state.

use crate::cohort::Patient;
use crate::seed::{derive, unit_uniform};
use crate::workflow::{
    lookup_utility, optimal_outcome, topo_order, validate_workflow, DiseaseState, Guard, NodeKind,
    Outcome, ServiceOrder, TerminalCare, UtilityTable, ValidationReport, WorkflowGraph,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

/// Screening policy simulated over the workflow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    /// Staff follow up the highest-scoring patients each day.
    Ranked,
    /// Staff follow up a uniform random subset of patients whose score exceeds
    /// the cutoff.
    Thresholded { cutoff: f64 },
    /// EHR alert fires at `cutoff`; the physician reads each alert
    /// independently with probability `alert_read_prob`.
    DoctorAlert { cutoff: f64, alert_read_prob: f64 },
    /// The model scores everyone 0: no patient is ever routed, all end
    /// untreated. Anchors relative utility at 0%.
    TreatNone,
    /// Every patient is sent to the specialist, who remains bound by daily
    /// capacity (arrival order). Upstream staffing is bypassed. For a
    /// treat-all reference curve that honors alert fatigue, score a cohort
    /// with `ClassifierSpec::Constant { score: 1.0 }` instead and simulate the
    /// usual strategy.
    TreatAll,
    /// No capacity limits: every patient gets the optimal outcome. Anchors
    /// relative utility at 100%.
    Optimistic,
}

impl Strategy {
    /// Guard-parameter environment this strategy supplies to the graph.
    fn params(&self) -> HashMap<String, f64> {
        let mut env = HashMap::new();
        match self {
            Strategy::Thresholded { cutoff } => {
                env.insert("cutoff".to_string(), *cutoff);
            }
            Strategy::DoctorAlert { cutoff, alert_read_prob } => {
                env.insert("cutoff".to_string(), *cutoff);
                env.insert("referral_cutoff".to_string(), *cutoff);
                env.insert("alert_read_prob".to_string(), *alert_read_prob);
            }
            _ => {}
        }
        env
    }

    /// Same strategy with its cutoff replaced, if it has one.
    pub fn with_cutoff(&self, cutoff: f64) -> Option<Strategy> {
        match self {
            Strategy::Thresholded { .. } => Some(Strategy::Thresholded { cutoff }),
            Strategy::DoctorAlert { alert_read_prob, .. } => {
                Some(Strategy::DoctorAlert { cutoff, alert_read_prob: *alert_read_prob })
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let check = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(SimError::InvalidConfig(format!("{name} {v} outside [0, 1]")))
            }
        };
        match self {
            Strategy::Thresholded { cutoff } => check("cutoff", *cutoff),
            Strategy::DoctorAlert { cutoff, alert_read_prob } => {
                check("cutoff", *cutoff)?;
                check("alert_read_prob", *alert_read_prob)
            }
            _ => Ok(()),
        }
    }
}

/// One simulation arm's parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub strategy: Strategy,
    pub nurse_capacity: u32,
    pub specialist_capacity: u32,
    pub seed: u64,
}

/// Outcome of one simulation arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    /// Average utility per patient over final outcomes.
    pub mean_utility: f64,
    /// Percent of the Treat None -> Optimistic utility gain achieved; present
    /// only once baselines are attached.
    pub relative_utility: Option<f64>,
    /// Final outcome tallies; sums to the cohort size.
    pub outcome_counts: BTreeMap<(DiseaseState, Outcome), u64>,
    /// Fraction of capacity-days actually used, per resource name.
    pub resource_utilization: BTreeMap<String, f64>,
    pub patients_seen_by_specialist: u64,
}

impl SimResult {
    pub fn cohort_size(&self) -> u64 {
        self.outcome_counts.values().sum()
    }

    /// Attaches the Treat None / Optimistic anchors and fills
    /// `relative_utility`.
    pub fn attach_baselines(&mut self, u_none: f64, u_optimistic: f64) -> Result<f64, SimError> {
        let rel = relative_utility(self.mean_utility, u_none, u_optimistic)?;
        self.relative_utility = Some(rel);
        Ok(rel)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("workflow failed validation:\n{0}")]
    UnvalidatedWorkflow(String),
    #[error("cohort is empty")]
    CohortEmpty,
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("guard parameter '{0}' has no value under the configured strategy")]
    UnresolvedParam(String),
    #[error("degenerate baselines: optimistic utility {u_optimistic} <= treat-none utility {u_none}; the model cannot add utility in this workflow")]
    DegenerateBaselines { u_none: f64, u_optimistic: f64 },
    #[error("strategy has no cutoff to optimize")]
    StrategyHasNoCutoff,
    #[error("no candidate cutoffs supplied")]
    NoCandidates,
}

/// Percent of the achievable utility gain captured by the model arm:
/// 100 x (u_model - u_none) / (u_optimistic - u_none).
pub fn relative_utility(u_model: f64, u_none: f64, u_optimistic: f64) -> Result<f64, SimError> {
    if u_optimistic <= u_none {
        return Err(SimError::DegenerateBaselines { u_none, u_optimistic });
    }
    Ok(100.0 * (u_model - u_none) / (u_optimistic - u_none))
}

/// Mean utilities of the two anchor policies for this cohort: everyone
/// untreated (Treat None) and everyone optimally treated (Optimistic).
/// Both are deterministic functions of the cohort and the table.
///
/// Summation runs over per-state counts in the same order the simulator
/// tallies outcomes, so a simulated all-untreated run reproduces the Treat
/// None anchor bit for bit and anchors land at exactly 0% and 100%.
pub fn baseline_utilities(utilities: &UtilityTable, cohort: &[Patient]) -> (f64, f64) {
    let mut counts = [0u64; 3];
    for p in cohort {
        counts[p.true_state.index()] += 1;
    }
    let mut none_sum = 0.0;
    let mut opt_sum = 0.0;
    for state in DiseaseState::ALL {
        let count = counts[state.index()] as f64;
        if count > 0.0 {
            none_sum += count * lookup_utility(utilities, state, Outcome::Untreated);
            opt_sum += count * lookup_utility(utilities, state, optimal_outcome(utilities, state));
        }
    }
    let n = cohort.len() as f64;
    (none_sum / n, opt_sum / n)
}

/// The min(k, |batch|) patients with the highest risk scores, ties broken by
/// ascending id, output ordered by descending score.
pub fn select_ranked<'a>(batch: &[&'a Patient], k: usize) -> Vec<&'a Patient> {
    let mut ordered: Vec<&Patient> = batch.to_vec();
    ordered.sort_by(|a, b| {
        b.risk_score
            .partial_cmp(&a.risk_score)
            .expect("risk scores must not be NaN")
            .then(a.id.cmp(&b.id))
    });
    ordered.truncate(k);
    ordered
}

/// A uniform random min(k, m) of the m patients whose score exceeds the
/// cutoff, drawn from the supplied stream.
pub fn select_thresholded<'a>(
    batch: &[&'a Patient],
    k: usize,
    cutoff: f64,
    rng: &mut impl Rng,
) -> Vec<&'a Patient> {
    let eligible: Vec<&Patient> = batch.iter().copied().filter(|p| p.risk_score > cutoff).collect();
    sample_uniform(eligible, k, rng)
}

/// Partial Fisher-Yates: first k elements of a uniform shuffle.
fn sample_uniform<'a>(mut pool: Vec<&'a Patient>, k: usize, rng: &mut impl Rng) -> Vec<&'a Patient> {
    let k = k.min(pool.len());
    for i in 0..k {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

const DRAW_TAG: u64 = 0x6472_6177; // per-patient Bernoulli draws
const SELECT_TAG: u64 = 0x7365_6c65; // per-resource random selection
const CUTOFF_TAG: u64 = 0x6375_746f; // cutoff-search replicate seeds

/// Runs one policy over the cohort and scores the final outcomes.
///
/// Deterministic given (graph, utilities, cohort, config) including the seed.
/// `relative_utility` is left unattached; see [`simulate_with_baselines`].
pub fn simulate(
    graph: &WorkflowGraph,
    utilities: &UtilityTable,
    cohort: &[Patient],
    config: &SimConfig,
) -> Result<SimResult, SimError> {
    let report = validate_workflow(graph, utilities);
    if !report.is_valid() {
        return Err(SimError::UnvalidatedWorkflow(format_errors(&report)));
    }
    if cohort.is_empty() {
        return Err(SimError::CohortEmpty);
    }
    config.strategy.validate()?;

    match &config.strategy {
        Strategy::TreatNone => Ok(fixed_policy_result(utilities, cohort, |_, _| Outcome::Untreated)),
        Strategy::Optimistic => {
            let mut result = fixed_policy_result(utilities, cohort, optimal_outcome);
            result.patients_seen_by_specialist = cohort.len() as u64;
            Ok(result)
        }
        Strategy::TreatAll => Ok(treat_all_result(utilities, cohort, config)),
        _ => run_graph(graph, utilities, cohort, config),
    }
}

/// [`simulate`] plus analytic Treat None / Optimistic anchors attached.
pub fn simulate_with_baselines(
    graph: &WorkflowGraph,
    utilities: &UtilityTable,
    cohort: &[Patient],
    config: &SimConfig,
) -> Result<SimResult, SimError> {
    let mut result = simulate(graph, utilities, cohort, config)?;
    let (u_none, u_opt) = baseline_utilities(utilities, cohort);
    result.attach_baselines(u_none, u_opt)?;
    Ok(result)
}

fn format_errors(report: &ValidationReport) -> String {
    report.errors.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n")
}

fn fixed_policy_result(
    utilities: &UtilityTable,
    cohort: &[Patient],
    choose: impl Fn(&UtilityTable, DiseaseState) -> Outcome,
) -> SimResult {
    let mut outcomes = OutcomeTally::default();
    for p in cohort {
        outcomes.record(p.true_state, choose(utilities, p.true_state));
    }
    outcomes.into_result(utilities, BTreeMap::new(), 0)
}

/// Treat All: everyone is referred; only the specialist's daily capacity
/// gates who is seen, in arrival order.
fn treat_all_result(utilities: &UtilityTable, cohort: &[Patient], config: &SimConfig) -> SimResult {
    let mut outcomes = OutcomeTally::default();
    let mut seen: u64 = 0;
    let days = by_day(cohort);
    let n_days = days.len() as u64;
    for batch in days.values() {
        for (i, p) in batch.iter().enumerate() {
            if i < config.specialist_capacity as usize {
                seen += 1;
                outcomes.record(p.true_state, optimal_outcome(utilities, p.true_state));
            } else {
                outcomes.record(p.true_state, Outcome::Untreated);
            }
        }
    }
    let mut utilization = BTreeMap::new();
    let capacity_days = config.specialist_capacity as u64 * n_days;
    utilization.insert(
        "specialist".to_string(),
        if capacity_days == 0 { 0.0 } else { seen as f64 / capacity_days as f64 },
    );
    outcomes.into_result(utilities, utilization, seen)
}

fn by_day(cohort: &[Patient]) -> BTreeMap<u32, Vec<&Patient>> {
    let mut days: BTreeMap<u32, Vec<&Patient>> = BTreeMap::new();
    for p in cohort {
        days.entry(p.arrival_day).or_default().push(p);
    }
    // Arrival order within a day is id order.
    for batch in days.values_mut() {
        batch.sort_by_key(|p| p.id);
    }
    days
}

#[derive(Default)]
struct OutcomeTally {
    counts: [[u64; 3]; 3],
}

impl OutcomeTally {
    fn record(&mut self, state: DiseaseState, outcome: Outcome) {
        self.counts[state.index()][outcome.index()] += 1;
    }

    fn into_result(
        self,
        utilities: &UtilityTable,
        resource_utilization: BTreeMap<String, f64>,
        patients_seen_by_specialist: u64,
    ) -> SimResult {
        let mut outcome_counts = BTreeMap::new();
        let mut total = 0u64;
        let mut utility_sum = 0.0;
        for state in DiseaseState::ALL {
            for outcome in Outcome::ALL {
                let count = self.counts[state.index()][outcome.index()];
                if count > 0 {
                    outcome_counts.insert((state, outcome), count);
                    total += count;
                    utility_sum += count as f64 * lookup_utility(utilities, state, outcome);
                }
            }
        }
        SimResult {
            mean_utility: utility_sum / total as f64,
            relative_utility: None,
            outcome_counts,
            resource_utilization,
            patients_seen_by_specialist,
        }
    }
}

/// The generic engine: walks the validated graph one day-batch at a time.
fn run_graph(
    graph: &WorkflowGraph,
    utilities: &UtilityTable,
    cohort: &[Patient],
    config: &SimConfig,
) -> Result<SimResult, SimError> {
    let env = config.strategy.params();
    // Resolve every named parameter up front so a bad pairing of graph and
    // strategy fails loudly instead of mid-walk.
    for name in graph.named_params() {
        if !env.contains_key(&name) {
            return Err(SimError::UnresolvedParam(name));
        }
    }

    let order = topo_order(graph).expect("validated graphs are acyclic");
    let n_nodes = graph.nodes.len();
    // Out-edge routing tables resolved once.
    let mut routing: Vec<Routing> = Vec::with_capacity(n_nodes);
    for node in &graph.nodes {
        routing.push(Routing::build(graph, node, &env)?);
    }

    let days = by_day(cohort);
    let n_days = days.len() as u64;
    let mut outcomes = OutcomeTally::default();
    let mut admitted_totals: Vec<u64> = vec![0; n_nodes];
    let start_idx = graph.node_index(&graph.start).expect("validated");

    for (&day, batch) in &days {
        let mut inbox: Vec<Vec<&Patient>> = vec![Vec::new(); n_nodes];
        inbox[start_idx] = batch.clone();
        for &node_idx in &order {
            if inbox[node_idx].is_empty() {
                continue;
            }
            let arrivals = std::mem::take(&mut inbox[node_idx]);
            match (&graph.nodes[node_idx].kind, &routing[node_idx]) {
                (NodeKind::Start | NodeKind::Decision, Routing::Single(target)) => {
                    inbox[*target].extend(arrivals);
                }
                (NodeKind::Decision, Routing::Split { test, pass, fail }) => {
                    for p in arrivals {
                        let taken = match *test {
                            SplitTest::ScoreAbove(t) => p.risk_score > t,
                            SplitTest::ScoreAtLeast(t) => p.risk_score >= t,
                            SplitTest::Draw(prob) => {
                                unit_uniform(
                                    config.seed,
                                    &[DRAW_TAG, day as u64, node_idx as u64, p.id],
                                ) < prob
                            }
                        };
                        inbox[if taken { *pass } else { *fail }].push(p);
                    }
                }
                (
                    NodeKind::Resource { daily_capacity, service_order, .. },
                    Routing::Admission { admitted: admit_to, rejected: reject_to },
                ) => {
                    let capacity =
                        resolve_capacity(&graph.nodes[node_idx].id, *daily_capacity, config);
                    let (admitted, rejected) = admit(
                        &arrivals,
                        capacity as usize,
                        *service_order,
                        config.seed,
                        day,
                        node_idx,
                    );
                    admitted_totals[node_idx] += admitted.len() as u64;
                    inbox[*admit_to].extend(admitted);
                    inbox[*reject_to].extend(rejected);
                }
                (NodeKind::Terminal(care), Routing::Sink) => {
                    for p in arrivals {
                        let outcome = match care {
                            TerminalCare::Fixed { outcome } => *outcome,
                            TerminalCare::Optimal => optimal_outcome(utilities, p.true_state),
                        };
                        outcomes.record(p.true_state, outcome);
                    }
                }
                _ => unreachable!("routing table matches node kind"),
            }
        }
    }

    // Utilization and specialist throughput by resource name.
    let mut utilization = BTreeMap::new();
    let mut specialist_seen = 0u64;
    for (idx, node) in graph.nodes.iter().enumerate() {
        if let NodeKind::Resource { name, daily_capacity, .. } = &node.kind {
            let capacity = resolve_capacity(&node.id, *daily_capacity, config);
            let capacity_days = capacity as u64 * n_days;
            let used = admitted_totals[idx];
            let fraction =
                if capacity_days == 0 { 0.0 } else { used as f64 / capacity_days as f64 };
            utilization
                .entry(name.clone())
                .and_modify(|f: &mut f64| *f = (*f).max(fraction))
                .or_insert(fraction);
            if name == "specialist" {
                specialist_seen += used;
            }
        }
    }

    Ok(outcomes.into_result(utilities, utilization, specialist_seen))
}

/// Resources named "nurse" / "specialist" take their capacity from the
/// SimConfig, so one graph serves a whole capacity sweep; other resources
/// keep their declared capacity.
fn resolve_capacity(node_id: &str, declared: u32, config: &SimConfig) -> u32 {
    if node_id.contains("nurse") {
        config.nurse_capacity
    } else if node_id.contains("specialist") {
        config.specialist_capacity
    } else {
        declared
    }
}

fn admit<'a>(
    arrivals: &[&'a Patient],
    k: usize,
    service_order: ServiceOrder,
    seed: u64,
    day: u32,
    node_idx: usize,
) -> (Vec<&'a Patient>, Vec<&'a Patient>) {
    match service_order {
        ServiceOrder::ByRiskDescending => {
            let admitted = select_ranked(arrivals, k);
            let rejected = difference(arrivals, &admitted);
            (admitted, rejected)
        }
        ServiceOrder::ArrivalOrder => {
            let k = k.min(arrivals.len());
            (arrivals[..k].to_vec(), arrivals[k..].to_vec())
        }
        ServiceOrder::RandomUniform => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive(
                seed,
                &[SELECT_TAG, day as u64, node_idx as u64],
            ));
            let admitted = sample_uniform(arrivals.to_vec(), k, &mut rng);
            let rejected = difference(arrivals, &admitted);
            (admitted, rejected)
        }
    }
}

/// Arrivals not admitted, in original arrival order.
fn difference<'a>(arrivals: &[&'a Patient], admitted: &[&'a Patient]) -> Vec<&'a Patient> {
    let taken: std::collections::HashSet<u64> = admitted.iter().map(|p| p.id).collect();
    arrivals.iter().copied().filter(|p| !taken.contains(&p.id)).collect()
}

enum SplitTest {
    ScoreAbove(f64),
    ScoreAtLeast(f64),
    Draw(f64),
}

enum Routing {
    Single(usize),
    Split { test: SplitTest, pass: usize, fail: usize },
    Admission { admitted: usize, rejected: usize },
    Sink,
}

impl Routing {
    fn build(
        graph: &WorkflowGraph,
        node: &crate::workflow::Node,
        env: &HashMap<String, f64>,
    ) -> Result<Routing, SimError> {
        let out = graph.out_edges(&node.id);
        let target =
            |edge: &crate::workflow::Edge| graph.node_index(&edge.to).expect("validated edges");
        let resolve = |p: &crate::workflow::Param| {
            p.resolve(env).map_err(|_| match p {
                crate::workflow::Param::Named(name) => SimError::UnresolvedParam(name.clone()),
                crate::workflow::Param::Literal(_) => unreachable!("literals always resolve"),
            })
        };
        Ok(match node.kind {
            NodeKind::Terminal(_) => Routing::Sink,
            NodeKind::Resource { .. } => {
                // Validation pinned the shape to [Admitted, Rejected].
                Routing::Admission { admitted: target(out[0]), rejected: target(out[1]) }
            }
            NodeKind::Start | NodeKind::Decision => match out.as_slice() {
                [only] if only.guard == Guard::Always => Routing::Single(target(only)),
                [pass, fail] => {
                    let test = match &pass.guard {
                        Guard::ScoreAbove { threshold } => {
                            SplitTest::ScoreAbove(resolve(threshold)?)
                        }
                        Guard::ScoreAtLeast { threshold } => {
                            SplitTest::ScoreAtLeast(resolve(threshold)?)
                        }
                        Guard::DrawSuccess { prob } => SplitTest::Draw(resolve(prob)?),
                        _ => unreachable!("validation pinned decision guard shapes"),
                    };
                    Routing::Split { test, pass: target(pass), fail: target(fail) }
                }
                _ => unreachable!("validation pinned decision guard shapes"),
            },
        })
    }
}

/// Simulates each candidate cutoff over `replicates` seeded runs and returns
/// the cutoff with the highest mean relative utility (ties to the lowest
/// cutoff), along with a representative result simulated at the base seed.
pub fn find_optimal_cutoff(
    graph: &WorkflowGraph,
    utilities: &UtilityTable,
    cohort: &[Patient],
    base_config: &SimConfig,
    candidate_cutoffs: &[f64],
    replicates: u32,
) -> Result<(f64, SimResult), SimError> {
    if candidate_cutoffs.is_empty() {
        return Err(SimError::NoCandidates);
    }
    if base_config.strategy.with_cutoff(0.0).is_none() {
        return Err(SimError::StrategyHasNoCutoff);
    }
    let replicates = replicates.max(1);
    let (u_none, u_opt) = baseline_utilities(utilities, cohort);

    let mut candidates: Vec<f64> = candidate_cutoffs.to_vec();
    candidates.sort_by(|a, b| a.partial_cmp(b).expect("cutoffs must not be NaN"));

    let mut best: Option<(f64, f64)> = None; // (cutoff, mean relative utility)
    for &cutoff in &candidates {
        let strategy = base_config.strategy.with_cutoff(cutoff).expect("checked above");
        let mut sum = 0.0;
        for rep in 0..replicates {
            // Same replicate seeds across candidates: paired comparison.
            let config = SimConfig {
                strategy: strategy.clone(),
                seed: derive(base_config.seed, &[CUTOFF_TAG, rep as u64]),
                ..base_config.clone()
            };
            let result = simulate(graph, utilities, cohort, &config)?;
            sum += relative_utility(result.mean_utility, u_none, u_opt)?;
        }
        let mean = sum / replicates as f64;
        if best.is_none_or(|(_, best_mean)| mean > best_mean) {
            best = Some((cutoff, mean));
        }
    }

    let (cutoff, _) = best.expect("candidates nonempty");
    let config = SimConfig {
        strategy: base_config.strategy.with_cutoff(cutoff).expect("checked above"),
        ..base_config.clone()
    };
    let result = simulate_with_baselines(graph, utilities, cohort, &config)?;
    Ok((cutoff, result))
}
