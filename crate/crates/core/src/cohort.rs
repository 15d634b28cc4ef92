//! Synthetic patient cohorts and discrimination metrics.
//!
//! Cohorts carry a latent true disease state and a model risk score. Scores
//! come from an equal-variance binormal classifier, an empirical score file,
//! or a constant. The binormal family gives a single knob (the separation
//! between the class means) with a closed-form AUROC, so "a model with AUROC
//! 0.9" is a one-line spec.

use crate::seed::derive;
use crate::workflow::DiseaseState;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Classifier used to score a synthetic cohort. Higher scores mean riskier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierSpec {
    /// Equal-variance binormal model: negatives draw from N(0, 1), positives
    /// from N(separation, 1), then scores map to [0, 1] through the standard
    /// normal CDF (rank-preserving, so AUROC is unchanged).
    Binormal { separation: f64 },
    /// Scores resampled from a labeled score file, conditional on the label.
    Empirical {
        positive_scores: Vec<f64>,
        negative_scores: Vec<f64>,
    },
    /// Same score for everyone. Constant(0) realizes Treat None, Constant(1)
    /// Treat All.
    Constant { score: f64 },
}

impl ClassifierSpec {
    pub fn validate(&self) -> Result<(), CohortError> {
        match self {
            ClassifierSpec::Binormal { separation } => {
                if !separation.is_finite() || *separation < 0.0 {
                    return Err(CohortError::InvalidSpec(format!(
                        "binormal separation must be >= 0, got {separation}"
                    )));
                }
            }
            ClassifierSpec::Empirical { positive_scores, negative_scores } => {
                if positive_scores.is_empty() || negative_scores.is_empty() {
                    return Err(CohortError::InvalidSpec(
                        "empirical classifier needs scores for both labels".into(),
                    ));
                }
                for &s in positive_scores.iter().chain(negative_scores) {
                    if !(0.0..=1.0).contains(&s) {
                        return Err(CohortError::InvalidSpec(format!(
                            "empirical score {s} outside [0, 1]"
                        )));
                    }
                }
            }
            ClassifierSpec::Constant { score } => {
                if !(0.0..=1.0).contains(score) {
                    return Err(CohortError::InvalidSpec(format!(
                        "constant score {score} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One synthetic cohort member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Patient {
    pub id: u64,
    pub true_state: DiseaseState,
    /// Model risk score in [0, 1]; higher = riskier.
    pub risk_score: f64,
    pub arrival_day: u32,
}

/// Parameters of a synthetic cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub n_per_day: u32,
    pub horizon_days: u32,
    /// Fraction of patients with disease.
    pub prevalence: f64,
    /// Fraction of diseased patients whose disease is severe.
    pub severe_fraction: f64,
    pub classifier: ClassifierSpec,
    pub seed: u64,
}

impl CohortSpec {
    pub fn validate(&self) -> Result<(), CohortError> {
        if self.horizon_days < 1 {
            return Err(CohortError::InvalidSpec("horizon_days must be >= 1".into()));
        }
        for (name, value) in [("prevalence", self.prevalence), ("severe_fraction", self.severe_fraction)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(CohortError::InvalidSpec(format!("{name} {value} outside [0, 1]")));
            }
        }
        self.classifier.validate()
    }

    pub fn cohort_size(&self) -> u64 {
        self.n_per_day as u64 * self.horizon_days as u64
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CohortError {
    #[error("invalid cohort spec: {0}")]
    InvalidSpec(String),
    #[error("auroc needs at least one positive and one negative label")]
    DegenerateLabels,
    #[error("target auroc {0} outside [0.5, 1)")]
    OutOfRange(f64),
}

const DAY_STREAM: u64 = 0x636f686f72742d64; // tag for per-day cohort substreams

/// Generates the cohort described by `spec`, one day-batch at a time.
///
/// Each day draws from its own substream derived from (seed, day), so the
/// output is identical whether days are generated in sequence or in parallel.
pub fn generate_cohort(spec: &CohortSpec) -> Result<Vec<Patient>, CohortError> {
    spec.validate()?;
    let mut patients = Vec::with_capacity(spec.cohort_size() as usize);
    for day in 0..spec.horizon_days {
        let mut rng = ChaCha8Rng::seed_from_u64(derive(spec.seed, &[DAY_STREAM, day as u64]));
        for slot in 0..spec.n_per_day {
            let id = day as u64 * spec.n_per_day as u64 + slot as u64;
            let true_state = if rng.random::<f64>() < spec.prevalence {
                if rng.random::<f64>() < spec.severe_fraction {
                    DiseaseState::Severe
                } else {
                    DiseaseState::Moderate
                }
            } else {
                DiseaseState::NoDisease
            };
            let positive = true_state != DiseaseState::NoDisease;
            let risk_score = sample_score(&spec.classifier, positive, &mut rng);
            patients.push(Patient { id, true_state, risk_score, arrival_day: day });
        }
    }
    Ok(patients)
}

fn sample_score(classifier: &ClassifierSpec, positive: bool, rng: &mut ChaCha8Rng) -> f64 {
    match classifier {
        ClassifierSpec::Binormal { separation } => {
            let raw: f64 = StandardNormal.sample(rng);
            let raw = if positive { raw + separation } else { raw };
            std_normal_cdf(raw)
        }
        ClassifierSpec::Empirical { positive_scores, negative_scores } => {
            let pool = if positive { positive_scores } else { negative_scores };
            pool[rng.random_range(0..pool.len())]
        }
        ClassifierSpec::Constant { score } => *score,
    }
}

fn std_normal_cdf(x: f64) -> f64 {
    // statrs' Normal(0,1) CDF; shared by score mapping and calibration.
    Normal::standard().cdf(x)
}

/// Empirical AUROC: the probability that a uniformly random positive outscores
/// a uniformly random negative, ties counted as 1/2 (Mann-Whitney convention).
///
/// Computed by average ranks; agrees exactly with the O(n^2) pairwise count.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64, CohortError> {
    assert_eq!(scores.len(), labels.len(), "scores and labels must align");
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(CohortError::DegenerateLabels);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("scores must not be NaN"));

    // Average rank within tie groups; ranks are 1-based.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0; // mean of ranks i+1 ..= j
        for &idx in &order[i..j] {
            if labels[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }

    let u = rank_sum_pos - (n_pos as f64 * (n_pos as f64 + 1.0)) / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Separation parameter for the equal-variance binormal family whose
/// theoretical AUROC (standard normal CDF of separation / sqrt(2)) equals the
/// target. Strictly monotone in the target.
pub fn calibrate_separation(target_auroc: f64) -> Result<f64, CohortError> {
    if !(0.5..1.0).contains(&target_auroc) {
        return Err(CohortError::OutOfRange(target_auroc));
    }
    let normal = Normal::standard();
    let mut separation = std::f64::consts::SQRT_2 * normal.inverse_cdf(target_auroc);
    // Newton refinement pins the CDF relation to ~1e-15.
    for _ in 0..4 {
        let err = normal.cdf(separation / std::f64::consts::SQRT_2) - target_auroc;
        let density = (-separation * separation / 4.0).exp()
            / (std::f64::consts::SQRT_2 * (2.0 * std::f64::consts::PI).sqrt());
        if density == 0.0 {
            break;
        }
        separation -= err / density;
    }
    Ok(separation.max(0.0))
}

/// Theoretical AUROC of a binormal classifier with the given separation.
pub fn binormal_auroc(separation: f64) -> f64 {
    Normal::standard().cdf(separation / std::f64::consts::SQRT_2)
}
