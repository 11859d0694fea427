//! The four sequencing policies: a simulation-based population heuristic
//! (`controller` in sampled mode), its expected-value twin (same controller
//! in deterministic mode), first-come-first-served, and a static local-search
//! sequence computed once up front.

pub mod controller;
pub mod dstat;
pub mod fcfs;
pub mod ops;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FlightId;
use crate::paths::TrueSamplePath;

/// Step-size schedule for the running performance estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// psi_n = 1/n: plain averaging over all samples since the last reset.
    Harmonic,
    /// Constant step size: exponential forgetting that weights recent
    /// samples more heavily.
    Constant(f64),
}

impl StepRule {
    pub fn step(&self, n: usize) -> f64 {
        debug_assert!(n >= 1);
        match self {
            StepRule::Harmonic => 1.0 / n as f64,
            StepRule::Constant(c) => *c,
        }
    }
}

/// Tuning parameters shared by the two adaptive controllers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    /// Full population size S.
    pub population_size: usize,
    /// Minimum population size S_min the filter step trims down to.
    pub min_population: usize,
    /// Length l of each candidate sequence.
    pub sequence_length: usize,
    /// Consecutive stagnant repopulations before the best sequence is mutated.
    pub mutation_threshold: usize,
    /// Ranking-and-selection runs every this many evaluations.
    pub ranking_interval: usize,
    /// Minimum evaluation count before any release decision.
    pub release_threshold: usize,
    /// Evaluation count that triggers the population filter.
    pub filter_threshold: usize,
    /// Estimated idle-runway probability must exceed this to trigger release.
    pub idle_probability_threshold: f64,
    /// Two-sided significance level for ranking and selection.
    pub ranking_significance: f64,
    pub step_rule: StepRule,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            population_size: 20,
            min_population: 10,
            sequence_length: 15,
            mutation_threshold: 25,
            ranking_interval: 50,
            release_threshold: 50,
            filter_threshold: 500,
            idle_probability_threshold: 0.0,
            ranking_significance: 0.05,
            step_rule: StepRule::Harmonic,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_population > self.population_size {
            return Err(Error::Config(format!(
                "min population {} exceeds population size {}",
                self.min_population, self.population_size
            )));
        }
        if self.sequence_length < 1 {
            return Err(Error::Config("sequence length must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.idle_probability_threshold) {
            return Err(Error::Config(format!(
                "idle probability threshold {} outside [0, 1)",
                self.idle_probability_threshold
            )));
        }
        if !(0.0..1.0).contains(&self.ranking_significance) || self.ranking_significance == 0.0 {
            return Err(Error::Config(format!(
                "ranking significance {} outside (0, 1)",
                self.ranking_significance
            )));
        }
        if let StepRule::Constant(c) = self.step_rule {
            if !(0.0..=1.0).contains(&c) || c == 0.0 {
                return Err(Error::Config(format!("constant step size {c} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

/// Running performance estimates of one candidate sequence.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SequenceStats {
    /// Running cost estimate (the mean of all samples under the 1/n rule).
    pub cost_mean: f64,
    /// Running squared-cost estimate, used for variance in ranking.
    pub cost_sq_mean: f64,
    /// Running estimate of the idle-runway probability.
    pub idle_mean: f64,
    /// Samples absorbed since the last reset.
    pub n: usize,
}

/// The result of running one policy to completion on one scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyOutcome {
    /// Landing order (= release order).
    pub order: Vec<FlightId>,
    /// All per-flight vectors are indexed by flight id.
    pub pool_entries: Vec<f64>,
    pub releases: Vec<f64>,
    pub unconstrained: Vec<f64>,
    pub landings: Vec<f64>,
    pub holdings: Vec<f64>,
    pub per_flight_cost: Vec<f64>,
    pub total_cost: f64,
}

/// Execute a fixed release order against the true sample path without a
/// simulation clock: each flight is released at the earliest moment allowed
/// by the order (its own pool arrival or its predecessor's release, whichever
/// is later), then the landing recursion chains the landings.
pub(crate) fn execute_release_order(
    config: &crate::model::ScenarioConfig,
    path: &TrueSamplePath,
    order: &[FlightId],
) -> PolicyOutcome {
    use crate::engine::true_separation_min;
    use crate::model::flight_cost;

    let n = config.flight_count();
    assert_eq!(order.len(), n, "order must cover every flight");
    let tau = config.costs.pool_lookahead;
    let weather = path.weather_interval();

    let mut pool_entries = vec![0.0; n];
    let mut releases = vec![0.0; n];
    let mut unconstrained = vec![0.0; n];
    let mut landings = vec![0.0; n];
    let mut holdings = vec![0.0; n];
    let mut per_flight_cost = vec![0.0; n];

    let mut prev: Option<FlightId> = None;
    let mut prev_release = 0.0f64;
    let mut prev_landing = 0.0f64;
    for &id in order {
        let q = path.pool_entry_time(id.0, tau);
        let r = if prev.is_some() { prev_release.max(q) } else { q };
        let a = path.unconstrained_after_release(id.0, r, tau);
        let landing = match prev {
            None => a,
            Some(p) => {
                let m = true_separation_min(
                    &config.separations,
                    config.flights[p.0].weight_class,
                    config.flights[id.0].weight_class,
                    r,
                    weather,
                    path.sep_quantiles[id.0],
                );
                a.max(prev_landing + m)
            }
        };
        pool_entries[id.0] = q;
        releases[id.0] = r;
        unconstrained[id.0] = a;
        landings[id.0] = landing;
        holdings[id.0] = r - q;
        per_flight_cost[id.0] =
            flight_cost(landing, a, r - q, &config.flights[id.0], &config.costs);
        prev = Some(id);
        prev_release = r;
        prev_landing = landing;
    }

    PolicyOutcome {
        order: order.to_vec(),
        pool_entries,
        releases,
        unconstrained,
        landings,
        holdings,
        total_cost: per_flight_cost.iter().sum(),
        per_flight_cost,
    }
}
