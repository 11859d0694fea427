//! Reproducible experiment harness: generates stratified scenario batches
//! that share random draws across volatility strata, runs every policy under
//! a wall-coupled or virtual simulation clock, and reduces the results to
//! comparison tables.

mod generate;
mod metrics;
mod runner;

pub use generate::{generate_scenario, generate_scenarios, scenario_fingerprint};
pub use metrics::{
    compare_policies, emit_reports, improvement_pct, ImprovementRow, MetricsTable, PolicyMetrics,
};
pub use runner::{run_experiment, run_policy};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FlightId;
use crate::policies::PolicyOutcome;

/// How computation effort is converted into simulated time for the adaptive
/// controllers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClockMode {
    /// Advance by elapsed wall time times the compression factor.
    WallCoupled,
    /// Advance by elapsed per-thread CPU time times the compression factor.
    CpuCoupled,
    /// Advance by a fixed configured amount per controller pass:
    /// deterministic and machine-independent, the mode used in CI.
    VirtualBudget,
}

/// The four sequencing policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    /// Population controller scoring sequences by sampled trajectories.
    SimHeur,
    /// The same controller scoring sequences by expected-value trajectories.
    DetHeur,
    Fcfs,
    /// Static sequence from local search at horizon start.
    Dstat,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::SimHeur,
        PolicyKind::DetHeur,
        PolicyKind::Fcfs,
        PolicyKind::Dstat,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            PolicyKind::SimHeur => "simheur",
            PolicyKind::DetHeur => "detheur",
            PolicyKind::Fcfs => "fcfs",
            PolicyKind::Dstat => "dstat",
        }
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "simheur" => Ok(PolicyKind::SimHeur),
            "detheur" => Ok(PolicyKind::DetHeur),
            "fcfs" => Ok(PolicyKind::Fcfs),
            "dstat" => Ok(PolicyKind::Dstat),
            other => Err(Error::Config(format!("unknown policy {other:?}"))),
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// A full experiment specification: which strata to run, how many scenarios
/// per stratum, and how the simulation clock is driven.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentPlan {
    /// ETA volatility values, one stratum each. The weather volatility
    /// follows the stratum value.
    pub strata: Vec<f64>,
    pub scenarios_per_stratum: usize,
    pub base_seed: u64,
    /// Simulated minutes added per minute of computation in the coupled
    /// clock modes.
    pub compression: f64,
    pub clock_mode: ClockMode,
    pub policies: Vec<PolicyKind>,
    /// Number of flights per scenario.
    pub flights: usize,
    /// Length of the scheduled arrival window in minutes.
    pub window_min: f64,
    /// Lead time before the first scheduled arrival; the clock starts this
    /// far ahead of the window.
    pub lead_min: f64,
    /// Simulated minutes charged per controller pass in virtual-budget mode.
    pub virtual_pass_cost_min: f64,
    pub grid_step: f64,
    pub horizon_min: f64,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            strata: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            scenarios_per_stratum: 1,
            base_seed: 0,
            compression: 60.0,
            clock_mode: ClockMode::WallCoupled,
            policies: PolicyKind::ALL.to_vec(),
            flights: 60,
            window_min: 60.0,
            lead_min: 60.0,
            virtual_pass_cost_min: 0.001,
            grid_step: 0.05,
            horizon_min: 480.0,
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.strata.is_empty() || self.strata.iter().any(|&s| s <= 0.0) {
            return Err(Error::Config("strata must be non-empty and positive".into()));
        }
        if self.scenarios_per_stratum < 1 {
            return Err(Error::Config("need at least one scenario per stratum".into()));
        }
        if self.compression <= 0.0 {
            return Err(Error::Config(format!(
                "compression {} must be positive",
                self.compression
            )));
        }
        if self.policies.is_empty() {
            return Err(Error::Config("no policies selected".into()));
        }
        if self.flights < 1 {
            return Err(Error::Config("need at least one flight".into()));
        }
        if self.virtual_pass_cost_min <= 0.0 || self.grid_step <= 0.0 {
            return Err(Error::Config(
                "virtual pass cost and grid step must be positive".into(),
            ));
        }
        if self.horizon_min <= self.lead_min + self.window_min {
            return Err(Error::Config(
                "horizon must extend past the arrival window".into(),
            ));
        }
        Ok(())
    }
}

/// One policy's complete result on one scenario, with the per-scenario
/// summary statistics already reduced from the per-flight data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub policy: PolicyKind,
    pub sigma: f64,
    pub scenario_index: usize,
    pub seed: u64,
    /// Total objective value; always equals the recomputed sum of the
    /// per-flight costs in `outcome`.
    pub objective: f64,
    pub mean_schedule_delay: f64,
    pub mean_airborne_holding: f64,
    pub mean_pool_holding: f64,
    pub same_class_follow_pct: f64,
    pub outcome: PolicyOutcome,
}

impl RunResult {
    pub(crate) fn new(
        policy: PolicyKind,
        config: &crate::model::ScenarioConfig,
        scenario_index: usize,
        outcome: PolicyOutcome,
    ) -> Self {
        let n = config.flight_count() as f64;
        let mean_schedule_delay = (0..config.flight_count())
            .map(|i| outcome.landings[i] - config.flights[i].scheduled_arrival)
            .sum::<f64>()
            / n;
        // Airborne holding: landing versus the landing that an immediate
        // release would have produced.
        let mean_airborne_holding = (0..config.flight_count())
            .map(|i| outcome.landings[i] - (outcome.unconstrained[i] - outcome.holdings[i]))
            .sum::<f64>()
            / n;
        let mean_pool_holding = outcome.holdings.iter().sum::<f64>() / n;
        let same_class_follow_pct = same_class_follow_pct(config, &outcome.order);
        RunResult {
            policy,
            sigma: config.flights[0].sigma,
            scenario_index,
            seed: config.seed,
            objective: outcome.total_cost,
            mean_schedule_delay,
            mean_airborne_holding,
            mean_pool_holding,
            same_class_follow_pct,
            outcome,
        }
    }

    /// Recompute the objective from the per-flight data and compare with the
    /// stored total.
    pub fn verify(&self, config: &crate::model::ScenarioConfig) -> Result<()> {
        let mut total = 0.0;
        for i in 0..config.flight_count() {
            total += crate::model::flight_cost(
                self.outcome.landings[i],
                self.outcome.unconstrained[i],
                self.outcome.holdings[i],
                &config.flights[i],
                &config.costs,
            );
        }
        if (total - self.objective).abs() > 1e-9 * total.abs().max(1.0) {
            return Err(Error::Config(format!(
                "objective {} does not match per-flight recomputation {total}",
                self.objective
            )));
        }
        Ok(())
    }
}

/// Percentage of flights that land immediately after another flight of the
/// same weight class (the first landing has no predecessor and counts
/// against the denominator).
pub fn same_class_follow_pct(config: &crate::model::ScenarioConfig, order: &[FlightId]) -> f64 {
    if order.is_empty() {
        return 0.0;
    }
    let same = order
        .windows(2)
        .filter(|w| {
            config.flights[w[0].0].weight_class == config.flights[w[1].0].weight_class
        })
        .count();
    100.0 * same as f64 / order.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        CostConfig, FlightSpec, ScenarioConfig, SeparationMatrix, WeatherConfig, WeightClass,
        SCENARIO_SCHEMA_VERSION,
    };

    #[test]
    fn plan_defaults_validate() {
        ExperimentPlan::default().validate().unwrap();
    }

    #[test]
    fn bad_plans_are_rejected() {
        let mut plan = ExperimentPlan::default();
        plan.compression = 0.0;
        assert!(plan.validate().is_err());
        let mut plan = ExperimentPlan::default();
        plan.strata.clear();
        assert!(plan.validate().is_err());
        let mut plan = ExperimentPlan::default();
        plan.policies.clear();
        assert!(plan.validate().is_err());
    }

    #[test]
    fn policy_names_roundtrip() {
        for p in PolicyKind::ALL {
            assert_eq!(p.label().parse::<PolicyKind>().unwrap(), p);
        }
        assert!("unknown".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn same_class_follow_matches_hand_count() {
        // H, H, LM, LM, H: positions 2 and 4 follow their own class → 2/5.
        let classes = [
            WeightClass::Heavy,
            WeightClass::Heavy,
            WeightClass::LowerMedium,
            WeightClass::LowerMedium,
            WeightClass::Heavy,
        ];
        let config = ScenarioConfig {
            schema_version: SCENARIO_SCHEMA_VERSION,
            flights: classes
                .iter()
                .enumerate()
                .map(|(i, &wc)| FlightSpec {
                    id: FlightId(i),
                    scheduled_arrival: 100.0 + i as f64,
                    scheduled_departure: i as f64,
                    uncertainty_onset: i as f64 - 15.0,
                    weight_class: wc,
                    cost_weight: 0.8,
                    sigma: 0.5,
                })
                .collect(),
            separations: SeparationMatrix::heathrow(25, 1.5),
            weather: WeatherConfig::none(),
            costs: CostConfig {
                schedule_tolerance: 0.0,
                holding_tolerance: 0.0,
                schedule_weight: 0.5,
                holding_weight: 0.5,
                pool_lookahead: 30.0,
            },
            horizon: 300.0,
            grid_step: 0.05,
            seed: 1,
            pre_delays: vec![0.0; 5],
        };
        let order: Vec<FlightId> = (0..5).map(FlightId).collect();
        let pct = same_class_follow_pct(&config, &order);
        assert!((pct - 40.0).abs() < 1e-12);
    }
}
