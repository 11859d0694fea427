//! Policy execution: drives the adaptive controllers against the event
//! engine under the chosen clock mode, runs the clockless policies in closed
//! form, and fans the whole experiment plan out over a worker pool.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use super::{generate_scenario, ClockMode, ExperimentPlan, PolicyKind, RunResult};
use crate::engine::{EventKind, SystemState};
use crate::error::{Error, Result};
use crate::model::{flight_cost, FlightId, ScenarioConfig};
use crate::paths::{pregenerate_true_path, stream_rng, TrueSamplePath};
use crate::policies::controller::{Controller, EvalMode};
use crate::policies::{dstat, fcfs, PolicyConfig, PolicyOutcome};

/// Per-thread CPU time in seconds, for the CPU-coupled clock mode.
fn thread_cpu_seconds() -> f64 {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    // Safety: plain syscall writing into a stack-allocated timespec.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    assert_eq!(rc, 0, "clock_gettime(CLOCK_THREAD_CPUTIME_ID) failed");
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}

/// Run one policy on one scenario. The adaptive controllers consume
/// simulated time per pass according to `clock_mode`; the clockless policies
/// ignore it.
pub fn run_policy(
    config: &ScenarioConfig,
    path: &Arc<TrueSamplePath>,
    policy: PolicyKind,
    plan: &ExperimentPlan,
    scenario_index: usize,
) -> Result<RunResult> {
    let outcome = match policy {
        PolicyKind::Fcfs => fcfs::run_fcfs(config, path),
        PolicyKind::Dstat => {
            let mut rng = stream_rng(config.seed, "dstat");
            dstat::run_dstat(config, path, &mut rng).1
        }
        PolicyKind::SimHeur => run_controller(config, path, EvalMode::Sampled, plan)?,
        PolicyKind::DetHeur => run_controller(config, path, EvalMode::ExpectedValue, plan)?,
    };
    let result = RunResult::new(policy, config, scenario_index, outcome);
    result.verify(config)?;
    Ok(result)
}

fn run_controller(
    config: &ScenarioConfig,
    path: &Arc<TrueSamplePath>,
    mode: EvalMode,
    plan: &ExperimentPlan,
) -> Result<PolicyOutcome> {
    let label = match mode {
        EvalMode::Sampled => "simheur",
        EvalMode::ExpectedValue => "detheur",
    };
    let mut state = SystemState::new(Arc::new(config.clone()), path.clone())?;
    let mut controller = Controller::new(
        PolicyConfig::default(),
        mode,
        &state,
        stream_rng(config.seed, label),
    )?;

    while !state.all_landed() {
        if state.unreleased_count() == 0 || state.t() >= config.horizon {
            state.finalize()?;
            break;
        }
        let wall_start = Instant::now();
        let cpu_start = thread_cpu_seconds();
        let marks = controller.pass(&state);
        if !marks.is_empty() {
            state.mark_for_release(&marks)?;
        }
        let dt = match plan.clock_mode {
            ClockMode::VirtualBudget => plan.virtual_pass_cost_min,
            ClockMode::WallCoupled => {
                wall_start.elapsed().as_secs_f64() * plan.compression / 60.0
            }
            ClockMode::CpuCoupled => {
                (thread_cpu_seconds() - cpu_start) * plan.compression / 60.0
            }
        }
        .max(1e-9);
        let events = state.advance(dt.min(config.horizon - state.t()).max(1e-9))?;
        let released: Vec<FlightId> = events
            .iter()
            .filter(|e| e.kind == EventKind::Release)
            .map(|e| e.flight.expect("release events carry a flight"))
            .collect();
        controller.after_update(&state, &released);
    }
    if !state.all_landed() {
        state.finalize()?;
    }
    outcome_from_state(config, &state)
}

fn outcome_from_state(config: &ScenarioConfig, state: &SystemState) -> Result<PolicyOutcome> {
    let n = config.flight_count();
    let records = state.outcomes()?;
    let mut order: Vec<FlightId> = (0..n).map(FlightId).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&records[a.0], &records[b.0]);
        ra.landing
            .partial_cmp(&rb.landing)
            .unwrap()
            .then(ra.released.partial_cmp(&rb.released).unwrap())
            .then(a.0.cmp(&b.0))
    });
    let mut per_flight_cost = vec![0.0; n];
    for i in 0..n {
        per_flight_cost[i] = flight_cost(
            records[i].landing,
            records[i].unconstrained,
            records[i].holding,
            &config.flights[i],
            &config.costs,
        );
    }
    Ok(PolicyOutcome {
        order,
        pool_entries: records.iter().map(|r| r.entered_pool).collect(),
        releases: records.iter().map(|r| r.released).collect(),
        unconstrained: records.iter().map(|r| r.unconstrained).collect(),
        landings: records.iter().map(|r| r.landing).collect(),
        holdings: records.iter().map(|r| r.holding).collect(),
        total_cost: per_flight_cost.iter().sum(),
        per_flight_cost,
    })
}

/// Run the whole plan: every stratum, scenario and policy. Scenarios run in
/// parallel; results come back sorted by (sigma, scenario, policy).
pub fn run_experiment(plan: &ExperimentPlan) -> Result<Vec<RunResult>> {
    plan.validate()?;
    let jobs: Vec<(f64, usize)> = plan
        .strata
        .iter()
        .flat_map(|&sigma| (0..plan.scenarios_per_stratum).map(move |n| (sigma, n)))
        .collect();
    let mut results: Vec<RunResult> = jobs
        .par_iter()
        .map(|&(sigma, n)| -> Result<Vec<RunResult>> {
            let config = generate_scenario(plan, sigma, n)?;
            let path = Arc::new(pregenerate_true_path(&config)?);
            plan.policies
                .iter()
                .map(|&p| {
                    run_policy(&config, &path, p, plan, n).map_err(|e| {
                        Error::Config(format!(
                            "policy {p} failed on scenario {n} (sigma {sigma}): {e}"
                        ))
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    results.sort_by(|a, b| {
        a.sigma
            .partial_cmp(&b.sigma)
            .unwrap()
            .then(a.scenario_index.cmp(&b.scenario_index))
            .then(a.policy.cmp(&b.policy))
    });
    Ok(results)
}
