//! Shared population-search controller behind the two adaptive policies.
//!
//! One controller instance owns a population of candidate landing sequences
//! and runs the evaluate / rank / release / repopulate loop against a live
//! `SystemState`. In `Sampled` mode every pass draws a fresh predicted path
//! and accumulates running estimates; in `ExpectedValue` mode the single
//! deterministic path replaces sampling, ranking-and-selection is skipped,
//! release gating drops its thresholds, and the population is filtered and
//! repopulated on every state update.
//!
//! The driving loop alternates:
//!   1. `pass(&state)` -> flights to mark for release,
//!   2. `state.mark_for_release(..)` and `state.advance(dt)`,
//!   3. `after_update(&state, &released)` with the flights the engine
//!      actually released, which triggers the appropriate repopulation.

use rand_chacha::ChaCha12Rng;

use super::ops::{argmin_cost, move_operator, mutate, rank_and_select, update_stats};
use super::{PolicyConfig, SequenceStats};
use crate::engine::{evaluate_sequence, idle_indicator, SystemState};
use crate::error::Result;
use crate::model::FlightId;
use crate::paths::{expected_value_path, sample_predicted_path};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Monte-Carlo predicted paths with running estimates.
    Sampled,
    /// One expected-value path; the latest evaluation is the estimate.
    ExpectedValue,
}

#[derive(Debug, Clone)]
struct Member {
    seq: Vec<FlightId>,
    stats: SequenceStats,
}

/// Attempts at generating a distinct perturbation before a fill loop accepts
/// an undersized population for the current pass.
const DISTINCT_RETRY_CAP: usize = 1000;

pub struct Controller {
    policy: PolicyConfig,
    mode: EvalMode,
    rng: ChaCha12Rng,
    population: Vec<Member>,
    /// Evaluations since the last stats reset.
    n: usize,
    /// Consecutive repopulations survived by the same best sequence.
    m: usize,
    /// Population membership at the previous entry to type-2 repopulation,
    /// used to detect stagnation of the best sequence.
    prev_repop_snapshot: Option<Vec<Vec<FlightId>>>,
    /// Current (population size, min population, sequence length) after
    /// late-phase shrinking.
    sizes: (usize, usize, usize),
}

/// Late-phase shrink: with only `unreleased` flights left, the sequence
/// length drops to that count and the population sizes drop to the number of
/// distinct tuples still available.
fn shrink_sizes(policy: &PolicyConfig, unreleased: usize) -> (usize, usize, usize) {
    let l = policy.sequence_length.min(unreleased);
    if l == 0 {
        return (0, 0, 0);
    }
    // Count of distinct l-tuples drawn from `unreleased` flights, saturated
    // at the configured population size.
    let mut distinct = 1usize;
    for i in 0..l {
        distinct = distinct.saturating_mul(unreleased - i);
        if distinct >= policy.population_size {
            distinct = policy.population_size;
            break;
        }
    }
    let s = policy.population_size.min(distinct);
    let s_min = policy.min_population.min(s);
    (s, s_min, l)
}

/// Unreleased flights ordered by current ETA (ties by id), truncated to `l`:
/// the first-come-first-served seed sequence.
fn fcfs_seed(state: &SystemState, l: usize) -> Vec<FlightId> {
    let mut ids = state.unreleased_ids();
    ids.sort_by(|&a, &b| {
        state
            .eta(a)
            .partial_cmp(&state.eta(b))
            .unwrap()
            .then(a.0.cmp(&b.0))
    });
    ids.truncate(l);
    ids
}

impl Controller {
    pub fn new(
        policy: PolicyConfig,
        mode: EvalMode,
        state: &SystemState,
        rng: ChaCha12Rng,
    ) -> Result<Self> {
        policy.validate()?;
        let sizes = shrink_sizes(&policy, state.unreleased_count());
        let mut controller = Controller {
            policy,
            mode,
            rng,
            population: Vec::new(),
            n: 0,
            m: 0,
            prev_repop_snapshot: None,
            sizes,
        };
        if sizes.2 > 0 {
            let seed = fcfs_seed(state, sizes.2);
            controller.population.push(Member {
                seq: seed.clone(),
                stats: SequenceStats::default(),
            });
            controller.fill_with_perturbations(&seed, sizes.0);
        }
        Ok(controller)
    }

    pub fn population_len(&self) -> usize {
        self.population.len()
    }

    pub fn evaluations(&self) -> usize {
        self.n
    }

    pub fn stagnation(&self) -> usize {
        self.m
    }

    pub fn sequences(&self) -> Vec<&[FlightId]> {
        self.population.iter().map(|m| m.seq.as_slice()).collect()
    }

    pub fn stats(&self) -> Vec<SequenceStats> {
        self.population.iter().map(|m| m.stats).collect()
    }

    /// The current best sequence (smallest running cost estimate, ties by
    /// insertion order), if the population is non-empty.
    pub fn best_sequence(&self) -> Option<&[FlightId]> {
        if self.population.is_empty() {
            return None;
        }
        let stats: Vec<SequenceStats> = self.population.iter().map(|m| m.stats).collect();
        Some(&self.population[argmin_cost(&stats)].seq)
    }

    /// One evaluation pass. Returns the flights to mark for release (a
    /// pooled prefix of the best sequence, possibly empty).
    pub fn pass(&mut self, state: &SystemState) -> Vec<FlightId> {
        if self.population.is_empty() {
            return Vec::new();
        }
        let path = match self.mode {
            EvalMode::Sampled => sample_predicted_path(state, &mut self.rng),
            EvalMode::ExpectedValue => expected_value_path(state),
        };
        for member in &mut self.population {
            let cost = evaluate_sequence(state, &member.seq, &path);
            match self.mode {
                EvalMode::Sampled => {
                    let idle = idle_indicator(state, &member.seq, &path);
                    update_stats(&mut member.stats, cost, idle, self.policy.step_rule);
                }
                EvalMode::ExpectedValue => {
                    // The latest evaluation replaces any previous estimate.
                    member.stats.cost_mean = cost;
                    member.stats.cost_sq_mean = cost * cost;
                    member.stats.n += 1;
                }
            }
        }
        self.n += 1;

        if self.mode == EvalMode::Sampled {
            let r = self.policy.ranking_interval;
            if r >= 1 && self.n % r == 0 && self.n >= 2 {
                let stats: Vec<SequenceStats> = self.population.iter().map(|m| m.stats).collect();
                let retained = rank_and_select(&stats, self.policy.ranking_significance);
                let mut keep = retained.iter();
                self.population.retain(|_| *keep.next().unwrap());
                if self.population.len() <= self.sizes.1 {
                    // Ranking cut the population to the minimum: decide on
                    // releases with the evidence accumulated so far, then
                    // repopulate. Deciding first matters when predictions are
                    // nearly deterministic: ranking then prunes hard on every
                    // interval, and a refill-first order would reset the
                    // evaluation counter before the release gate could ever
                    // open.
                    let marks = self.release_marks(state);
                    self.repopulate_type2(state);
                    return marks;
                }
            }
        }
        self.release_marks(state)
    }

    /// The pooled prefix of the best sequence, if the release gate is open:
    /// enough evaluations and a positive estimated idle-runway probability
    /// (the expected-value mode releases unconditionally).
    fn release_marks(&self, state: &SystemState) -> Vec<FlightId> {
        let stats: Vec<SequenceStats> = self.population.iter().map(|m| m.stats).collect();
        let best = &self.population[argmin_cost(&stats)];
        let release_gate = match self.mode {
            EvalMode::Sampled => {
                self.n >= self.policy.release_threshold
                    && best.stats.idle_mean > self.policy.idle_probability_threshold
            }
            EvalMode::ExpectedValue => true,
        };
        if !release_gate {
            return Vec::new();
        }
        best.seq
            .iter()
            .copied()
            .take_while(|&f| state.is_pooled(f))
            .collect()
    }

    /// Post-state-update bookkeeping. `released` lists the flights the engine
    /// released during the update, in release order.
    pub fn after_update(&mut self, state: &SystemState, released: &[FlightId]) {
        if !released.is_empty() {
            self.repopulate_type1(state);
            return;
        }
        let filter_gate = match self.mode {
            EvalMode::Sampled => self.n >= self.policy.filter_threshold,
            EvalMode::ExpectedValue => self.n >= 1,
        };
        if filter_gate && !self.population.is_empty() {
            self.filter_population();
            self.repopulate_type2(state);
        }
    }

    /// Keep the `min population` best members by running cost estimate.
    fn filter_population(&mut self) {
        let s_min = self.sizes.1;
        if self.population.len() <= s_min {
            return;
        }
        let mut order: Vec<usize> = (0..self.population.len()).collect();
        order.sort_by(|&a, &b| {
            self.population[a]
                .stats
                .cost_mean
                .partial_cmp(&self.population[b].stats.cost_mean)
                .unwrap()
                .then(a.cmp(&b))
        });
        order.truncate(s_min);
        order.sort_unstable(); // preserve insertion order among survivors
        self.population = order
            .into_iter()
            .map(|i| self.population[i].clone())
            .collect();
    }

    /// Complete reset after releases: the surviving tail of the best sequence
    /// is extended with the earliest-ETA unreleased flights and perturbed
    /// into a fresh population. All estimates are erased.
    fn repopulate_type1(&mut self, state: &SystemState) {
        self.sizes = shrink_sizes(&self.policy, state.unreleased_count());
        let (s, _, l) = self.sizes;
        let best_seq = self.best_sequence().map(<[FlightId]>::to_vec);
        self.population.clear();
        self.n = 0;
        self.m = 0;
        self.prev_repop_snapshot = None;
        if l == 0 {
            return;
        }
        let mut base: Vec<FlightId> = best_seq
            .unwrap_or_default()
            .into_iter()
            .filter(|&f| state.is_unreleased(f))
            .collect();
        base.truncate(l);
        if base.len() < l {
            let mut extension: Vec<FlightId> = state
                .unreleased_ids()
                .into_iter()
                .filter(|f| !base.contains(f))
                .collect();
            extension.sort_by(|&a, &b| {
                state
                    .eta(a)
                    .partial_cmp(&state.eta(b))
                    .unwrap()
                    .then(a.0.cmp(&b.0))
            });
            base.extend(extension.into_iter().take(l - base.len()));
        }
        self.population.push(Member {
            seq: base.clone(),
            stats: SequenceStats::default(),
        });
        self.fill_with_perturbations(&base, s);
    }

    /// Refill the population to full size around the current best sequence,
    /// mutating it first if it has survived too many refills unchallenged.
    /// All estimates are erased so old and new members compete fairly.
    fn repopulate_type2(&mut self, state: &SystemState) {
        if self.population.is_empty() || self.population.len() >= self.sizes.0 {
            // Nothing to add (late phase exhausts the distinct tuples):
            // keep the existing estimates rather than resetting them.
            return;
        }
        let snapshot: Vec<Vec<FlightId>> =
            self.population.iter().map(|m| m.seq.clone()).collect();
        let stats: Vec<SequenceStats> = self.population.iter().map(|m| m.stats).collect();
        let best_seq = self.population[argmin_cost(&stats)].seq.clone();
        self.m = match &self.prev_repop_snapshot {
            Some(prev) if prev.contains(&best_seq) => self.m + 1,
            _ => 0,
        };
        let base = if self.m >= self.policy.mutation_threshold {
            self.m = 0;
            mutate(&best_seq, state.unreleased_count(), &mut self.rng)
        } else {
            best_seq
        };
        self.prev_repop_snapshot = Some(snapshot);
        self.fill_with_perturbations(&base, self.sizes.0);
        for member in &mut self.population {
            member.stats = SequenceStats::default();
        }
        self.n = 0;
    }

    /// Add distinct perturbations of `base` until the population holds
    /// `target` members, giving up after too many duplicate draws.
    fn fill_with_perturbations(&mut self, base: &[FlightId], target: usize) {
        let mut failures = 0usize;
        while self.population.len() < target && failures < DISTINCT_RETRY_CAP {
            let candidate = move_operator(base, &mut self.rng);
            if self.population.iter().any(|m| m.seq == candidate) {
                failures += 1;
                continue;
            }
            self.population.push(Member {
                seq: candidate,
                stats: SequenceStats::default(),
            });
        }
    }
}
