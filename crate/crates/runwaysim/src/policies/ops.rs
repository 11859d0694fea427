//! Sequence-manipulation operators and estimator updates shared by the two
//! adaptive controllers: the position-biased move operator, the block-shuffle
//! mutation, the running-estimate update rule and ranking-and-selection.

use rand::seq::SliceRandom;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use super::{SequenceStats, StepRule};
use crate::model::FlightId;

/// Draw a 0-based index from {0, ..., len-1} with linearly decreasing
/// weights: index p (1-based) has probability (len + 1 - p) / (len(len+1)/2),
/// so early positions are strongly preferred.
pub fn triangular_index<R: Rng>(len: usize, rng: &mut R) -> usize {
    debug_assert!(len >= 1);
    let total = (len * (len + 1) / 2) as f64;
    let u: f64 = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for p in 1..=len {
        acc += (len + 1 - p) as f64;
        if u < acc {
            return p - 1;
        }
    }
    len - 1
}

/// Deterministic core of the move operator: remove the flight at 0-based
/// position `j` and re-insert it `shift` positions earlier (`forwards`) or
/// later, clamped to the sequence ends.
pub fn move_operator_with(s: &[FlightId], j: usize, forwards: bool, shift: usize) -> Vec<FlightId> {
    let l = s.len();
    debug_assert!(j < l && (1..=3).contains(&shift));
    let target = if forwards {
        j.saturating_sub(shift)
    } else {
        (j + shift).min(l - 1)
    };
    let mut out = s.to_vec();
    let flight = out.remove(j);
    out.insert(target, flight);
    out
}

/// Randomized move operator: position chosen with triangular weights, a fair
/// coin for direction, shift distance uniform on {1, 2, 3}. May return the
/// input unchanged near the boundaries; callers retry for distinctness.
pub fn move_operator<R: Rng>(s: &[FlightId], rng: &mut R) -> Vec<FlightId> {
    if s.len() <= 1 {
        return s.to_vec();
    }
    let j = triangular_index(s.len(), rng);
    let forwards = rng.gen_bool(0.5);
    let shift = rng.gen_range(1..=3);
    move_operator_with(s, j, forwards, shift)
}

/// Mutation: uniformly permute one contiguous block of the sequence. The
/// block length is min(4, min(l, unqueued_count)) and its start position is
/// drawn with the triangular weights over the feasible starts.
pub fn mutate<R: Rng>(s: &[FlightId], unqueued_count: usize, rng: &mut R) -> Vec<FlightId> {
    let l = s.len();
    let q = l.min(unqueued_count);
    let p = q.min(4);
    if p <= 1 {
        return s.to_vec();
    }
    let starts = q - p + 1;
    let start = triangular_index(starts, rng);
    let mut out = s.to_vec();
    out[start..start + p].shuffle(rng);
    out
}

/// Absorb one (cost, idle) sample into the running estimates:
/// est' = (1 - psi) * est + psi * sample, with psi = step(n + 1). Under the
/// harmonic rule this is exact averaging of samples (and squares) since the
/// last reset.
pub fn update_stats(stats: &mut SequenceStats, cost: f64, idle: bool, rule: StepRule) {
    let n = stats.n + 1;
    let psi = rule.step(n);
    stats.cost_mean = (1.0 - psi) * stats.cost_mean + psi * cost;
    stats.cost_sq_mean = (1.0 - psi) * stats.cost_sq_mean + psi * cost * cost;
    stats.idle_mean = (1.0 - psi) * stats.idle_mean + psi * if idle { 1.0 } else { 0.0 };
    stats.n = n;
}

/// Ranking and selection over a population sharing a common sample count n:
/// member s is retained iff for every other member s',
/// mean_s <= mean_s' + sqrt(z^2 / (n-1) * (sq_s + sq_s' - mean_s^2 - mean_s'^2))
/// with z the (1 - eta/2) standard-normal quantile. The smallest-mean member
/// is always retained. With n < 2 the threshold is undefined and the call is
/// a no-op (everything retained).
pub fn rank_and_select(stats: &[SequenceStats], eta: f64) -> Vec<bool> {
    if stats.is_empty() {
        return Vec::new();
    }
    let n = stats[0].n;
    debug_assert!(stats.iter().all(|s| s.n == n), "common sample count");
    if n < 2 {
        return vec![true; stats.len()];
    }
    let z = Normal::standard().inverse_cdf(1.0 - eta / 2.0);
    let factor = z * z / (n - 1) as f64;
    let mut retained = Vec::with_capacity(stats.len());
    for (i, s) in stats.iter().enumerate() {
        let keep = stats.iter().enumerate().all(|(j, o)| {
            if i == j {
                return true;
            }
            let spread = (s.cost_sq_mean + o.cost_sq_mean
                - s.cost_mean * s.cost_mean
                - o.cost_mean * o.cost_mean)
                .max(0.0);
            s.cost_mean <= o.cost_mean + (factor * spread).sqrt()
        });
        retained.push(keep);
    }
    // The smallest mean satisfies the criterion analytically, but guard
    // against floating-point edge cases anyway.
    let best = argmin_cost(stats);
    retained[best] = true;
    retained
}

/// Index of the member with the smallest running cost estimate; ties break
/// toward the earliest index (insertion order).
pub fn argmin_cost(stats: &[SequenceStats]) -> usize {
    debug_assert!(!stats.is_empty());
    let mut best = 0;
    for (i, s) in stats.iter().enumerate().skip(1) {
        if s.cost_mean < stats[best].cost_mean {
            best = i;
        }
    }
    best
}
