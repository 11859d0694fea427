//! Pre-generation of the hidden true sample path, grid lookups of the stored
//! trajectories, and construction of the predicted paths (sampled or
//! expected-value) that the sequencing policies evaluate candidate sequences
//! against.

pub mod samplers;

use std::io::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{SystemState, WeatherView};
use crate::error::{Error, Result};
use crate::model::{fnv1a, ScenarioConfig};

/// Deterministic per-purpose RNG stream: the same (seed, label) pair always
/// yields the same stream, and distinct labels yield independent streams, so
/// adding consumers never perturbs existing draws.
pub fn stream_rng(seed: u64, label: &str) -> ChaCha12Rng {
    let mix = fnv1a(label.as_bytes()) ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    ChaCha12Rng::seed_from_u64(mix)
}

/// Index of the largest grid point not exceeding `t` (floor lookup). The
/// epsilon keeps exact grid points from falling into the previous cell after
/// floating-point division.
pub(crate) fn grid_index(t: f64, step: f64) -> usize {
    (t / step + 1e-9).floor() as usize
}

/// The hidden realization of all randomness for one scenario: per-flight ETA
/// trajectories on the time grid, weather forecast trajectories, one
/// separation quantile per flight and the realized pre-tactical delays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrueSamplePath {
    pub grid_step: f64,
    pub horizon: f64,
    /// Per-flight ETA trajectory sampled at t = 0, step, 2*step, ...
    pub eta_grid: Vec<Vec<f64>>,
    /// Forecast trajectories (start, end) for the bad-weather interval.
    pub weather_grid: Option<WeatherGrids>,
    /// Per-flight separation quantile, applied once the leader class is known.
    pub sep_quantiles: Vec<f64>,
    pub pre_delays: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeatherGrids {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
}

/// Serialized artifact wrapper keyed by (seed, config hash) for replay.
#[derive(Debug, Serialize, Deserialize)]
struct PathArtifact {
    seed: u64,
    config_hash: u64,
    path: TrueSamplePath,
}

impl TrueSamplePath {
    pub fn grid_len(&self) -> usize {
        (self.horizon / self.grid_step).floor() as usize + 1
    }

    fn check_range(&self, t: f64) -> Result<()> {
        if t < 0.0 || t > self.horizon {
            return Err(Error::OutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    /// Raw (pre-release, no pool pause) ETA of a flight at time t.
    pub fn lookup_eta(&self, flight: usize, t: f64) -> Result<f64> {
        self.check_range(t)?;
        Ok(self.lookup_eta_clamped(flight, t))
    }

    /// Like `lookup_eta` but clamping t into [0, horizon]; used internally
    /// where landings may legitimately run past the grid end.
    pub(crate) fn lookup_eta_clamped(&self, flight: usize, t: f64) -> f64 {
        let grid = &self.eta_grid[flight];
        let idx = grid_index(t.clamp(0.0, self.horizon), self.grid_step).min(grid.len() - 1);
        grid[idx]
    }

    /// Forecast (start, end) of the bad-weather interval at time t, if a
    /// forecast exists.
    pub fn lookup_weather(&self, t: f64) -> Result<Option<(f64, f64)>> {
        self.check_range(t)?;
        Ok(self.weather_grid.as_ref().map(|w| {
            let idx = grid_index(t, self.grid_step).min(w.start.len() - 1);
            (w.start[idx], w.end[idx])
        }))
    }

    /// Like `lookup_weather` but clamping t into [0, horizon]; used where the
    /// clock may legitimately sit past the grid end.
    pub(crate) fn lookup_weather_clamped(&self, t: f64) -> Option<(f64, f64)> {
        self.weather_grid.as_ref().map(|w| {
            let idx =
                grid_index(t.clamp(0.0, self.horizon), self.grid_step).min(w.start.len() - 1);
            (w.start[idx], w.end[idx])
        })
    }

    /// Earliest t >= start_t with grid(t) + offset <= t, treating the grid as
    /// piecewise constant. Returns `horizon` if the boundary is never hit.
    fn first_crossing(&self, grid: &[f64], offset: f64, start_t: f64) -> f64 {
        let step = self.grid_step;
        let mut k = grid_index(start_t, step).min(grid.len() - 1);
        loop {
            let v = grid[k] + offset;
            let cell_start = k as f64 * step;
            let last = k + 1 >= grid.len();
            let cell_end = if last {
                self.horizon
            } else {
                (k + 1) as f64 * step
            };
            let lo = start_t.max(cell_start);
            let candidate = lo.max(v);
            if candidate < cell_end || (last && candidate <= cell_end) {
                return candidate;
            }
            if last {
                return self.horizon;
            }
            k += 1;
        }
    }

    /// True pool-entry time: first t with X(t) - tau <= t.
    pub fn pool_entry_time(&self, flight: usize, tau: f64) -> f64 {
        self.first_crossing(&self.eta_grid[flight], -tau, 0.0)
    }

    /// True unconstrained landing time of a flight released at `release`:
    /// the pool pause shifts the stored trajectory so that the ETA resumes
    /// from release + tau, and the landing is the first subsequent boundary
    /// crossing X(t) <= t.
    pub fn unconstrained_after_release(&self, flight: usize, release: f64, tau: f64) -> f64 {
        let offset = (release + tau) - self.lookup_eta_clamped(flight, release);
        self.first_crossing(&self.eta_grid[flight], offset, release)
    }

    /// Realized bad-weather interval [U0, U1], or None if the forecast end is
    /// hit before the start (or no forecast exists).
    pub fn weather_interval(&self) -> Option<(f64, f64)> {
        let w = self.weather_grid.as_ref()?;
        let u0 = self.first_crossing(&w.start, 0.0, 0.0);
        let u1 = self.first_crossing(&w.end, 0.0, 0.0);
        if u0 < u1 {
            Some((u0, u1))
        } else {
            None
        }
    }

    /// Raw hitting times (U0, U1) of the two forecast trajectories, needed to
    /// drive forecast reveals even when the realized interval is empty.
    pub fn weather_hitting_times(&self) -> Option<(f64, f64)> {
        let w = self.weather_grid.as_ref()?;
        Some((
            self.first_crossing(&w.start, 0.0, 0.0),
            self.first_crossing(&w.end, 0.0, 0.0),
        ))
    }

    /// Dump as a JSON artifact keyed by (seed, config hash).
    pub fn dump(&self, config: &ScenarioConfig, path: &Path) -> Result<()> {
        let artifact = PathArtifact {
            seed: config.seed,
            config_hash: config.content_hash(),
            path: self.clone(),
        };
        let mut file =
            std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        serde_json::to_writer(&mut file, &artifact)?;
        file.flush()
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(())
    }

    /// Load a dumped artifact, refusing a mismatched scenario.
    pub fn load(config: &ScenarioConfig, path: &Path) -> Result<TrueSamplePath> {
        let file =
            std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let artifact: PathArtifact = serde_json::from_reader(file)?;
        if artifact.seed != config.seed || artifact.config_hash != config.content_hash() {
            return Err(Error::Config(format!(
                "path artifact {} was generated for a different scenario",
                path.display()
            )));
        }
        Ok(artifact.path)
    }
}

/// Pre-generate the hidden sample path for one scenario.
///
/// Standard-normal increments are drawn first and then scaled by the flight's
/// sigma (and the weather volatility), so two scenarios sharing a seed but
/// differing in the volatility parameters consume identical raw draws — the
/// common-random-numbers contract across strata.
pub fn pregenerate_true_path(config: &ScenarioConfig) -> Result<TrueSamplePath> {
    config.validate()?;
    let mut rng = stream_rng(config.seed, "true-path");
    let grid_len = config.grid_len();
    let sqrt_step = config.grid_step.sqrt();

    let mut eta_grid = Vec::with_capacity(config.flight_count());
    for flight in &config.flights {
        let mut grid = Vec::with_capacity(grid_len);
        let base = flight.scheduled_arrival + config.pre_delays[flight.id.0];
        // The initial draw is consumed unconditionally so the draw count (and
        // hence the stream position) does not depend on the sign of the onset.
        let z0: f64 = rng.sample(rand_distr::StandardNormal);
        let h = flight.uncertainty_onset;
        let mut x = if h < 0.0 {
            base + z0 * flight.sigma * h.abs().sqrt()
        } else {
            base
        };
        grid.push(x);
        for _ in 1..grid_len {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            x += z * flight.sigma * sqrt_step;
            grid.push(x);
        }
        eta_grid.push(grid);
    }

    let weather_grid = config.weather.forecast.map(|w| {
        let nu = config.weather.volatility;
        let mut build = |t_init: f64| {
            let mut grid = Vec::with_capacity(grid_len);
            let mut x = t_init;
            grid.push(x);
            for _ in 1..grid_len {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                x += z * nu * sqrt_step;
                grid.push(x);
            }
            grid
        };
        WeatherGrids {
            start: build(w.start_min),
            end: build(w.end_min),
        }
    });

    let sep_quantiles = (0..config.flight_count())
        .map(|_| rng.gen::<f64>())
        .collect();

    Ok(TrueSamplePath {
        grid_step: config.grid_step,
        horizon: config.horizon,
        eta_grid,
        weather_grid,
        sep_quantiles,
        pre_delays: config.pre_delays.clone(),
    })
}

/// One predicted future (sampled or expected-value) against which candidate
/// sequences are scored. All fields are indexed by flight id; entries are
/// `None` for flights in a status the field does not apply to.
#[derive(Debug, Clone)]
pub struct PredictedPath {
    /// Time the prediction was made at.
    pub t: f64,
    /// Predicted absolute pool-arrival time for flights not yet in the pool.
    pub pool_arrival: Vec<Option<f64>>,
    /// Predicted travel time from release to the runway for unreleased
    /// flights (pooled flights have mean tau; flights released straight from
    /// pool arrival behave identically).
    pub travel_after_release: Vec<Option<f64>>,
    /// Predicted runway-arrival time for released, unlanded flights. Flights
    /// already observed at the runway carry their known arrival time.
    pub queue_arrival: Vec<Option<f64>>,
    /// Per-follower separation quantiles; `None` means separations conform to
    /// their (weather-adjusted) means.
    pub sep_std: Option<Vec<f64>>,
    /// Predicted bad-weather interval, or None if none is expected.
    pub weather: Option<(f64, f64)>,
    /// Predicted residual of the service currently in progress, if any.
    pub in_service_remaining: Option<f64>,
}

/// Draw one predicted path from the correct conditional distributions given
/// the current system state.
pub fn sample_predicted_path(state: &SystemState, rng: &mut ChaCha12Rng) -> PredictedPath {
    let config = state.config();
    let t = state.t();
    let tau = config.costs.pool_lookahead;
    let n = config.flight_count();

    let mut pool_arrival = vec![None; n];
    let mut travel_after_release = vec![None; n];
    let mut queue_arrival = vec![None; n];

    for f in &config.flights {
        let id = f.id;
        if state.has_landed(id) {
            continue;
        }
        if state.is_released(id) {
            queue_arrival[id.0] = Some(match state.arrived_at_runway(id) {
                Some(a) => a,
                None => {
                    let gap = state.eta(id) - t;
                    t + samplers::sample_hitting_time_fast(gap.max(1e-9), f.sigma, rng)
                }
            });
        } else {
            if !state.is_pooled(id) {
                let gap = state.eta(id) - tau - t;
                pool_arrival[id.0] = Some(if gap <= 0.0 {
                    t
                } else {
                    t + samplers::sample_hitting_time_fast(gap, f.sigma, rng)
                });
            }
            travel_after_release[id.0] =
                Some(samplers::sample_hitting_time_fast(tau, f.sigma, rng));
        }
    }

    let nu = config.weather.volatility;
    let weather = match state.weather_view() {
        WeatherView::Forecast { start, end } => {
            let u0 = t + hit_or_now(start - t, nu, rng);
            let u1 = t + hit_or_now(end - t, nu, rng);
            (u0 < u1).then_some((u0, u1))
        }
        WeatherView::Active { since, end } => {
            let u1 = t + hit_or_now(end - t, nu, rng);
            Some((since, u1.max(t)))
        }
        WeatherView::Gone => None,
    };

    let in_service_remaining = state.in_service().map(|s| {
        samplers::sample_conditional_remaining_service(
            s.mean_min,
            config.separations.erlang_shape,
            s.elapsed,
            rng.gen(),
        )
    });

    // Standardized separation draws: Gamma(k, 1) variates that scale to the
    // class-pair Erlang mean at evaluation time. One per flight, shared by
    // every candidate sequence scored against this path.
    let shape = rand_distr::Gamma::new(config.separations.erlang_shape as f64, 1.0)
        .expect("positive shape");
    let sep_std = Some((0..n).map(|_| rng.sample(shape)).collect());

    PredictedPath {
        t,
        pool_arrival,
        travel_after_release,
        queue_arrival,
        sep_std,
        weather,
        in_service_remaining,
    }
}

fn hit_or_now(gap: f64, sigma: f64, rng: &mut ChaCha12Rng) -> f64 {
    if gap <= 0.0 {
        0.0
    } else {
        samplers::sample_hitting_time_fast(gap, sigma, rng)
    }
}

/// The expected-value prediction: every random quantity conforms to its
/// conditional expectation given the current state. Deterministic; consumes
/// no randomness.
pub fn expected_value_path(state: &SystemState) -> PredictedPath {
    let config = state.config();
    let t = state.t();
    let tau = config.costs.pool_lookahead;
    let n = config.flight_count();

    let mut pool_arrival = vec![None; n];
    let mut travel_after_release = vec![None; n];
    let mut queue_arrival = vec![None; n];

    for f in &config.flights {
        let id = f.id;
        if state.has_landed(id) {
            continue;
        }
        if state.is_released(id) {
            queue_arrival[id.0] = Some(match state.arrived_at_runway(id) {
                Some(a) => a,
                None => state.eta(id),
            });
        } else {
            if !state.is_pooled(id) {
                pool_arrival[id.0] = Some((state.eta(id) - tau).max(t));
            }
            travel_after_release[id.0] = Some(tau);
        }
    }

    let weather = match state.weather_view() {
        WeatherView::Forecast { start, end } => (start < end).then_some((start, end)),
        WeatherView::Active { since, end } => Some((since, end.max(t))),
        WeatherView::Gone => None,
    };

    let in_service_remaining = state.in_service().map(|s| {
        samplers::expected_conditional_remaining(
            s.mean_min,
            config.separations.erlang_shape,
            s.elapsed,
        )
    });

    PredictedPath {
        t,
        pool_arrival,
        travel_after_release,
        queue_arrival,
        sep_std: None,
        weather,
        in_service_remaining,
    }
}
