//! Continuous-time state machine for the runway system: pool entries,
//! releases, the landing recursion with Erlang separations, weather reveals,
//! and evaluation of candidate sequences against predicted paths.
//!
//! The hidden sample path fixes every future event, so a flight's
//! unconstrained landing time and (given its predecessor) its landing time
//! are determined at the moment it is released; the engine schedules those
//! events and replays them as the clock advances.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    flight_cost, required_separation_secs, FlightId, ScenarioConfig, SeparationMatrix,
    WeightClass, SECONDS_PER_MINUTE,
};
use crate::paths::{samplers, PredictedPath, TrueSamplePath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventKind {
    WeatherStart,
    WeatherEnd,
    Landing,
    PoolEntry,
    Release,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub flight: Option<FlightId>,
}

/// Timestamped record of everything that happened in one scenario run.
#[derive(Debug, Clone, Default)]
pub struct EventLog(Vec<Event>);

impl EventLog {
    pub fn records(&self) -> &[Event] {
        &self.0
    }

    fn push(&mut self, ev: Event) {
        debug_assert!(
            self.0.last().map_or(true, |prev| prev.t <= ev.t + 1e-9),
            "event log timestamps must be non-decreasing"
        );
        self.0.push(ev);
    }

    /// Line-delimited JSON export, one event per line.
    pub fn write_ndjson<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        for ev in &self.0 {
            let line = serde_json::to_string(ev)?;
            out.write_all(line.as_bytes())
                .and_then(|_| out.write_all(b"\n"))
                .map_err(|e| Error::io("event log", e))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ReleasedInfo {
    pub entered_pool: f64,
    pub released: f64,
    /// Shift applied to the stored trajectory after the pool pause.
    pub eta_offset: f64,
    /// Realized unconstrained landing time A (determined at release).
    pub unconstrained: f64,
    /// Scheduled landing time L (determined at release).
    pub landing: f64,
    /// Mean (min) of the separation distribution from the predecessor.
    pub sep_mean_min: Option<f64>,
    /// Realized separation draw (min) from the predecessor.
    pub separation_min: Option<f64>,
    pub predecessor: Option<FlightId>,
    /// Whether bad weather was active at the release instant.
    pub bad_weather: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LandedRecord {
    pub entered_pool: f64,
    pub released: f64,
    pub unconstrained: f64,
    pub landing: f64,
    /// Total pool holding rho = released - entered_pool.
    pub holding: f64,
}

#[derive(Debug, Clone)]
enum Status {
    EnRoute,
    Pooled { entered: f64 },
    Released(ReleasedInfo),
    Landed(LandedRecord),
}

/// What the decision-maker can currently see of the weather process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeatherView {
    /// Neither boundary hit yet: both forecast trajectories are visible.
    Forecast { start: f64, end: f64 },
    /// Bad weather in force since `since`; only the end forecast remains.
    Active { since: f64, end: f64 },
    /// No bad weather ahead (never forecast, already over, or forecast
    /// resolved to an empty interval).
    Gone,
}

/// The service in progress: the queue head has reached the runway and is
/// waiting out its separation from the predecessor's landing.
#[derive(Debug, Clone, Copy)]
pub struct InService {
    pub flight: FlightId,
    /// Time spent in service so far (the only service observable).
    pub elapsed: f64,
    /// Mean (min) of the separation distribution being served.
    pub mean_min: f64,
}

pub struct SystemState {
    config: Arc<ScenarioConfig>,
    path: Arc<TrueSamplePath>,
    t: f64,
    status: Vec<Status>,
    queue: VecDeque<FlightId>,
    marked: Vec<FlightId>,
    pool_entries: Vec<f64>,
    /// Raw hitting times of the two forecast trajectories.
    weather_hits: Option<(f64, f64)>,
    /// Realized bad-weather interval (None if empty or not forecast).
    true_weather: Option<(f64, f64)>,
    weather_started: bool,
    weather_ended: bool,
    last_release: Option<FlightId>,
    last_landing: Option<FlightId>,
    events: EventLog,
}

impl SystemState {
    pub fn new(config: Arc<ScenarioConfig>, path: Arc<TrueSamplePath>) -> Result<Self> {
        config.validate()?;
        if path.eta_grid.len() != config.flight_count() {
            return Err(Error::Config(format!(
                "sample path holds {} trajectories for {} flights",
                path.eta_grid.len(),
                config.flight_count()
            )));
        }
        let tau = config.costs.pool_lookahead;
        let pool_entries = (0..config.flight_count())
            .map(|i| path.pool_entry_time(i, tau))
            .collect();
        let mut state = SystemState {
            t: 0.0,
            status: vec![Status::EnRoute; config.flight_count()],
            queue: VecDeque::new(),
            marked: Vec::new(),
            pool_entries,
            weather_hits: path.weather_hitting_times(),
            true_weather: path.weather_interval(),
            weather_started: false,
            weather_ended: false,
            last_release: None,
            last_landing: None,
            events: EventLog::default(),
            config,
            path,
        };
        state.process_events(0.0);
        Ok(state)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn true_path(&self) -> &TrueSamplePath {
        &self.path
    }

    pub fn events(&self) -> &EventLog {
        &self.events
    }

    /// True pool-entry times, fixed by the sample path (index = flight id).
    pub fn pool_entry_times(&self) -> &[f64] {
        &self.pool_entries
    }

    pub fn is_pooled(&self, id: FlightId) -> bool {
        matches!(self.status[id.0], Status::Pooled { .. })
    }

    pub fn is_released(&self, id: FlightId) -> bool {
        matches!(self.status[id.0], Status::Released(_))
    }

    pub fn has_landed(&self, id: FlightId) -> bool {
        matches!(self.status[id.0], Status::Landed(_))
    }

    pub fn is_unreleased(&self, id: FlightId) -> bool {
        matches!(self.status[id.0], Status::EnRoute | Status::Pooled { .. })
    }

    pub fn all_landed(&self) -> bool {
        self.status.iter().all(|s| matches!(s, Status::Landed(_)))
    }

    /// Flights currently in the pool, ascending by id.
    pub fn pool_ids(&self) -> Vec<FlightId> {
        (0..self.status.len())
            .map(FlightId)
            .filter(|&id| self.is_pooled(id))
            .collect()
    }

    /// Flights not yet released (en-route or pooled), ascending by id.
    pub fn unreleased_ids(&self) -> Vec<FlightId> {
        (0..self.status.len())
            .map(FlightId)
            .filter(|&id| self.is_unreleased(id))
            .collect()
    }

    pub fn unreleased_count(&self) -> usize {
        self.status
            .iter()
            .filter(|s| matches!(s, Status::EnRoute | Status::Pooled { .. }))
            .count()
    }

    /// Released-but-unlanded flights in release (= landing) order.
    pub fn queue(&self) -> &VecDeque<FlightId> {
        &self.queue
    }

    pub fn marked(&self) -> &[FlightId] {
        &self.marked
    }

    pub fn entered_pool(&self, id: FlightId) -> Option<f64> {
        match self.status[id.0] {
            Status::Pooled { entered } => Some(entered),
            Status::Released(info) => Some(info.entered_pool),
            Status::Landed(rec) => Some(rec.entered_pool),
            Status::EnRoute => None,
        }
    }

    pub fn released_info(&self, id: FlightId) -> Option<ReleasedInfo> {
        match self.status[id.0] {
            Status::Released(info) => Some(info),
            _ => None,
        }
    }

    pub fn landed_record(&self, id: FlightId) -> Option<LandedRecord> {
        match self.status[id.0] {
            Status::Landed(rec) => Some(rec),
            _ => None,
        }
    }

    /// Current ETA X_i(t): the stored trajectory before pool entry, exactly
    /// t + tau while pooled, and the pause-shifted trajectory after release.
    pub fn eta(&self, id: FlightId) -> f64 {
        match self.status[id.0] {
            Status::EnRoute => self.path.lookup_eta_clamped(id.0, self.t),
            Status::Pooled { .. } => self.t + self.config.costs.pool_lookahead,
            Status::Released(info) => self.path.lookup_eta_clamped(id.0, self.t) + info.eta_offset,
            Status::Landed(rec) => rec.landing,
        }
    }

    /// The flight's realized runway-arrival time, if it has been observed
    /// (released and past its unconstrained landing time).
    pub fn arrived_at_runway(&self, id: FlightId) -> Option<f64> {
        match self.status[id.0] {
            Status::Released(info) if info.unconstrained <= self.t => Some(info.unconstrained),
            _ => None,
        }
    }

    pub fn weather_view(&self) -> WeatherView {
        let Some((u0_hit, u1_hit)) = self.weather_hits else {
            return WeatherView::Gone;
        };
        if self.t < u0_hit && self.t < u1_hit {
            let (start, end) = self
                .path
                .lookup_weather_clamped(self.t)
                .expect("forecast grids exist");
            return WeatherView::Forecast { start, end };
        }
        match self.true_weather {
            Some((u0, u1)) if self.t < u1 => {
                let (_, end) = self
                    .path
                    .lookup_weather_clamped(self.t)
                    .expect("forecast grids exist");
                WeatherView::Active { since: u0, end }
            }
            _ => WeatherView::Gone,
        }
    }

    pub fn in_service(&self) -> Option<InService> {
        let &head = self.queue.front()?;
        let info = self.released_info(head)?;
        if self.t < info.unconstrained {
            return None;
        }
        let pred = info.predecessor?;
        let pred_landing = self.landed_record(pred)?.landing;
        Some(InService {
            flight: head,
            elapsed: (self.t - pred_landing).max(0.0),
            mean_min: info.sep_mean_min.unwrap_or(0.0),
        })
    }

    /// Mark pooled flights for release at the next state update.
    pub fn mark_for_release(&mut self, ids: &[FlightId]) -> Result<()> {
        for &id in ids {
            if !self.is_pooled(id) {
                return Err(Error::Config(format!(
                    "flight {id} marked for release but not in pool"
                )));
            }
            if self.marked.contains(&id) {
                return Err(Error::Config(format!("flight {id} already marked")));
            }
            self.marked.push(id);
        }
        Ok(())
    }

    /// Release pooled flights immediately, in the given order.
    pub fn release_flights(&mut self, ids: &[FlightId]) -> Result<()> {
        for &id in ids {
            self.release_one(id, self.t)?;
        }
        Ok(())
    }

    /// Move the clock forward by dt: replay pool entries, landings and
    /// weather transitions from the hidden path in timestamp order, then
    /// release any flights marked beforehand. Returns the new events.
    pub fn advance(&mut self, dt: f64) -> Result<Vec<Event>> {
        if dt <= 0.0 {
            return Err(Error::Config(format!("advance requires dt > 0, got {dt}")));
        }
        let target = self.t + dt;
        if target > self.path.horizon + 1e-9 {
            return Err(Error::OutOfRange {
                t: target,
                horizon: self.path.horizon,
            });
        }
        let mark = self.events.0.len();
        self.process_events(target);
        self.t = target;
        let marked: Vec<FlightId> = std::mem::take(&mut self.marked);
        for id in marked {
            self.release_one(id, self.t)?;
        }
        Ok(self.events.0[mark..].to_vec())
    }

    /// Process all pending events with timestamps <= target, in
    /// (time, kind, flight id) order. Pending-ness is determined by status
    /// flags, so coincident timestamps are handled deterministically.
    fn process_events(&mut self, target: f64) {
        loop {
            let mut next: Option<Event> = None;
            let mut consider = |ev: Event| {
                let better = match &next {
                    None => true,
                    Some(cur) => {
                        (ev.t, ev.kind, ev.flight.map(|f| f.0))
                            < (cur.t, cur.kind, cur.flight.map(|f| f.0))
                    }
                };
                if better {
                    next = Some(ev);
                }
            };

            if let Some((u0, u1)) = self.true_weather {
                if !self.weather_started && u0 <= target {
                    consider(Event {
                        t: u0,
                        kind: EventKind::WeatherStart,
                        flight: None,
                    });
                }
                if !self.weather_ended && u1 <= target {
                    consider(Event {
                        t: u1,
                        kind: EventKind::WeatherEnd,
                        flight: None,
                    });
                }
            }
            for (i, status) in self.status.iter().enumerate() {
                if matches!(status, Status::EnRoute) && self.pool_entries[i] <= target {
                    consider(Event {
                        t: self.pool_entries[i],
                        kind: EventKind::PoolEntry,
                        flight: Some(FlightId(i)),
                    });
                }
            }
            if let Some(&head) = self.queue.front() {
                let landing = self.released_info(head).expect("queued => released").landing;
                if landing <= target {
                    consider(Event {
                        t: landing,
                        kind: EventKind::Landing,
                        flight: Some(head),
                    });
                }
            }

            let Some(ev) = next else { break };
            match ev.kind {
                EventKind::PoolEntry => {
                    let id = ev.flight.unwrap();
                    self.status[id.0] = Status::Pooled { entered: ev.t };
                }
                EventKind::Landing => {
                    let id = self.queue.pop_front().unwrap();
                    let info = match self.status[id.0] {
                        Status::Released(info) => info,
                        _ => unreachable!("queued flight must be released"),
                    };
                    self.status[id.0] = Status::Landed(LandedRecord {
                        entered_pool: info.entered_pool,
                        released: info.released,
                        unconstrained: info.unconstrained,
                        landing: info.landing,
                        holding: info.released - info.entered_pool,
                    });
                    self.last_landing = Some(id);
                }
                EventKind::WeatherStart => self.weather_started = true,
                EventKind::WeatherEnd => self.weather_ended = true,
                EventKind::Release => unreachable!("releases are not replayed"),
            }
            self.events.push(ev);
        }
    }

    fn release_one(&mut self, id: FlightId, at: f64) -> Result<()> {
        let entered = match self.status[id.0] {
            Status::Pooled { entered } => entered,
            _ => {
                return Err(Error::Config(format!(
                    "flight {id} released but not in pool"
                )))
            }
        };
        let tau = self.config.costs.pool_lookahead;
        let eta_offset = (at + tau) - self.path.lookup_eta_clamped(id.0, at);
        let unconstrained = self.path.unconstrained_after_release(id.0, at, tau);
        let bad_weather = matches!(self.true_weather, Some((u0, u1)) if at >= u0 && at <= u1);
        let follower_class = self.config.flights[id.0].weight_class;

        let (sep_mean_min, separation_min, landing) = match self.last_release {
            None => (None, None, unconstrained),
            Some(pred) => {
                let leader_class = self.config.flights[pred.0].weight_class;
                let e_secs = required_separation_secs(
                    &self.config.separations,
                    leader_class,
                    follower_class,
                    at,
                    self.true_weather,
                );
                let m = true_separation_min(
                    &self.config.separations,
                    leader_class,
                    follower_class,
                    at,
                    self.true_weather,
                    self.path.sep_quantiles[id.0],
                );
                let pred_landing = match self.status[pred.0] {
                    Status::Released(info) => info.landing,
                    Status::Landed(rec) => rec.landing,
                    _ => unreachable!("predecessor was released"),
                };
                (
                    Some(e_secs / SECONDS_PER_MINUTE),
                    Some(m),
                    unconstrained.max(pred_landing + m),
                )
            }
        };

        self.status[id.0] = Status::Released(ReleasedInfo {
            entered_pool: entered,
            released: at,
            eta_offset,
            unconstrained,
            landing,
            sep_mean_min,
            separation_min,
            predecessor: self.last_release,
            bad_weather,
        });
        self.queue.push_back(id);
        self.last_release = Some(id);
        self.events.push(Event {
            t: at,
            kind: EventKind::Release,
            flight: Some(id),
        });
        Ok(())
    }

    /// Safeguard for runs that reach the horizon with flights still up:
    /// release everything left in pool-entry order and drain the remaining
    /// landings (which may legitimately fall past the horizon).
    pub fn finalize(&mut self) -> Result<()> {
        let marked: Vec<FlightId> = std::mem::take(&mut self.marked);
        for id in marked {
            self.release_one(id, self.t)?;
        }
        let mut rest = self.unreleased_ids();
        rest.sort_by(|&a, &b| {
            self.pool_entries[a.0]
                .partial_cmp(&self.pool_entries[b.0])
                .unwrap()
                .then(a.0.cmp(&b.0))
        });
        let mut now = self.t;
        for id in rest {
            let q = self.pool_entries[id.0];
            if matches!(self.status[id.0], Status::EnRoute) {
                self.status[id.0] = Status::Pooled { entered: q };
                self.events.push(Event {
                    t: q.min(now),
                    kind: EventKind::PoolEntry,
                    flight: Some(id),
                });
            }
            now = now.max(q);
            self.t = now;
            self.release_one(id, now)?;
        }
        while let Some(&head) = self.queue.front() {
            let landing = self.released_info(head).expect("queued => released").landing;
            self.t = self.t.max(landing);
            self.process_landing_now(head, landing);
        }
        Ok(())
    }

    fn process_landing_now(&mut self, id: FlightId, landing: f64) {
        debug_assert_eq!(self.queue.front(), Some(&id));
        self.queue.pop_front();
        if let Status::Released(info) = self.status[id.0] {
            self.status[id.0] = Status::Landed(LandedRecord {
                entered_pool: info.entered_pool,
                released: info.released,
                unconstrained: info.unconstrained,
                landing: info.landing,
                holding: info.released - info.entered_pool,
            });
            self.last_landing = Some(id);
            self.events.push(Event {
                t: landing,
                kind: EventKind::Landing,
                flight: Some(id),
            });
        }
    }

    /// Per-flight outcomes once every flight has landed.
    pub fn outcomes(&self) -> Result<Vec<LandedRecord>> {
        self.status
            .iter()
            .enumerate()
            .map(|(i, s)| match s {
                Status::Landed(rec) => Ok(*rec),
                _ => Err(Error::Config(format!("flight {i} has not landed yet"))),
            })
            .collect()
    }
}

/// Realized separation draw (min) for a follower released at `release`.
pub fn true_separation_min(
    matrix: &SeparationMatrix,
    leader: WeightClass,
    follower: WeightClass,
    release: f64,
    weather: Option<(f64, f64)>,
    sep_quantile: f64,
) -> f64 {
    let e_secs = required_separation_secs(matrix, leader, follower, release, weather);
    samplers::sample_erlang_quantile(e_secs, matrix.erlang_shape, sep_quantile)
        / SECONDS_PER_MINUTE
}

/// Fold the landing-time recursion over a fixed order:
/// L_first = A_first, then L_j = max(A_j, L_prev + M_prev_j).
pub fn landing_recursion(unconstrained: &[f64], separations: &[f64]) -> Vec<f64> {
    assert!(
        unconstrained.is_empty() || separations.len() + 1 == unconstrained.len(),
        "one separation per adjacent pair"
    );
    let mut landings = Vec::with_capacity(unconstrained.len());
    for (j, &a) in unconstrained.iter().enumerate() {
        let l = if j == 0 {
            a
        } else {
            a.max(landings[j - 1] + separations[j - 1])
        };
        landings.push(l);
    }
    landings
}

/// Predicted separation (min) ahead of `follower` under a predicted path,
/// with bad weather applied if the follower's release time falls inside the
/// predicted interval.
fn predicted_sep_min(
    config: &ScenarioConfig,
    path: &PredictedPath,
    leader: WeightClass,
    follower: FlightId,
    release: f64,
) -> f64 {
    let follower_class = config.flights[follower.0].weight_class;
    let e_secs = required_separation_secs(
        &config.separations,
        leader,
        follower_class,
        release,
        path.weather,
    );
    sep_from_quantile(config, path, follower, e_secs)
}

/// Predicted separation (min) for an already-released follower, whose
/// weather exposure was fixed (and observed) at its release instant.
fn predicted_sep_min_released(
    config: &ScenarioConfig,
    path: &PredictedPath,
    leader: WeightClass,
    follower: FlightId,
    bad_weather: bool,
) -> f64 {
    let follower_class = config.flights[follower.0].weight_class;
    let mut e_secs = config.separations.fine_secs(leader, follower_class);
    if bad_weather {
        e_secs *= config.separations.bad_weather_factor;
    }
    sep_from_quantile(config, path, follower, e_secs)
}

fn sep_from_quantile(
    config: &ScenarioConfig,
    path: &PredictedPath,
    follower: FlightId,
    e_secs: f64,
) -> f64 {
    match &path.sep_std {
        // Standardized Gamma(k, 1) draw scaled to an Erlang(k, k / e) value.
        Some(std) => {
            std[follower.0] * e_secs / config.separations.erlang_shape as f64 / SECONDS_PER_MINUTE
        }
        None => e_secs / SECONDS_PER_MINUTE,
    }
}

/// Project the existing queue forward under a predicted path and return the
/// weight class and predicted landing time of the most recently released
/// flight — the anchor that any future release must chain onto. None if no
/// flight has ever been released.
pub fn project_queue(state: &SystemState, path: &PredictedPath) -> Option<(WeightClass, f64)> {
    let config = state.config();
    let last = state_last_release(state)?;
    if let Some(rec) = state.landed_record(last) {
        return Some((config.flights[last.0].weight_class, rec.landing));
    }
    // The queue is non-empty; chain predicted landings from the most recent
    // actual landing through every queued flight.
    let mut prev: Option<(WeightClass, f64)> = state
        .last_landing_record()
        .map(|(id, rec)| (config.flights[id.0].weight_class, rec.landing));
    let in_service = state.in_service();
    for &j in state.queue() {
        let info = state.released_info(j).expect("queued => released");
        let class_j = config.flights[j.0].weight_class;
        let landing = if in_service.is_some_and(|s| s.flight == j) {
            state.t() + path.in_service_remaining.unwrap_or(0.0)
        } else {
            let a = path.queue_arrival[j.0].expect("queued flight has predicted arrival");
            match prev {
                None => a,
                Some((leader_class, prev_landing)) => {
                    let m =
                        predicted_sep_min_released(config, path, leader_class, j, info.bad_weather);
                    a.max(prev_landing + m)
                }
            }
        };
        prev = Some((class_j, landing));
    }
    prev
}

fn state_last_release(state: &SystemState) -> Option<FlightId> {
    // The most recent release is the queue tail if any flight is still
    // queued; otherwise it is the most recent landing.
    state
        .queue()
        .back()
        .copied()
        .or_else(|| state.last_landing_record().map(|(id, _)| id))
}

impl SystemState {
    pub fn last_landing_record(&self) -> Option<(FlightId, LandedRecord)> {
        let id = self.last_landing?;
        Some((id, self.landed_record(id).expect("recorded landing")))
    }
}

/// Cost of following candidate sequence `seq` from the current state under
/// the predicted path: the release protocol releases each flight of `seq` as
/// soon as it is available and its predecessors in `seq` have been released,
/// landings chain onto the projected queue, and only the flights in `seq`
/// contribute cost.
pub fn evaluate_sequence(state: &SystemState, seq: &[FlightId], path: &PredictedPath) -> f64 {
    let config = state.config();
    let costs = &config.costs;
    let t = state.t();
    let mut leader = project_queue(state, path);
    let mut prev_release = t;
    let mut total = 0.0;

    for &f in seq {
        assert!(
            state.is_unreleased(f),
            "sequence contains released flight {f}"
        );
        let spec = &config.flights[f.0];
        let pool_time = match state.entered_pool(f) {
            Some(entered) => entered,
            None => path.pool_arrival[f.0].expect("en-route flight has predicted pool arrival"),
        };
        let release = prev_release.max(t).max(pool_time);
        let holding = release - pool_time;
        let travel = path.travel_after_release[f.0].expect("unreleased flight has travel time");
        let arrival = release + travel;
        let landing = match leader {
            None => arrival,
            Some((leader_class, leader_landing)) => {
                let m = predicted_sep_min(config, path, leader_class, f, release);
                arrival.max(leader_landing + m)
            }
        };
        total += flight_cost(landing, arrival, holding, spec, costs);
        leader = Some((spec.weight_class, landing));
        prev_release = release;
    }
    total
}

/// Idle-runway indicator: 1 when, under the predicted path, the first flight
/// of `seq` would reach the runway later than its earliest feasible landing
/// slot behind the last queued flight. An empty queue counts as idle —
/// with nothing ahead, holding the flight back can only waste the runway.
pub fn idle_indicator(state: &SystemState, seq: &[FlightId], path: &PredictedPath) -> bool {
    assert!(!seq.is_empty(), "idle indicator needs a non-empty sequence");
    if state.queue().is_empty() {
        return true;
    }
    let config = state.config();
    let (leader_class, leader_landing) =
        project_queue(state, path).expect("non-empty queue projects");
    let j = seq[0];
    let t = state.t();
    let pool_time = match state.entered_pool(j) {
        Some(_) => t,
        None => path.pool_arrival[j.0].expect("en-route flight has predicted pool arrival"),
    };
    let release = t.max(pool_time);
    let travel = path.travel_after_release[j.0].expect("unreleased flight has travel time");
    let arrival = release + travel;
    let m = predicted_sep_min(config, path, leader_class, j, release);
    arrival > leader_landing + m
}
