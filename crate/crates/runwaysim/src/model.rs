//! Domain types and pure cost/separation arithmetic shared by every other
//! module. All engine-facing times are minutes; separation matrices are stored
//! in seconds (the unit of the regulatory tables) and converted at the engine
//! boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Schema version embedded in serialized scenario documents.
pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

pub const SECONDS_PER_MINUTE: f64 = 60.0;

/// Dense flight index within one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FlightId(pub usize);

impl std::fmt::Display for FlightId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Aircraft weight class (by maximum take-off mass band).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WeightClass {
    #[serde(rename = "H")]
    Heavy,
    #[serde(rename = "UM")]
    UpperMedium,
    #[serde(rename = "LM")]
    LowerMedium,
    #[serde(rename = "S")]
    Small,
}

impl WeightClass {
    pub const ALL: [WeightClass; 4] = [
        WeightClass::Heavy,
        WeightClass::UpperMedium,
        WeightClass::LowerMedium,
        WeightClass::Small,
    ];

    pub fn index(self) -> usize {
        match self {
            WeightClass::Heavy => 0,
            WeightClass::UpperMedium => 1,
            WeightClass::LowerMedium => 2,
            WeightClass::Small => 3,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            WeightClass::Heavy => "H",
            WeightClass::UpperMedium => "UM",
            WeightClass::LowerMedium => "LM",
            WeightClass::Small => "S",
        }
    }
}

/// Static per-flight attributes, fixed for the whole scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlightSpec {
    pub id: FlightId,
    /// Scheduled arrival time at the destination runway (min).
    pub scheduled_arrival: f64,
    /// Scheduled departure time from the origin airport (min, may be < 0).
    pub scheduled_departure: f64,
    /// Time at which tactical uncertainty starts driving the ETA (min).
    /// Equals `scheduled_departure - pre_departure_lead`.
    pub uncertainty_onset: f64,
    pub weight_class: WeightClass,
    /// Relative cost weight in [0, 1].
    pub cost_weight: f64,
    /// Tactical Brownian-motion std-dev parameter (min per sqrt-min).
    pub sigma: f64,
}

impl FlightSpec {
    /// Lead time between uncertainty onset and scheduled departure.
    pub fn pre_departure_lead(&self) -> f64 {
        self.scheduled_departure - self.uncertainty_onset
    }

    pub fn validate(&self) -> Result<()> {
        if self.scheduled_departure >= self.scheduled_arrival {
            return Err(Error::Config(format!(
                "flight {}: departure {} must precede arrival {}",
                self.id, self.scheduled_departure, self.scheduled_arrival
            )));
        }
        if self.uncertainty_onset > self.scheduled_departure {
            return Err(Error::Config(format!(
                "flight {}: uncertainty onset {} must not exceed departure {}",
                self.id, self.uncertainty_onset, self.scheduled_departure
            )));
        }
        if !(0.0..=1.0).contains(&self.cost_weight) {
            return Err(Error::Config(format!(
                "flight {}: cost weight {} outside [0, 1]",
                self.id, self.cost_weight
            )));
        }
        if self.sigma < 0.0 {
            return Err(Error::Config(format!(
                "flight {}: negative sigma {}",
                self.id, self.sigma
            )));
        }
        Ok(())
    }
}

/// Class-pair separation requirements plus the Erlang shape and bad-weather
/// multiplier that govern realized separations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationMatrix {
    /// Fine-weather separation in seconds, indexed [leader][follower].
    pub fine_weather_secs: [[f64; 4]; 4],
    /// Erlang shape parameter k; larger values mean tighter conformance.
    pub erlang_shape: u32,
    /// Multiplier applied while bad weather is active (> 1).
    pub bad_weather_factor: f64,
}

impl SeparationMatrix {
    /// The Heathrow-calibrated leader/follower separation table.
    pub fn heathrow(erlang_shape: u32, bad_weather_factor: f64) -> Self {
        SeparationMatrix {
            fine_weather_secs: [
                [97.0, 121.0, 121.0, 145.0],
                [72.0, 72.0, 97.0, 97.0],
                [72.0, 72.0, 72.0, 72.0],
                [72.0, 72.0, 72.0, 72.0],
            ],
            erlang_shape,
            bad_weather_factor,
        }
    }

    pub fn fine_secs(&self, leader: WeightClass, follower: WeightClass) -> f64 {
        self.fine_weather_secs[leader.index()][follower.index()]
    }

    pub fn validate(&self) -> Result<()> {
        for row in &self.fine_weather_secs {
            for &e in row {
                if e <= 0.0 {
                    return Err(Error::Config(format!("non-positive separation entry {e}")));
                }
            }
        }
        if self.erlang_shape < 1 {
            return Err(Error::Config("Erlang shape must be >= 1".into()));
        }
        if self.bad_weather_factor <= 1.0 {
            return Err(Error::Config(format!(
                "bad-weather factor {} must exceed 1",
                self.bad_weather_factor
            )));
        }
        Ok(())
    }
}

/// Initial forecast for the single possible bad-weather interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherWindow {
    pub start_min: f64,
    pub end_min: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeatherConfig {
    /// `None` means conditions are certain to remain fine.
    pub forecast: Option<WeatherWindow>,
    /// Forecast Brownian-motion std-dev parameter (nu).
    pub volatility: f64,
}

impl WeatherConfig {
    pub fn none() -> Self {
        WeatherConfig {
            forecast: None,
            volatility: 0.0,
        }
    }

    pub fn present(&self) -> bool {
        self.forecast.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(w) = &self.forecast {
            if w.start_min >= w.end_min {
                return Err(Error::Config(format!(
                    "weather forecast start {} must precede end {}",
                    w.start_min, w.end_min
                )));
            }
        }
        if self.volatility < 0.0 {
            return Err(Error::Config("negative weather volatility".into()));
        }
        Ok(())
    }
}

/// Objective-function parameters and the pool-entry lookahead.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostConfig {
    /// Acceptable schedule delay before penalties accrue (min).
    pub schedule_tolerance: f64,
    /// Acceptable extra airborne time before penalties accrue (min).
    pub holding_tolerance: f64,
    /// Weight on the schedule-delay criterion.
    pub schedule_weight: f64,
    /// Weight on the airborne-holding criterion.
    pub holding_weight: f64,
    /// Pool-entry lookahead tau (min): flights become sequencable when their
    /// ETA is within tau of the current time.
    pub pool_lookahead: f64,
}

impl CostConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schedule_tolerance < 0.0 || self.holding_tolerance < 0.0 {
            return Err(Error::Config("negative cost tolerance".into()));
        }
        if self.schedule_weight <= 0.0 || self.holding_weight <= 0.0 {
            return Err(Error::Config("objective weights must be positive".into()));
        }
        if (self.schedule_weight + self.holding_weight - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "objective weights {} + {} must sum to 1",
                self.schedule_weight, self.holding_weight
            )));
        }
        if self.pool_lookahead <= 0.0 {
            return Err(Error::Config("pool lookahead must be positive".into()));
        }
        Ok(())
    }
}

/// One fully-specified scenario: flights, separations, weather, costs,
/// horizon, grid resolution, RNG seed and the realized pre-tactical delays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub flights: Vec<FlightSpec>,
    pub separations: SeparationMatrix,
    pub weather: WeatherConfig,
    pub costs: CostConfig,
    /// Simulated horizon T (min).
    pub horizon: f64,
    /// Trajectory grid step (min).
    pub grid_step: f64,
    pub seed: u64,
    /// Realized pre-tactical delay per flight (known at t = 0).
    pub pre_delays: Vec<f64>,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCENARIO_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema version {} (expected {})",
                self.schema_version, SCENARIO_SCHEMA_VERSION
            )));
        }
        if self.pre_delays.len() != self.flights.len() {
            return Err(Error::Config(format!(
                "{} pre-delays for {} flights",
                self.pre_delays.len(),
                self.flights.len()
            )));
        }
        if self.horizon <= 0.0 || self.grid_step <= 0.0 {
            return Err(Error::Config("horizon and grid step must be positive".into()));
        }
        for (i, f) in self.flights.iter().enumerate() {
            if f.id.0 != i {
                return Err(Error::Config(format!(
                    "flight ids must be dense indices; slot {i} holds id {}",
                    f.id
                )));
            }
            f.validate()?;
            let adjusted = f.scheduled_arrival + self.pre_delays[i];
            if adjusted <= 0.0 || adjusted >= self.horizon {
                return Err(Error::Config(format!(
                    "flight {}: adjusted arrival {adjusted} outside (0, {})",
                    f.id, self.horizon
                )));
            }
        }
        self.separations.validate()?;
        self.weather.validate()?;
        self.costs.validate()?;
        Ok(())
    }

    pub fn flight_count(&self) -> usize {
        self.flights.len()
    }

    /// Number of grid points (t = 0, step, ..., up to the horizon).
    pub fn grid_len(&self) -> usize {
        (self.horizon / self.grid_step).floor() as usize + 1
    }

    /// Adjusted ETA after realization of the pre-tactical delay.
    pub fn adjusted_arrival(&self, id: FlightId) -> f64 {
        self.flights[id.0].scheduled_arrival + self.pre_delays[id.0]
    }

    /// Flight ids in ascending order of adjusted arrival (ties by id).
    pub fn adjusted_arrival_order(&self) -> Vec<FlightId> {
        let mut ids: Vec<FlightId> = self.flights.iter().map(|f| f.id).collect();
        ids.sort_by(|&a, &b| {
            self.adjusted_arrival(a)
                .partial_cmp(&self.adjusted_arrival(b))
                .unwrap()
                .then(a.0.cmp(&b.0))
        });
        ids
    }

    /// FNV-1a hash of the canonical JSON form, used to key path dumps.
    pub fn content_hash(&self) -> u64 {
        let bytes = serde_json::to_vec(self).expect("scenario serializes");
        fnv1a(&bytes)
    }
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Required separation in seconds for a follower released at `release_min`,
/// given the (possibly empty) bad-weather interval in force at that time.
pub fn required_separation_secs(
    matrix: &SeparationMatrix,
    leader: WeightClass,
    follower: WeightClass,
    release_min: f64,
    weather_interval: Option<(f64, f64)>,
) -> f64 {
    let base = matrix.fine_secs(leader, follower);
    match weather_interval {
        Some((u0, u1)) if release_min >= u0 && release_min <= u1 => {
            matrix.bad_weather_factor * base
        }
        _ => base,
    }
}

/// Weighted per-flight cost: quadratic penalties on schedule delay beyond the
/// schedule tolerance and on extra airborne time beyond the holding tolerance.
///
/// `unconstrained` is the realized unconstrained landing time A (inclusive of
/// any pool holding), `holding` the total pool holding rho, so
/// `unconstrained - holding` is the landing time the flight would have
/// achieved with an immediate release and no queueing delay.
pub fn flight_cost(
    landing: f64,
    unconstrained: f64,
    holding: f64,
    flight: &FlightSpec,
    costs: &CostConfig,
) -> f64 {
    debug_assert!(holding >= 0.0, "negative holding {holding}");
    debug_assert!(
        landing >= unconstrained - holding - 1e-9,
        "landing {landing} precedes unconstrained-net-of-holding {}",
        unconstrained - holding
    );
    let sched = (landing - flight.scheduled_arrival - costs.schedule_tolerance).max(0.0);
    let hold = (landing - (unconstrained - holding) - costs.holding_tolerance).max(0.0);
    flight.cost_weight
        * (costs.schedule_weight * sched * sched + costs.holding_weight * hold * hold)
}

/// Scenario objective: sum of the per-flight weighted costs.
pub fn total_objective(per_flight_costs: &[f64]) -> f64 {
    per_flight_costs.iter().sum()
}

/// Pluggable cost hook. The quadratic form above is the shipped default;
/// alternative shapes can be swapped in behind the same signature.
pub trait CostModel {
    fn flight_cost(
        &self,
        landing: f64,
        unconstrained: f64,
        holding: f64,
        flight: &FlightSpec,
        costs: &CostConfig,
    ) -> f64;
}

/// Default quadratic cost model.
#[derive(Debug, Clone, Copy, Default)]
pub struct QuadraticCost;

impl CostModel for QuadraticCost {
    fn flight_cost(
        &self,
        landing: f64,
        unconstrained: f64,
        holding: f64,
        flight: &FlightSpec,
        costs: &CostConfig,
    ) -> f64 {
        flight_cost(landing, unconstrained, holding, flight, costs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flight(g: f64) -> FlightSpec {
        FlightSpec {
            id: FlightId(0),
            scheduled_arrival: 100.0,
            scheduled_departure: 40.0,
            uncertainty_onset: 25.0,
            weight_class: WeightClass::Heavy,
            cost_weight: g,
            sigma: 0.5,
        }
    }

    fn costs(gamma_s: f64, gamma_w: f64, theta_s: f64) -> CostConfig {
        CostConfig {
            schedule_tolerance: gamma_s,
            holding_tolerance: gamma_w,
            schedule_weight: theta_s,
            holding_weight: 1.0 - theta_s,
            pool_lookahead: 30.0,
        }
    }

    #[test]
    fn separation_table_fine_weather() {
        let m = SeparationMatrix::heathrow(25, 1.5);
        let sep = required_separation_secs(&m, WeightClass::Heavy, WeightClass::Small, 10.0, None);
        assert_eq!(sep, 145.0);
        let sep = required_separation_secs(
            &m,
            WeightClass::LowerMedium,
            WeightClass::Heavy,
            10.0,
            Some((50.0, 80.0)),
        );
        assert_eq!(sep, 72.0);
    }

    #[test]
    fn separation_bad_weather_multiplier() {
        let m = SeparationMatrix::heathrow(25, 1.5);
        let sep = required_separation_secs(
            &m,
            WeightClass::Heavy,
            WeightClass::Small,
            60.0,
            Some((50.0, 80.0)),
        );
        assert_eq!(sep, 217.5);
    }

    #[test]
    fn separation_unit_multiplier_is_weather_independent() {
        let mut m = SeparationMatrix::heathrow(25, 1.5);
        m.bad_weather_factor = 1.0;
        for (l, f) in [(WeightClass::Heavy, WeightClass::Small)] {
            let fine = required_separation_secs(&m, l, f, 60.0, None);
            let bad = required_separation_secs(&m, l, f, 60.0, Some((50.0, 80.0)));
            assert_eq!(fine, bad);
        }
    }

    #[test]
    fn flight_cost_schedule_term_only() {
        let f = flight(1.0);
        let c = costs(15.0, 0.0, 0.5);
        // L = a + 20, L = A - rho: only the schedule term is active.
        let l = 120.0;
        assert!((flight_cost(l, l, 0.0, &f, &c) - 12.5).abs() < 1e-12);
    }

    #[test]
    fn flight_cost_on_time_is_zero() {
        let f = flight(1.0);
        let c = costs(15.0, 0.0, 0.5);
        assert_eq!(flight_cost(100.0, 100.0, 0.0, &f, &c), 0.0);
    }

    #[test]
    fn flight_cost_holding_term_only() {
        let f = flight(0.8);
        let c = costs(15.0, 0.0, 0.3);
        // L = a + 10 (inside the schedule tolerance), rho = 5, L = A.
        let got = flight_cost(110.0, 110.0, 5.0, &f, &c);
        assert!((got - 14.0).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn flight_cost_monotone_in_landing_time() {
        let f = flight(0.7);
        let c = costs(15.0, 2.0, 0.4);
        let mut prev = 0.0;
        for i in 0..200 {
            let l = 95.0 + i as f64 * 0.5;
            let v = flight_cost(l, 95.0, 3.0, &f, &c);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn flight_cost_zero_iff_within_both_tolerances() {
        let f = flight(1.0);
        let c = costs(10.0, 5.0, 0.5);
        let a = 100.0;
        let rho = 4.0;
        for i in 0..400 {
            let l = (a - rho) + i as f64 * 0.1;
            let v = flight_cost(l, a, rho, &f, &c);
            let within =
                l <= f.scheduled_arrival + c.schedule_tolerance && l <= (a - rho) + c.holding_tolerance;
            assert_eq!(v == 0.0, within, "l = {l}");
        }
    }

    #[test]
    fn total_objective_sums() {
        assert!((total_objective(&[12.5, 0.0, 14.0]) - 26.5).abs() < 1e-12);
        assert_eq!(total_objective(&[]), 0.0);
        assert!((total_objective(&[1.0; 10]) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn total_objective_permutation_invariant() {
        let xs = [3.0, 1.5, 0.25, 7.0, 2.0];
        let mut ys = xs;
        ys.reverse();
        assert_eq!(total_objective(&xs), total_objective(&ys));
    }

    #[test]
    fn scenario_roundtrip_and_validation() {
        let cfg = ScenarioConfig {
            schema_version: SCENARIO_SCHEMA_VERSION,
            flights: vec![FlightSpec {
                id: FlightId(0),
                scheduled_arrival: 90.0,
                scheduled_departure: -30.0,
                uncertainty_onset: -45.0,
                weight_class: WeightClass::LowerMedium,
                cost_weight: 0.7,
                sigma: 0.5,
            }],
            separations: SeparationMatrix::heathrow(25, 1.5),
            weather: WeatherConfig {
                forecast: Some(WeatherWindow {
                    start_min: 285.0,
                    end_min: 315.0,
                }),
                volatility: 0.5,
            },
            costs: CostConfig {
                schedule_tolerance: 15.0,
                holding_tolerance: 0.0,
                schedule_weight: 0.5,
                holding_weight: 0.5,
                pool_lookahead: 30.0,
            },
            horizon: 420.0,
            grid_step: 0.01,
            seed: 7,
            pre_delays: vec![5.0],
        };
        cfg.validate().unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: ScenarioConfig = serde_json::from_str(&json).unwrap();
        back.validate().unwrap();
        assert_eq!(back.content_hash(), cfg.content_hash());

        let mut bad = cfg.clone();
        bad.costs.schedule_weight = 0.6;
        assert!(bad.validate().is_err());
    }
}
