//! Stratified scenario generation with common random numbers: scenario `n`
//! draws every quantity except the volatility from a stream keyed only by
//! the base seed and `n`, so the same `n` in two strata differs in nothing
//! but sigma.

use rand::Rng;
use statrs::distribution::{ContinuousCDF, Gamma};

use super::ExperimentPlan;
use crate::error::Result;
use crate::model::{
    CostConfig, FlightId, FlightSpec, ScenarioConfig, SeparationMatrix, WeatherConfig,
    WeatherWindow, WeightClass, SCENARIO_SCHEMA_VERSION,
};
use crate::paths::stream_rng;

/// Erlang shape choices: separation-time coefficients of variation
/// 0.25, 0.2, 0.15, 0.1, 0.05.
const ERLANG_SHAPES: [u32; 5] = [16, 25, 44, 100, 400];

/// Candidate bad-weather forecast windows, in minutes of a full 8-hour day
/// with a one-hour lead. Shorter arrival windows scale these to the same
/// fractions of the day.
const WEATHER_WINDOWS: [(f64, f64); 3] = [(285.0, 315.0), (270.0, 330.0), (240.0, 360.0)];

/// Day geometry that the weather window constants assume.
const REFERENCE_LEAD_MIN: f64 = 60.0;
const REFERENCE_WINDOW_MIN: f64 = 480.0;

fn scale_weather_window(plan: &ExperimentPlan, window: (f64, f64)) -> WeatherWindow {
    let scale = plan.window_min / REFERENCE_WINDOW_MIN;
    WeatherWindow {
        start_min: plan.lead_min + (window.0 - REFERENCE_LEAD_MIN) * scale,
        end_min: plan.lead_min + (window.1 - REFERENCE_LEAD_MIN) * scale,
    }
}

const WEATHER_PROBABILITY: f64 = 0.75;

const BAD_WEATHER_FACTOR: f64 = 1.5;

/// Schedule-tolerance choices (minutes); 15 is the industry-standard
/// on-time window.
const SCHEDULE_TOLERANCES: [f64; 2] = [0.0, 15.0];

const SCHEDULE_WEIGHTS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

const POOL_LOOKAHEAD_MIN: f64 = 30.0;

/// Standard deviation of the pre-tactical delay in generated scenarios.
const PRE_DELAY_SD_MIN: f64 = 10.0;

/// Scheduled airborne time is sampled uniformly from this range (minutes).
const FLIGHT_DURATION_MIN: (f64, f64) = (60.0, 180.0);

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed shared by scenario `n` across all strata.
pub(crate) fn scenario_seed(base_seed: u64, n: usize) -> u64 {
    splitmix64(base_seed ^ splitmix64(n as u64))
}

/// Generate scenario `n` of the stratum with volatility `sigma`. All random
/// draws come from a stream independent of `sigma`.
pub fn generate_scenario(plan: &ExperimentPlan, sigma: f64, n: usize) -> Result<ScenarioConfig> {
    plan.validate()?;
    let seed = scenario_seed(plan.base_seed, n);
    let mut rng = stream_rng(seed, "scenario-gen");

    // Flight-level draws: scheduled arrival in the window, weight class,
    // scheduled airborne time. Sorted by arrival so ids follow the schedule.
    let mut drafts: Vec<(f64, WeightClass, f64)> = (0..plan.flights)
        .map(|_| {
            let arrival = plan.lead_min + rng.gen::<f64>() * plan.window_min;
            let class = WeightClass::ALL[rng.gen_range(0..WeightClass::ALL.len())];
            let duration = FLIGHT_DURATION_MIN.0
                + rng.gen::<f64>() * (FLIGHT_DURATION_MIN.1 - FLIGHT_DURATION_MIN.0);
            (arrival, class, duration)
        })
        .collect();
    drafts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let erlang_shape = ERLANG_SHAPES[rng.gen_range(0..ERLANG_SHAPES.len())];
    let forecast = if rng.gen::<f64>() < WEATHER_PROBABILITY {
        let raw = WEATHER_WINDOWS[rng.gen_range(0..WEATHER_WINDOWS.len())];
        Some(scale_weather_window(plan, raw))
    } else {
        None
    };

    let flights: Vec<FlightSpec> = drafts
        .iter()
        .enumerate()
        .map(|(i, &(arrival, class, duration))| {
            let range = class.cost_weight_range();
            FlightSpec {
                id: FlightId(i),
                scheduled_arrival: arrival,
                scheduled_departure: arrival - duration,
                uncertainty_onset: arrival - duration - 15.0,
                weight_class: class,
                cost_weight: range.0 + rng.gen::<f64>() * (range.1 - range.0),
                sigma,
            }
        })
        .collect();

    let schedule_tolerance = SCHEDULE_TOLERANCES[rng.gen_range(0..SCHEDULE_TOLERANCES.len())];
    let schedule_weight = SCHEDULE_WEIGHTS[rng.gen_range(0..SCHEDULE_WEIGHTS.len())];

    // Pre-tactical delays: gamma-distributed with mean equal to the gap
    // between onset and scheduled arrival, shifted to mean zero, so delays
    // are right-skewed with a fixed standard deviation.
    let pre_delays: Vec<f64> = flights
        .iter()
        .map(|f| {
            let gap = f.scheduled_arrival - f.uncertainty_onset;
            let var = PRE_DELAY_SD_MIN * PRE_DELAY_SD_MIN;
            let g = Gamma::new(gap * gap / var, gap / var).expect("positive gamma parameters");
            g.inverse_cdf(rng.gen::<f64>()) - gap
        })
        .collect();

    let config = ScenarioConfig {
        schema_version: SCENARIO_SCHEMA_VERSION,
        flights,
        separations: SeparationMatrix::heathrow(erlang_shape, BAD_WEATHER_FACTOR),
        weather: WeatherConfig {
            forecast,
            volatility: sigma,
        },
        costs: CostConfig {
            schedule_tolerance,
            holding_tolerance: 0.0,
            schedule_weight,
            holding_weight: 1.0 - schedule_weight,
            pool_lookahead: POOL_LOOKAHEAD_MIN,
        },
        horizon: plan.horizon_min,
        grid_step: plan.grid_step,
        seed,
        pre_delays,
    };
    config.validate()?;
    Ok(config)
}

/// All scenarios of the plan, outer order by stratum, inner by index.
pub fn generate_scenarios(plan: &ExperimentPlan) -> Result<Vec<ScenarioConfig>> {
    plan.validate()?;
    let mut out = Vec::with_capacity(plan.strata.len() * plan.scenarios_per_stratum);
    for &sigma in &plan.strata {
        for n in 0..plan.scenarios_per_stratum {
            out.push(generate_scenario(plan, sigma, n)?);
        }
    }
    Ok(out)
}

/// Hash of everything in the scenario except the volatility: equal across
/// strata for the same scenario index.
pub fn scenario_fingerprint(config: &ScenarioConfig) -> u64 {
    let mut neutral = config.clone();
    for f in &mut neutral.flights {
        f.sigma = 0.0;
    }
    neutral.weather.volatility = 0.0;
    neutral.content_hash()
}

impl WeightClass {
    /// Cost-weight sampling range: heavier classes carry more passengers and
    /// are weighted higher.
    pub fn cost_weight_range(&self) -> (f64, f64) {
        match self {
            WeightClass::Heavy => (0.8, 1.0),
            WeightClass::UpperMedium | WeightClass::LowerMedium => (0.6, 0.8),
            WeightClass::Small => (0.4, 0.6),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::pregenerate_true_path;

    fn plan() -> ExperimentPlan {
        ExperimentPlan {
            scenarios_per_stratum: 3,
            base_seed: 77,
            flights: 20,
            ..ExperimentPlan::default()
        }
    }

    #[test]
    fn common_random_numbers_across_strata() {
        let plan = plan();
        for n in 0..3 {
            let lo = generate_scenario(&plan, 0.1, n).unwrap();
            let hi = generate_scenario(&plan, 0.9, n).unwrap();
            assert_eq!(scenario_fingerprint(&lo), scenario_fingerprint(&hi));
            assert_eq!(lo.seed, hi.seed);
            assert_eq!(lo.separations.erlang_shape, hi.separations.erlang_shape);
            assert_eq!(lo.weather.forecast, hi.weather.forecast);
            assert_eq!(lo.pre_delays, hi.pre_delays);
            for (a, b) in lo.flights.iter().zip(&hi.flights) {
                assert_eq!(a.scheduled_arrival, b.scheduled_arrival);
                assert_eq!(a.weight_class, b.weight_class);
                assert_eq!(a.cost_weight, b.cost_weight);
                assert_eq!(a.sigma, 0.1);
                assert_eq!(b.sigma, 0.9);
            }
            assert_eq!(hi.weather.volatility, 0.9);
        }
    }

    #[test]
    fn distinct_indices_give_distinct_scenarios() {
        let plan = plan();
        let a = generate_scenario(&plan, 0.5, 0).unwrap();
        let b = generate_scenario(&plan, 0.5, 1).unwrap();
        assert_ne!(scenario_fingerprint(&a), scenario_fingerprint(&b));
    }

    #[test]
    fn sampled_fields_respect_their_ranges() {
        let plan = ExperimentPlan {
            scenarios_per_stratum: 40,
            base_seed: 5,
            flights: 30,
            ..ExperimentPlan::default()
        };
        let mut saw_weatherless = false;
        let mut saw_zero_tolerance = false;
        let mut saw_wide_tolerance = false;
        for n in 0..plan.scenarios_per_stratum {
            let cfg = generate_scenario(&plan, 0.5, n).unwrap();
            assert!(ERLANG_SHAPES.contains(&cfg.separations.erlang_shape));
            match cfg.weather.forecast {
                None => saw_weatherless = true,
                Some(w) => {
                    let scaled: Vec<WeatherWindow> = WEATHER_WINDOWS
                        .iter()
                        .map(|&raw| scale_weather_window(&plan, raw))
                        .collect();
                    assert!(scaled.contains(&w));
                    // The forecast overlaps the scheduled arrival window.
                    assert!(w.start_min < plan.lead_min + plan.window_min);
                    assert!(w.end_min > plan.lead_min);
                }
            }
            match cfg.costs.schedule_tolerance {
                t if t == 0.0 => saw_zero_tolerance = true,
                t if t == 15.0 => saw_wide_tolerance = true,
                t => panic!("unexpected tolerance {t}"),
            }
            assert!(SCHEDULE_WEIGHTS.contains(&cfg.costs.schedule_weight));
            assert!(
                (cfg.costs.schedule_weight + cfg.costs.holding_weight - 1.0).abs() < 1e-12
            );
            for f in &cfg.flights {
                let range = f.weight_class.cost_weight_range();
                assert!(f.cost_weight >= range.0 && f.cost_weight <= range.1);
                assert!(f.scheduled_arrival >= plan.lead_min);
                assert!(f.scheduled_arrival <= plan.lead_min + plan.window_min);
                assert!(
                    (f.uncertainty_onset - (f.scheduled_departure - 15.0)).abs() < 1e-12,
                    "uncertainty starts 15 min before scheduled departure"
                );
            }
            // Arrivals sorted by id.
            for pair in cfg.flights.windows(2) {
                assert!(pair[0].scheduled_arrival <= pair[1].scheduled_arrival);
            }
        }
        assert!(saw_weatherless, "25% of scenarios should lack weather");
        assert!(saw_zero_tolerance && saw_wide_tolerance);
    }

    #[test]
    fn pre_delays_center_near_zero_with_target_spread() {
        let plan = ExperimentPlan {
            scenarios_per_stratum: 50,
            flights: 40,
            base_seed: 9,
            ..ExperimentPlan::default()
        };
        let mut all = Vec::new();
        for n in 0..plan.scenarios_per_stratum {
            all.extend(generate_scenario(&plan, 0.3, n).unwrap().pre_delays);
        }
        let n = all.len() as f64;
        let mean = all.iter().sum::<f64>() / n;
        let var = all.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 1.0, "mean delay {mean} should be near zero");
        assert!(
            (var.sqrt() - PRE_DELAY_SD_MIN).abs() < 1.5,
            "delay sd {} should be near {PRE_DELAY_SD_MIN}",
            var.sqrt()
        );
    }

    #[test]
    fn generated_scenarios_support_path_generation() {
        let plan = plan();
        let cfg = generate_scenario(&plan, 0.7, 2).unwrap();
        let path = pregenerate_true_path(&cfg).unwrap();
        for i in 0..cfg.flight_count() {
            let q = path.pool_entry_time(i, cfg.costs.pool_lookahead);
            assert!(q.is_finite() && q >= 0.0);
        }
    }

    #[test]
    fn batch_order_is_stratum_major() {
        let plan = ExperimentPlan {
            strata: vec![0.1, 0.9],
            scenarios_per_stratum: 2,
            flights: 5,
            ..ExperimentPlan::default()
        };
        let all = generate_scenarios(&plan).unwrap();
        assert_eq!(all.len(), 4);
        assert_eq!(all[0].flights[0].sigma, 0.1);
        assert_eq!(all[3].flights[0].sigma, 0.9);
        assert_eq!(scenario_fingerprint(&all[0]), scenario_fingerprint(&all[2]));
    }
}
