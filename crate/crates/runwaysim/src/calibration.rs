//! Calibration of pre-tactical delay distributions from historical landing
//! records: filter out congestion-contaminated days (where the lateness of
//! one landing predicts the lateness of the next), then fit a per-flight
//! gamma delay model that splits the observed arrival variance between
//! pre-tactical and tactical uncertainty.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma, Normal};

use crate::error::{Error, Result};

/// One historical landing observation. Times are minutes from the schedule
/// origin of the day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightRecord {
    pub flight_id: String,
    pub day: u32,
    pub sched_arr_min: f64,
    pub actual_arr_min: f64,
}

impl FlightRecord {
    pub fn lateness(&self) -> f64 {
        self.actual_arr_min - self.sched_arr_min
    }

    /// Strictly before schedule counts as early; exactly on time does not.
    pub fn is_early(&self) -> bool {
        self.actual_arr_min < self.sched_arr_min
    }
}

/// Outcome of the day filter.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DayFilter {
    pub retained: Vec<u32>,
    pub discarded: Vec<u32>,
    /// Days retained because the test was undefined (one of the two
    /// predecessor groups was empty).
    pub undefined: Vec<u32>,
}

/// Significance level below which a day is considered contaminated.
pub const DAY_FILTER_ALPHA: f64 = 0.05;

/// Split each day's landings (ordered by actual landing time) into followers
/// of an early predecessor and followers of a non-early one, compare the two
/// groups' early-landing fractions with a pooled two-proportion z-test, and
/// discard the day when the difference is significant: delay propagation
/// indicates queueing contamination. The first landing of a day has no
/// predecessor and joins neither group.
pub fn filter_days(records: &[FlightRecord]) -> DayFilter {
    let mut by_day: BTreeMap<u32, Vec<&FlightRecord>> = BTreeMap::new();
    for r in records {
        by_day.entry(r.day).or_default().push(r);
    }
    let normal = Normal::standard();
    let mut out = DayFilter::default();
    for (day, mut landings) in by_day {
        landings.sort_by(|a, b| {
            a.actual_arr_min
                .partial_cmp(&b.actual_arr_min)
                .unwrap()
                .then(a.flight_id.cmp(&b.flight_id))
        });
        let mut n = [0usize; 2]; // followers of [early, non-early] predecessor
        let mut early = [0usize; 2];
        for pair in landings.windows(2) {
            let group = if pair[0].is_early() { 0 } else { 1 };
            n[group] += 1;
            if pair[1].is_early() {
                early[group] += 1;
            }
        }
        if n[0] == 0 || n[1] == 0 {
            out.undefined.push(day);
            out.retained.push(day);
            continue;
        }
        let p1 = early[0] as f64 / n[0] as f64;
        let p2 = early[1] as f64 / n[1] as f64;
        let pooled = (early[0] + early[1]) as f64 / (n[0] + n[1]) as f64;
        let denom = (pooled * (1.0 - pooled) * (1.0 / n[0] as f64 + 1.0 / n[1] as f64)).sqrt();
        let z = if denom > 0.0 { (p1 - p2) / denom } else { 0.0 };
        let p_value = 2.0 * (1.0 - normal.cdf(z.abs()));
        if p_value < DAY_FILTER_ALPHA {
            out.discarded.push(day);
        } else {
            out.retained.push(day);
        }
    }
    out
}

/// Fitted pre-tactical delay model for one flight: the delay is
/// Y - (scheduled_arrival - onset) with Y gamma-distributed, unless the
/// requested tactical variance already exceeds the observed variance, in
/// which case the delay is pinned at its data-calibrated mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedParams {
    pub alpha: f64,
    pub beta: f64,
    /// Sample mean of the actual landing time.
    pub sample_mean: f64,
    /// Sample variance of the actual landing time.
    pub sample_var: f64,
    pub fallback: bool,
}

/// Records landing more than this many minutes off schedule are outliers.
pub const OUTLIER_WINDOW_MIN: f64 = 120.0;

/// Fit the gamma delay parameters for one flight from its landing records.
/// Matching the observed mean and variance of the landing time to the model
/// (total variance = pre-tactical variance + sigma^2 * (mean - onset)) gives
///   alpha = (mean - onset)^2 / d,  beta = (mean - onset) / d,
/// with d = variance - sigma^2 * (mean - onset). When d <= 0 the tactical
/// part alone accounts for all observed variance and the fit falls back to a
/// deterministic delay.
pub fn fit_gamma_params(
    records: &[FlightRecord],
    sigma: f64,
    onset: f64,
    outlier_window: f64,
) -> Result<FittedParams> {
    let usable: Vec<f64> = records
        .iter()
        .filter(|r| r.lateness().abs() <= outlier_window)
        .map(|r| r.actual_arr_min)
        .collect();
    let flight = records.first().map(|r| r.flight_id.clone()).unwrap_or_default();
    if usable.len() < 2 {
        return Err(Error::Fit {
            flight,
            reason: format!("{} usable records, need at least 2", usable.len()),
        });
    }
    let n = usable.len() as f64;
    let mean = usable.iter().sum::<f64>() / n;
    let var = usable.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    let gap = mean - onset;
    if gap <= 0.0 {
        return Err(Error::Fit {
            flight,
            reason: format!("mean landing time {mean} not after onset {onset}"),
        });
    }
    let d = var - sigma * sigma * gap;
    if d <= 0.0 {
        return Ok(FittedParams {
            alpha: 0.0,
            beta: 0.0,
            sample_mean: mean,
            sample_var: var,
            fallback: true,
        });
    }
    Ok(FittedParams {
        alpha: gap * gap / d,
        beta: gap / d,
        sample_mean: mean,
        sample_var: var,
        fallback: false,
    })
}

/// Draw one pre-tactical delay: Y - (scheduled_arrival - onset) with
/// Y ~ Gamma(alpha, beta). Fallback fits return the constant mean delay.
pub fn sample_pretactical_delay<R: Rng>(
    params: &FittedParams,
    scheduled_arrival: f64,
    onset: f64,
    rng: &mut R,
) -> f64 {
    if params.fallback {
        return params.sample_mean - scheduled_arrival;
    }
    let g = Gamma::new(params.alpha, params.beta).expect("valid fitted gamma");
    let u: f64 = rng.gen();
    g.inverse_cdf(u) - (scheduled_arrival - onset)
}

/// Implied unconditional mean landing time of the fitted model: the sample
/// mean, independent of how the variance is split.
pub fn fitted_mean_arrival(params: &FittedParams, scheduled_arrival: f64, onset: f64) -> f64 {
    if params.fallback {
        return params.sample_mean;
    }
    scheduled_arrival + (params.alpha / params.beta - (scheduled_arrival - onset))
}

/// Generate synthetic landing records from known model parameters so the
/// whole pipeline is testable without proprietary data: each day's landing
/// is scheduled + delay + tactical noise of variance sigma^2 * (mean - onset).
pub fn generate_synthetic_records<R: Rng>(
    flight_id: &str,
    scheduled_arrival: f64,
    onset: f64,
    alpha: f64,
    beta: f64,
    sigma: f64,
    days: u32,
    rng: &mut R,
) -> Vec<FlightRecord> {
    let g = Gamma::new(alpha, beta).expect("valid gamma");
    (0..days)
        .map(|day| {
            let u: f64 = rng.gen();
            let pre = g.inverse_cdf(u) - (scheduled_arrival - onset);
            let gap = scheduled_arrival + pre - onset;
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            let actual = scheduled_arrival + pre + z * sigma * gap.max(0.0).sqrt();
            FlightRecord {
                flight_id: flight_id.to_string(),
                day,
                sched_arr_min: scheduled_arrival,
                actual_arr_min: actual,
            }
        })
        .collect()
}

/// Read landing records from a CSV file with header
/// `flight_id,day,sched_arr_min,actual_arr_min`.
pub fn read_records_csv(path: &Path) -> Result<Vec<FlightRecord>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut records = Vec::new();
    for row in reader.deserialize() {
        records.push(row?);
    }
    Ok(records)
}

pub fn write_records_csv(path: &Path, records: &[FlightRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    for r in records {
        writer.serialize(r)?;
    }
    writer
        .flush()
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

/// Write fitted parameters as JSON keyed by flight id.
pub fn write_params_json(path: &Path, params: &BTreeMap<String, FittedParams>) -> Result<()> {
    let mut file =
        std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::to_writer_pretty(&mut file, params)?;
    file.write_all(b"\n")
        .and_then(|_| file.flush())
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

pub fn read_params_json(path: &Path) -> Result<BTreeMap<String, FittedParams>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(serde_json::from_reader(file)?)
}
