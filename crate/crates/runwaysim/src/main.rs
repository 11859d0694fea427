//! Command-line front end: calibrate delay models from landing records,
//! generate scenario batches, run policy experiments, and reduce results to
//! report tables.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use runwaysim::calibration;
use runwaysim::harness::{
    compare_policies, emit_reports, generate_scenarios, run_experiment, ClockMode, ExperimentPlan,
    PolicyKind, RunResult,
};
use runwaysim::{Error, Result};

#[derive(Parser)]
#[command(name = "runwaysim", version, about = "Stochastic runway sequencing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit per-flight delay distributions from historical landing records.
    Calibrate(CalibrateArgs),
    /// Generate scenario configuration files from an experiment plan.
    Generate(GenerateArgs),
    /// Run the experiment and write per-scenario results.
    Run(RunArgs),
    /// Reduce results into comparison tables (CSV + JSON).
    Report(ReportArgs),
}

#[derive(Args)]
struct CalibrateArgs {
    /// CSV with header flight_id,day,sched_arr_min,actual_arr_min.
    #[arg(long)]
    records: PathBuf,
    /// Tactical (within-day) volatility assumed when splitting variance.
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    /// Minutes before the scheduled arrival at which tactical uncertainty
    /// starts (onset = scheduled arrival - this lead).
    #[arg(long, default_value_t = 135.0)]
    onset_lead: f64,
    /// Keep days that the delay-propagation test would discard.
    #[arg(long)]
    no_day_filter: bool,
    /// Output JSON of fitted parameters keyed by flight id.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct PlanArgs {
    /// Comma-separated volatility strata.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.3, 0.5, 0.7, 0.9])]
    strata: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    scenarios: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 60)]
    flights: usize,
    /// Length of the scheduled arrival window in minutes.
    #[arg(long, default_value_t = 60.0)]
    window: f64,
    /// Clock mode: wall-coupled, cpu-coupled or virtual-budget.
    #[arg(long, default_value = "wall-coupled")]
    clock: String,
    /// Simulated minutes per minute of computation (coupled clock modes).
    #[arg(long, default_value_t = 60.0)]
    compression: f64,
    /// Simulated minutes charged per controller pass (virtual-budget mode).
    #[arg(long, default_value_t = 0.001)]
    pass_cost: f64,
    /// Comma-separated policies: simheur, detheur, fcfs, dstat.
    #[arg(long, value_delimiter = ',', default_values_t =
        ["simheur".to_string(), "detheur".to_string(), "fcfs".to_string(), "dstat".to_string()])]
    policies: Vec<String>,
}

impl PlanArgs {
    fn to_plan(&self) -> Result<ExperimentPlan> {
        let clock_mode = match self.clock.as_str() {
            "wall-coupled" => ClockMode::WallCoupled,
            "cpu-coupled" => ClockMode::CpuCoupled,
            "virtual-budget" => ClockMode::VirtualBudget,
            other => return Err(Error::Config(format!("unknown clock mode {other:?}"))),
        };
        let policies = self
            .policies
            .iter()
            .map(|p| p.parse::<PolicyKind>())
            .collect::<Result<Vec<_>>>()?;
        let plan = ExperimentPlan {
            strata: self.strata.clone(),
            scenarios_per_stratum: self.scenarios,
            base_seed: self.seed,
            compression: self.compression,
            clock_mode,
            policies,
            flights: self.flights,
            window_min: self.window,
            virtual_pass_cost_min: self.pass_cost,
            ..ExperimentPlan::default()
        };
        plan.validate()?;
        Ok(plan)
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    plan: PlanArgs,
    /// Directory for the scenario JSON files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    plan: PlanArgs,
    /// Output JSON file with all per-scenario results.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Results JSON produced by `run`.
    #[arg(long)]
    results: PathBuf,
    /// Directory for the report tables.
    #[arg(long)]
    out: PathBuf,
}

fn calibrate(args: &CalibrateArgs) -> Result<()> {
    let records = calibration::read_records_csv(&args.records)?;
    let kept: Vec<_> = if args.no_day_filter {
        records
    } else {
        let filter = calibration::filter_days(&records);
        eprintln!(
            "day filter: {} retained ({} with undefined test), {} discarded",
            filter.retained.len(),
            filter.undefined.len(),
            filter.discarded.len()
        );
        records
            .into_iter()
            .filter(|r| filter.retained.contains(&r.day))
            .collect()
    };
    let mut by_flight: BTreeMap<String, Vec<calibration::FlightRecord>> = BTreeMap::new();
    for r in kept {
        by_flight.entry(r.flight_id.clone()).or_default().push(r);
    }
    let mut fitted = BTreeMap::new();
    for (flight, records) in &by_flight {
        let onset = records[0].sched_arr_min - args.onset_lead;
        match calibration::fit_gamma_params(
            records,
            args.sigma,
            onset,
            calibration::OUTLIER_WINDOW_MIN,
        ) {
            Ok(params) => {
                fitted.insert(flight.clone(), params);
            }
            Err(e) => eprintln!("skipping flight {flight}: {e}"),
        }
    }
    calibration::write_params_json(&args.out, &fitted)?;
    println!("fitted {} of {} flights -> {}", fitted.len(), by_flight.len(), args.out.display());
    Ok(())
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let plan = args.plan.to_plan()?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| Error::io(args.out.display().to_string(), e))?;
    let scenarios = generate_scenarios(&plan)?;
    for config in &scenarios {
        let sigma = config.flights[0].sigma;
        let name = format!("scenario-{sigma}-{:016x}.json", config.seed);
        let path = args.out.join(name);
        let mut file =
            std::fs::File::create(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
        serde_json::to_writer_pretty(&mut file, config)?;
        file.write_all(b"\n")
            .map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    println!("wrote {} scenarios -> {}", scenarios.len(), args.out.display());
    Ok(())
}

fn run(args: &RunArgs) -> Result<()> {
    let plan = args.plan.to_plan()?;
    let results = run_experiment(&plan)?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| Error::io(parent.display().to_string(), e))?;
        }
    }
    let mut file =
        std::fs::File::create(&args.out).map_err(|e| Error::io(args.out.display().to_string(), e))?;
    serde_json::to_writer(&mut file, &results)?;
    file.write_all(b"\n")
        .map_err(|e| Error::io(args.out.display().to_string(), e))?;
    println!("wrote {} results -> {}", results.len(), args.out.display());
    Ok(())
}

fn report(args: &ReportArgs) -> Result<()> {
    let file = std::fs::File::open(&args.results)
        .map_err(|e| Error::io(args.results.display().to_string(), e))?;
    let results: Vec<RunResult> = serde_json::from_reader(file)?;
    let table = compare_policies(&results)?;
    emit_reports(&table, &args.out)?;
    println!("wrote reports -> {}", args.out.display());
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Calibrate(args) => calibrate(args),
        Command::Generate(args) => generate(args),
        Command::Run(args) => run(args),
        Command::Report(args) => report(args),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
