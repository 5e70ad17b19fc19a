use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use comfort_planner::error::{Error, Result};
use comfort_planner::harness::{
    benchmark_timing, emit_plot_data, execute_run, load_scenario, run_experiment, score_log, Band, GridPoint,
    MatchTarget, MetricsRow, RunSpec, ScenarioConfig,
};
use comfort_planner::objective::ObjectiveKind;
use comfort_planner::planner::PlannerMode;
use comfort_planner::trajectory_kinematics::write_plan_dump;

#[derive(Parser)]
#[command(name = "comfort-planner", version, about = "Comfort-optimal speed and path planning along a lane")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one plan and print its metrics.
    Plan(PlanArgs),
    /// Run the weight sweep, preview grid and matched comparisons.
    Sweep(ScenarioArgs),
    /// Score recorded drives.
    Score(ScoreArgs),
    /// Time receding-horizon solves over the preview grid.
    Bench(ScenarioArgs),
    /// Write figure tables from a results directory.
    EmitPlots(PlotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Objective {
    Ms,
    Ma,
}

impl From<Objective> for ObjectiveKind {
    fn from(o: Objective) -> Self {
        match o {
            Objective::Ms => ObjectiveKind::Ms,
            Objective::Ma => ObjectiveKind::Ma,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Integral,
    RecedingHorizon,
}

impl From<Mode> for PlannerMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Integral => PlannerMode::Integral,
            Mode::RecedingHorizon => PlannerMode::RecedingHorizon,
        }
    }
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected A:B, got `{s}`"))?;
    let a = a.trim().parse::<f64>().map_err(|e| format!("{a}: {e}"))?;
    let b = b.trim().parse::<f64>().map_err(|e| format!("{b}: {e}"))?;
    Ok((a, b))
}

fn parse_grid_point(s: &str) -> std::result::Result<GridPoint, String> {
    let (tp, np) = parse_pair(s)?;
    if np.fract() != 0.0 || np < 0.0 {
        return Err(format!("horizon must be a whole number, got {np}"));
    }
    Ok(GridPoint {
        preview_time: tp,
        horizon: np as usize,
    })
}

fn parse_target(s: &str) -> std::result::Result<MatchTarget, String> {
    let (travel_time, tolerance) = parse_pair(s)?;
    Ok(MatchTarget { travel_time, tolerance })
}

fn parse_band(s: &str) -> std::result::Result<Band, String> {
    let (low_hz, high_hz) = parse_pair(s)?;
    Ok(Band { low_hz, high_hz })
}

/// Scenario settings. Keys present in `--config` win over these flags.
#[derive(Args, Default)]
struct ScenarioArgs {
    /// Scenario TOML file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Road file.
    #[arg(long)]
    road: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    objectives: Option<Vec<Objective>>,
    #[arg(long, value_delimiter = ',')]
    modes: Option<Vec<Mode>>,
    /// Travel-time weights, comma separated.
    #[arg(long, value_delimiter = ',')]
    w_grid: Option<Vec<f64>>,
    /// Preview settings as PREVIEW_TIME:HORIZON, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_grid_point)]
    grid: Option<Vec<GridPoint>>,
    /// Travel-time targets as TIME:TOLERANCE, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_target)]
    matched: Option<Vec<MatchTarget>>,
    /// Initial weight bracket as LOW:HIGH.
    #[arg(long, value_parser = parse_pair)]
    match_bracket: Option<(f64, f64)>,
    /// Longitudinal filter band in Hz as LOW:HIGH.
    #[arg(long, value_parser = parse_band)]
    longitudinal_band: Option<Band>,
    /// Lateral filter band in Hz as LOW:HIGH.
    #[arg(long, value_parser = parse_band)]
    lateral_band: Option<Band>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Start every receding-horizon step from scratch.
    #[arg(long)]
    no_warm_start: bool,
    /// Recorded drive logs, comma separated.
    #[arg(long, value_delimiter = ',')]
    telemetry: Option<Vec<PathBuf>>,
    #[arg(long)]
    gps_sigma: Option<f64>,
    #[arg(long)]
    process_accel_sigma: Option<f64>,
    #[arg(long)]
    bench_w: Option<f64>,
    #[arg(long)]
    bench_repeats: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// Seed of the initial-guess perturbation.
    #[arg(long)]
    seed: Option<u64>,
    /// Perturbation of integral initial speeds, m/s.
    #[arg(long)]
    init_jitter: Option<f64>,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<ScenarioConfig> {
        let mut c = ScenarioConfig::default();
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    c.$field = v.clone();
                }
            )*};
        }
        set!(road, output_dir, w_grid, grid, matched, telemetry, bench_w, bench_repeats, workers, seed, init_jitter);
        if let Some(o) = &self.objectives {
            c.objectives = o.iter().map(|&o| o.into()).collect();
        }
        if let Some(m) = &self.modes {
            c.modes = m.iter().map(|&m| m.into()).collect();
        }
        if let Some((lo, hi)) = self.match_bracket {
            c.match_bracket = [lo, hi];
        }
        if let Some(b) = self.longitudinal_band {
            c.filters.longitudinal = b;
        }
        if let Some(b) = self.lateral_band {
            c.filters.lateral = b;
        }
        if let Some(n) = self.max_iterations {
            let mut solver = c.solver.unwrap_or_default();
            solver.max_iterations = n;
            c.solver = Some(solver);
        }
        if self.no_warm_start {
            c.warm_start = false;
        }
        if let Some(s) = self.gps_sigma {
            c.fusion.gps_sigma = s;
        }
        if let Some(s) = self.process_accel_sigma {
            c.fusion.process_accel_sigma = s;
        }
        let c = match &self.config {
            Some(path) => c.overridden_by(path)?,
            None => c,
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, value_enum, default_value = "ms")]
    objective: Objective,
    #[arg(long, value_enum, default_value = "integral")]
    mode: Mode,
    /// Travel-time weight.
    #[arg(long, default_value_t = 10.0, conflicts_with = "target_time")]
    w: f64,
    /// Search the weight for this travel time instead, s.
    #[arg(long)]
    target_time: Option<f64>,
    /// Accepted travel-time deviation, s.
    #[arg(long, default_value_t = 0.2)]
    tolerance: f64,
    /// Preview time of receding-horizon mode, s.
    #[arg(long, default_value_t = 5.0)]
    preview_time: f64,
    /// Stations per receding-horizon preview.
    #[arg(long, default_value_t = 25)]
    horizon: usize,
    /// Write the trajectory dump here.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Logs to score; adds to the scenario's telemetry list.
    logs: Vec<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// Directory written by `sweep` and `bench`.
    #[arg(long, default_value = "out")]
    results: PathBuf,
}

fn plan(args: &PlanArgs) -> Result<bool> {
    let config = args.scenario.resolve()?;
    let (road, filters) = load_scenario(&config)?;
    let mode: PlannerMode = args.mode.into();
    let grid = (mode == PlannerMode::RecedingHorizon).then_some(GridPoint {
        preview_time: args.preview_time,
        horizon: args.horizon,
    });
    let spec = RunSpec {
        id: "plan".into(),
        mode,
        kind: args.objective.into(),
        grid,
        w: args.target_time.is_none().then_some(args.w),
        target: args.target_time.map(|travel_time| MatchTarget {
            travel_time,
            tolerance: args.tolerance,
        }),
    };
    let record = execute_run(&config, &road, &filters, &spec, 0)?;
    if let Some(path) = &args.dump {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        write_plan_dump(&record.report.plan, BufWriter::new(file))?;
    }
    let row = MetricsRow::from(&record);
    println!("{}", serde_json::to_string_pretty(&row).expect("metrics serialize"));
    Ok(row.converged && row.matched != Some(false))
}

fn sweep(args: &ScenarioArgs) -> Result<bool> {
    let config = args.resolve()?;
    let summary = run_experiment(&config)?;
    for d in &summary.deltas {
        println!(
            "target {:>5.1} s {:?}{}: D_MS {:+.2}%  D_MA {:+.2}% (MS plan vs MA plan)",
            d.target_time,
            d.mode,
            d.preview_time
                .zip(d.horizon)
                .map(|(tp, np)| format!(" T_p={tp} N_p={np}"))
                .unwrap_or_default(),
            -d.msdv_reduction_pct,
            d.d_ma_increase_pct,
        );
    }
    for (id, msg) in &summary.failures {
        eprintln!("failed: {id}: {msg}");
    }
    for id in summary.flagged() {
        eprintln!("flagged: {id}");
    }
    println!(
        "{} runs, {} failed, {} flagged; results in {}",
        summary.records.len() + summary.failures.len(),
        summary.failures.len(),
        summary.flagged().len(),
        summary.output_dir.display()
    );
    Ok(summary.success())
}

fn score(args: &ScoreArgs) -> Result<bool> {
    let mut config = args.scenario.resolve()?;
    config.telemetry.extend(args.logs.iter().cloned());
    if config.telemetry.is_empty() {
        return Err(Error::InvalidConfig("no logs to score".into()));
    }
    let filters = config.filters.build()?;
    let mut ok = true;
    println!("log,travel_time,d_ms,d_ma,squared_msdv,peak_ax,peak_ay");
    for path in &config.telemetry {
        match score_log(path, &filters, &config.fusion) {
            Ok(m) => println!(
                "{},{:.3},{:.4},{:.4},{:.4},{:.4},{:.4}",
                path.display(),
                m.travel_time,
                m.d_ms,
                m.d_ma,
                m.squared_msdv,
                m.peak_ax,
                m.peak_ay
            ),
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                ok = false;
            }
        }
    }
    Ok(ok)
}

fn bench(args: &ScenarioArgs) -> Result<bool> {
    let config = args.resolve()?;
    let report = benchmark_timing(&config)?;
    println!("T_p,N_p,T_s,objective,steps,mean_ms,p95_ms,max_ms,real_time");
    for p in &report.points {
        println!(
            "{},{},{},{},{},{:.3},{:.3},{:.3},{}",
            p.preview_time,
            p.horizon,
            p.sampling_time,
            p.objective,
            p.steps,
            p.mean_ms,
            p.p95_ms,
            p.max_ms,
            p.real_time
        );
    }
    for r in &report.ratios {
        println!(
            "T_p={} {}: T_s {} -> {} speeds up {:.2}x",
            r.preview_time, r.objective, r.from_sampling_time, r.to_sampling_time, r.factor
        );
    }
    for r in &report.ma_over_ms {
        println!("T_p={} N_p={}: MA/MS time {:.0}%", r.preview_time, r.horizon, 100.0 * r.ratio);
    }
    Ok(true)
}

fn emit_plots(args: &PlotArgs) -> Result<bool> {
    if !args.results.is_dir() {
        return Err(Error::InvalidConfig(format!("{} is not a directory", args.results.display())));
    }
    for path in emit_plot_data(&args.results)? {
        println!("{}", path.display());
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Plan(a) => plan(a),
        Command::Sweep(a) => sweep(a),
        Command::Score(a) => score(a),
        Command::Bench(a) => bench(a),
        Command::EmitPlots(a) => emit_plots(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
