//! Experiment orchestration: weight sweeps, preview grids, matched
//! travel-time comparisons, drive scoring, timing and plot data.
//!
//! Every output is plain CSV plus a JSON manifest. Metric files hold no
//! wall-clock data, so identical configurations produce identical bytes.

mod bench;
mod config;
mod plots;

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use bench::{benchmark_timing, TimingPoint, TimingRatio, TimingReport};
pub use config::{log_w_grid, table_grid, Band, FilterBands, GridPoint, MatchTarget, ScenarioConfig};
pub use plots::emit_plot_data;

use crate::error::{Error, Result};
use crate::frequency_weighting::AxisFilters;
use crate::objective::{metrics, Metrics, ObjectiveKind, ObjectiveSpec};
use crate::planner::{
    initial_guess, match_travel_time, solve_integral_from, solve_receding_horizon, PlannerConfig, PlannerMode,
    SolveReport, StepSample,
};
use crate::road_geometry::{build_stations, load_road, RoadProfile};
use crate::telemetry::{fuse, interpolate_gaps, score_drive, FusionParams, TelemetryLog};
use crate::trajectory_kinematics::{write_plan_dump, MotionPlan};

/// What a single run solves.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub id: String,
    pub mode: PlannerMode,
    pub kind: ObjectiveKind,
    /// Preview setting; `None` for integral runs.
    pub grid: Option<GridPoint>,
    /// Fixed weight for sweep runs.
    pub w: Option<f64>,
    /// Travel-time target for matched runs.
    pub target: Option<MatchTarget>,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub spec: RunSpec,
    pub w: f64,
    pub report: SolveReport,
    pub metrics: Metrics,
    /// Whether a matched run reached its target; `None` for sweep runs.
    pub matched: Option<bool>,
}

/// One row of `metrics.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub run_id: String,
    pub mode: PlannerMode,
    pub objective: ObjectiveKind,
    pub preview_time: Option<f64>,
    pub horizon: Option<usize>,
    pub sampling_time: Option<f64>,
    pub target_time: Option<f64>,
    pub w: f64,
    pub travel_time: f64,
    pub d_ms: f64,
    pub d_ma: f64,
    pub squared_msdv: f64,
    pub peak_ax: f64,
    pub peak_ay: f64,
    pub peak_combined: f64,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub matched: Option<bool>,
}

impl From<&RunRecord> for MetricsRow {
    fn from(r: &RunRecord) -> Self {
        let m = &r.metrics;
        Self {
            run_id: r.spec.id.clone(),
            mode: r.spec.mode,
            objective: r.spec.kind,
            preview_time: r.spec.grid.map(|g| g.preview_time),
            horizon: r.spec.grid.map(|g| g.horizon),
            sampling_time: r.spec.grid.map(|g| g.sampling_time()),
            target_time: r.spec.target.map(|t| t.travel_time),
            w: r.w,
            travel_time: m.travel_time,
            d_ms: m.d_ms,
            d_ma: m.d_ma,
            squared_msdv: m.squared_msdv,
            peak_ax: m.peak_ax,
            peak_ay: m.peak_ay,
            peak_combined: m.peak_combined,
            cost: r.report.cost,
            iterations: r.report.iterations,
            converged: r.report.converged,
            matched: r.matched,
        }
    }
}

/// MS against MA at one travel-time target and planner setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub target_time: f64,
    pub mode: PlannerMode,
    pub preview_time: Option<f64>,
    pub horizon: Option<usize>,
    pub travel_time_ms: f64,
    pub travel_time_ma: f64,
    pub d_ms_of_ms: f64,
    pub d_ms_of_ma: f64,
    pub d_ma_of_ms: f64,
    pub d_ma_of_ma: f64,
    /// `100 (1 - D_MS(MS plan) / D_MS(MA plan))`.
    pub msdv_reduction_pct: f64,
    /// `100 (D_MA(MS plan) / D_MA(MA plan) - 1)`.
    pub d_ma_increase_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanScore {
    pub log: String,
    pub travel_time: f64,
    pub d_ms: f64,
    pub d_ma: f64,
    pub squared_msdv: f64,
    pub peak_ax: f64,
    pub peak_ay: f64,
    pub peak_combined: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub output_dir: PathBuf,
    pub records: Vec<RunRecord>,
    /// Runs that returned an error, with the message.
    pub failures: Vec<(String, String)>,
    pub deltas: Vec<DeltaRow>,
    pub human: Vec<HumanScore>,
}

impl ExperimentSummary {
    /// Ids of runs that did not converge or missed their travel-time target.
    pub fn flagged(&self) -> Vec<String> {
        self.records
            .iter()
            .filter(|r| !r.report.converged || r.matched == Some(false))
            .map(|r| r.spec.id.clone())
            .collect()
    }

    pub fn success(&self) -> bool {
        self.failures.is_empty() && self.flagged().is_empty()
    }

    pub fn record(&self, id: &str) -> Option<&RunRecord> {
        self.records.iter().find(|r| r.spec.id == id)
    }
}

fn kind_label(kind: ObjectiveKind) -> String {
    kind.to_string()
}

/// Every run the configuration asks for, in output order.
pub fn plan_runs(config: &ScenarioConfig) -> Vec<RunSpec> {
    let mut runs = Vec::new();
    let settings: Vec<(PlannerMode, Option<GridPoint>)> = config
        .modes
        .iter()
        .flat_map(|&mode| match mode {
            PlannerMode::Integral => vec![(mode, None)],
            PlannerMode::RecedingHorizon => config.grid.iter().map(|g| (mode, Some(*g))).collect(),
        })
        .collect();
    let prefix = |grid: &Option<GridPoint>| match grid {
        None => "integral".to_string(),
        Some(g) => format!("rh_{}", g.label()),
    };
    for (mode, grid) in &settings {
        for &kind in &config.objectives {
            for &w in &config.w_grid {
                runs.push(RunSpec {
                    id: format!("{}_{}_w{}", prefix(grid), kind_label(kind), w),
                    mode: *mode,
                    kind,
                    grid: *grid,
                    w: Some(w),
                    target: None,
                });
            }
        }
    }
    for target in &config.matched {
        for (mode, grid) in &settings {
            for &kind in &config.objectives {
                runs.push(RunSpec {
                    id: format!("match{}_{}_{}", target.travel_time, prefix(grid), kind_label(kind)),
                    mode: *mode,
                    kind,
                    grid: *grid,
                    w: None,
                    target: Some(*target),
                });
            }
        }
    }
    runs
}

/// Loads the road and filters a configuration refers to.
pub fn load_scenario(config: &ScenarioConfig) -> Result<(RoadProfile, AxisFilters)> {
    config.validate()?;
    Ok((load_road(&config.road)?, config.filters.build()?))
}

pub(crate) fn planner_config(
    config: &ScenarioConfig,
    filters: &AxisFilters,
    kind: ObjectiveKind,
    w: f64,
    grid: Option<GridPoint>,
) -> PlannerConfig {
    let objective = ObjectiveSpec::new(kind, w).with_filters(filters.clone());
    let mut cfg = match grid {
        None => PlannerConfig::integral(objective),
        Some(g) => PlannerConfig::receding(objective, g.preview_time, g.horizon),
    };
    if let Some(solver) = config.solver {
        cfg.solver = solver;
    }
    cfg.warm_start = config.warm_start;
    cfg
}

/// Initial guess with uniformly perturbed interior speeds.
fn jittered_start(road: &RoadProfile, amplitude: f64, seed: u64) -> Result<MotionPlan> {
    let stations = build_stations(road)?;
    let (y, mut v) = initial_guess(road, &stations);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = v.len();
    for (k, vk) in v.iter_mut().enumerate().take(n - 1).skip(1) {
        let (lo, hi) = road.speed_bounds(stations[k].s);
        *vk = (*vk + rng.random_range(-amplitude..=amplitude)).clamp(lo, hi);
    }
    let heading = stations[0].tangent;
    MotionPlan::new(stations, y, v, heading)
}

/// Solves one run. `index` decorrelates initial-guess perturbations.
pub fn execute_run(
    config: &ScenarioConfig,
    road: &RoadProfile,
    filters: &AxisFilters,
    spec: &RunSpec,
    index: usize,
) -> Result<RunRecord> {
    let jitter = if config.init_jitter > 0.0 && spec.mode == PlannerMode::Integral {
        Some(jittered_start(road, config.init_jitter, config.seed.wrapping_add(index as u64))?)
    } else {
        None
    };
    let solve_at = |w: f64, warm: Option<&SolveReport>| -> Result<SolveReport> {
        let cfg = planner_config(config, filters, spec.kind, w, spec.grid);
        match spec.mode {
            PlannerMode::Integral => {
                let mut cfg = cfg;
                let start = warm.map(|r| &r.plan).or(jitter.as_ref());
                if jitter.is_some() && warm.is_none() {
                    cfg.warm_start = true;
                }
                solve_integral_from(road, &cfg, start)
            }
            PlannerMode::RecedingHorizon => solve_receding_horizon(road, &cfg, None),
        }
    };
    let (w, report, matched) = match (spec.w, spec.target) {
        (Some(w), _) => (w, solve_at(w, None)?, None),
        (None, Some(t)) => {
            let [lo, hi] = config.match_bracket;
            let m = match_travel_time(t.travel_time, t.tolerance, lo, hi, solve_at)?;
            (m.w, m.report, Some(m.matched))
        }
        (None, None) => return Err(Error::InvalidConfig(format!("run {} has neither W nor target", spec.id))),
    };
    let metrics = metrics(&report.plan, filters)?;
    Ok(RunRecord {
        spec: spec.clone(),
        w,
        report,
        metrics,
        matched,
    })
}

/// Runs `jobs` on `workers` threads, keeping results in job order.
pub(crate) fn run_pool<T, F>(count: usize, workers: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = workers.clamp(1, count.max(1));
    if workers == 1 {
        return (0..count).map(job).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..count).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let out = job(i);
                slots.lock().expect("result slots")[i] = Some(out);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots")
        .into_iter()
        .map(|s| s.expect("every job ran"))
        .collect()
}

pub fn score_log(path: &Path, filters: &AxisFilters, fusion: &FusionParams) -> Result<Metrics> {
    let log = TelemetryLog::load(path)?;
    let fused = fuse(&interpolate_gaps(&log)?, fusion)?;
    score_drive(&fused, filters)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub(crate) fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Per-step timing row, shared by experiment and benchmark outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub step_index: usize,
    #[serde(rename = "N_p")]
    pub n_p: usize,
    #[serde(rename = "T_p")]
    pub t_p: f64,
    #[serde(rename = "T_s")]
    pub t_s: f64,
    pub objective_kind: ObjectiveKind,
    pub solve_ms: f64,
    pub iterations: usize,
    pub run_id: String,
}

pub(crate) fn timing_rows(run_id: &str, kind: ObjectiveKind, grid: GridPoint, steps: &[StepSample]) -> Vec<TimingRow> {
    steps
        .iter()
        .map(|s| TimingRow {
            step_index: s.step_index,
            n_p: s.stations,
            t_p: grid.preview_time,
            t_s: grid.sampling_time(),
            objective_kind: kind,
            solve_ms: s.solve_ms,
            iterations: s.iterations,
            run_id: run_id.to_string(),
        })
        .collect()
}

fn deltas(records: &[RunRecord]) -> Vec<DeltaRow> {
    let mut out = Vec::new();
    let matched: Vec<&RunRecord> = records.iter().filter(|r| r.spec.target.is_some()).collect();
    for ms in matched.iter().filter(|r| r.spec.kind == ObjectiveKind::Ms) {
        let Some(ma) = matched.iter().find(|r| {
            r.spec.kind == ObjectiveKind::Ma
                && r.spec.mode == ms.spec.mode
                && r.spec.grid == ms.spec.grid
                && r.spec.target == ms.spec.target
        }) else {
            continue;
        };
        let (a, b) = (&ms.metrics, &ma.metrics);
        out.push(DeltaRow {
            target_time: ms.spec.target.map_or(f64::NAN, |t| t.travel_time),
            mode: ms.spec.mode,
            preview_time: ms.spec.grid.map(|g| g.preview_time),
            horizon: ms.spec.grid.map(|g| g.horizon),
            travel_time_ms: a.travel_time,
            travel_time_ma: b.travel_time,
            d_ms_of_ms: a.d_ms,
            d_ms_of_ma: b.d_ms,
            d_ma_of_ms: a.d_ma,
            d_ma_of_ma: b.d_ma,
            msdv_reduction_pct: 100.0 * (1.0 - a.d_ms / b.d_ms),
            d_ma_increase_pct: 100.0 * (a.d_ma / b.d_ma - 1.0),
        });
    }
    out
}

/// Hex SHA-256 of the configuration's TOML form.
pub fn config_hash(config: &ScenarioConfig) -> String {
    hex::encode(Sha256::digest(config.to_toml().as_bytes()))
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    crate_name: &'a str,
    crate_version: &'a str,
    config_hash: String,
    config: &'a ScenarioConfig,
    runs: usize,
    failures: BTreeMap<String, String>,
    flagged: Vec<String>,
    files: Vec<String>,
}

/// Runs every configured solve, scores the configured drives and writes
/// results under `config.output_dir`.
///
/// Layout: `metrics.csv`, `pareto.csv`, `deltas.csv`, `human_scores.csv`,
/// `trajectories/<run_id>.csv`, `timing/rh_<grid>.csv` and `manifest.json`.
/// Configuration errors abort before any solve; a failing run is reported in
/// the manifest and the summary while the others proceed.
pub fn run_experiment(config: &ScenarioConfig) -> Result<ExperimentSummary> {
    let (road, filters) = load_scenario(config)?;
    let out = &config.output_dir;
    create_dir(&out.join("trajectories"))?;
    create_dir(&out.join("timing"))?;

    let specs = plan_runs(config);
    log::info!("running {} solves on {} worker(s)", specs.len(), config.workers);
    let results = run_pool(specs.len(), config.workers, |i| {
        let r = execute_run(config, &road, &filters, &specs[i], i);
        match &r {
            Ok(rec) => log::info!(
                "{}: T = {:.2} s, D_MS = {:.2}, D_MA = {:.2}",
                rec.spec.id,
                rec.metrics.travel_time,
                rec.metrics.d_ms,
                rec.metrics.d_ma
            ),
            Err(e) => log::error!("{} failed: {e}", specs[i].id),
        }
        r
    });

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (spec, r) in specs.iter().zip(results) {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push((spec.id.clone(), e.to_string())),
        }
    }

    let mut files = Vec::new();
    let rows: Vec<MetricsRow> = records.iter().map(MetricsRow::from).collect();
    write_csv(&out.join("metrics.csv"), &rows)?;
    files.push("metrics.csv".to_string());

    for rec in &records {
        let name = format!("trajectories/{}.csv", rec.spec.id);
        let path = out.join(&name);
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        write_plan_dump(&rec.report.plan, BufWriter::new(file))?;
        files.push(name);
    }

    for g in &config.grid {
        if !config.modes.contains(&PlannerMode::RecedingHorizon) {
            break;
        }
        let rows: Vec<TimingRow> = records
            .iter()
            .filter(|r| r.spec.grid == Some(*g))
            .flat_map(|r| timing_rows(&r.spec.id, r.spec.kind, *g, &r.report.steps))
            .collect();
        let name = format!("timing/rh_{}.csv", g.label());
        write_csv(&out.join(&name), &rows)?;
        files.push(name);
    }

    let mut pareto: Vec<MetricsRow> = rows.iter().filter(|r| r.target_time.is_none()).cloned().collect();
    pareto.sort_by(|a, b| a.travel_time.total_cmp(&b.travel_time).then_with(|| a.run_id.cmp(&b.run_id)));
    write_csv(&out.join("pareto.csv"), &pareto)?;
    files.push("pareto.csv".to_string());

    let deltas = deltas(&records);
    write_csv(&out.join("deltas.csv"), &deltas)?;
    files.push("deltas.csv".to_string());

    let mut human = Vec::new();
    for path in &config.telemetry {
        match score_log(path, &filters, &config.fusion) {
            Ok(m) => human.push(HumanScore {
                log: path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()),
                travel_time: m.travel_time,
                d_ms: m.d_ms,
                d_ma: m.d_ma,
                squared_msdv: m.squared_msdv,
                peak_ax: m.peak_ax,
                peak_ay: m.peak_ay,
                peak_combined: m.peak_combined,
            }),
            Err(e) => failures.push((path.display().to_string(), e.to_string())),
        }
    }
    if !config.telemetry.is_empty() {
        write_csv(&out.join("human_scores.csv"), &human)?;
        files.push("human_scores.csv".to_string());
    }

    let summary = ExperimentSummary {
        output_dir: out.clone(),
        records,
        failures,
        deltas,
        human,
    };
    let manifest = Manifest {
        crate_name: env!("CARGO_PKG_NAME"),
        crate_version: env!("CARGO_PKG_VERSION"),
        config_hash: config_hash(config),
        config,
        runs: specs.len(),
        failures: summary.failures.iter().cloned().collect(),
        flagged: summary.flagged(),
        files,
    };
    let path = out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(summary)
}

/// Rebuilds a plan from a trajectory dump on `road` and recomputes its
/// metrics, for auditing emitted rows.
pub fn rescore_dump(road: &RoadProfile, filters: &AxisFilters, path: &Path) -> Result<Metrics> {
    #[derive(Deserialize)]
    struct DumpRow {
        s: f64,
        y: f64,
        v: f64,
    }
    let rows: Vec<DumpRow> = read_csv(path)?;
    let stations = rows.iter().map(|r| road.station_at(r.s)).collect();
    let plan = MotionPlan::new(
        stations,
        rows.iter().map(|r| r.y).collect(),
        rows.iter().map(|r| r.v).collect(),
        road.station_at(0.0).tangent,
    )?;
    metrics(&plan, filters)
}
