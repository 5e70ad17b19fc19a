//! Scenario files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frequency_weighting::{Axis, AxisFilters, FilterSpec, DEFAULT_HIGH_HZ, DEFAULT_LOW_HZ};
use crate::objective::ObjectiveKind;
use crate::planner::{PlannerMode, SolverParams};
use crate::telemetry::FusionParams;

/// One receding-horizon preview setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPoint {
    /// Preview time, s.
    pub preview_time: f64,
    /// Stations per horizon.
    pub horizon: usize,
}

impl GridPoint {
    pub fn sampling_time(&self) -> f64 {
        self.preview_time / self.horizon as f64
    }

    /// `tp5_np50`, used in run ids and file names.
    pub fn label(&self) -> String {
        format!("tp{}_np{}", self.preview_time, self.horizon)
    }
}

/// The preview grid of the timing and comfort study: preview times 3, 4 and
/// 5 s, each at sampling times 0.1, 0.2 and 0.5 s.
pub fn table_grid() -> Vec<GridPoint> {
    [(3.0, 30), (3.0, 15), (3.0, 6), (4.0, 40), (4.0, 20), (4.0, 8), (5.0, 50), (5.0, 25), (5.0, 10)]
        .into_iter()
        .map(|(preview_time, horizon)| GridPoint { preview_time, horizon })
        .collect()
}

/// `count` weights spaced evenly in log between `low` and `high`.
pub fn log_w_grid(low: f64, high: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![low],
        _ => {
            let step = (high / low).ln() / (count - 1) as f64;
            (0..count)
                .map(|i| if i + 1 == count { high } else { low * (step * i as f64).exp() })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchTarget {
    /// Travel time to reach, s.
    pub travel_time: f64,
    /// Accepted deviation, s.
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    pub low_hz: f64,
    pub high_hz: f64,
}

impl Default for Band {
    fn default() -> Self {
        Self {
            low_hz: DEFAULT_LOW_HZ,
            high_hz: DEFAULT_HIGH_HZ,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterBands {
    pub longitudinal: Band,
    pub lateral: Band,
}

impl FilterBands {
    pub fn build(&self) -> Result<AxisFilters> {
        AxisFilters::new(
            FilterSpec::from_band(self.longitudinal.low_hz, self.longitudinal.high_hz, Axis::Longitudinal),
            FilterSpec::from_band(self.lateral.low_hz, self.lateral.high_hz, Axis::Lateral),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Road file; relative paths resolve against the scenario file.
    pub road: PathBuf,
    pub output_dir: PathBuf,
    pub objectives: Vec<ObjectiveKind>,
    pub modes: Vec<PlannerMode>,
    /// Travel-time weights of the sweep.
    pub w_grid: Vec<f64>,
    /// Receding-horizon preview settings.
    pub grid: Vec<GridPoint>,
    pub filters: FilterBands,
    /// Travel times at which MS and MA plans are compared.
    pub matched: Vec<MatchTarget>,
    /// Initial weight bracket of the travel-time search.
    pub match_bracket: [f64; 2],
    /// Overrides the planner's solver settings for every run.
    pub solver: Option<SolverParams>,
    pub warm_start: bool,
    /// Recorded drives to score alongside the planner runs.
    pub telemetry: Vec<PathBuf>,
    pub fusion: FusionParams,
    /// Time weight of the timing benchmark.
    pub bench_w: f64,
    /// Full receding-horizon runs per benchmark point.
    pub bench_repeats: usize,
    /// Parallel solves; the timing benchmark always uses one.
    pub workers: usize,
    /// Seeds the initial-guess perturbation.
    pub seed: u64,
    /// Uniform perturbation (m/s) of interior initial speeds in integral
    /// solves; zero keeps the deterministic smoothed speed limit.
    pub init_jitter: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            road: PathBuf::from("routes/waarder_a12.road"),
            output_dir: PathBuf::from("out"),
            objectives: vec![ObjectiveKind::Ms, ObjectiveKind::Ma],
            modes: vec![PlannerMode::Integral, PlannerMode::RecedingHorizon],
            w_grid: log_w_grid(0.05, 50.0, 15),
            grid: table_grid(),
            filters: FilterBands::default(),
            matched: vec![
                MatchTarget {
                    travel_time: 69.0,
                    tolerance: 0.2,
                },
                MatchTarget {
                    travel_time: 75.0,
                    tolerance: 0.5,
                },
            ],
            match_bracket: [1.0, 30.0],
            solver: None,
            warm_start: true,
            telemetry: Vec::new(),
            fusion: FusionParams::default(),
            bench_w: 10.0,
            bench_repeats: 1,
            workers: 1,
            seed: 0,
            init_jitter: 0.0,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Reads a scenario file and resolves its relative paths against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&text, path)?;
        config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(config)
    }

    /// `self` with every key present in the scenario file at `path`
    /// replaced by the file's value. Relative paths in the file resolve
    /// against its directory.
    pub fn overridden_by(&self, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            message,
        };
        let file: toml::Table = toml::from_str(&text).map_err(|e| parse_err(e.to_string()))?;
        // validate the file on its own first so typos surface with its name
        let mut from_file = Self::from_toml(&text, path)?;
        from_file.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        let resolved: toml::Table =
            toml::from_str(&from_file.to_toml()).map_err(|e| parse_err(e.to_string()))?;
        let mut merged: toml::Table = toml::from_str(&self.to_toml()).map_err(|e| parse_err(e.to_string()))?;
        for key in file.keys() {
            match resolved.get(key) {
                Some(v) => merged.insert(key.clone(), v.clone()),
                None => merged.remove(key),
            };
        }
        merged.try_into().map_err(|e: toml::de::Error| parse_err(e.to_string()))
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.road);
        join(&mut self.output_dir);
        self.telemetry.iter_mut().for_each(join);
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !self.road.is_file() {
            return bad(format!("road file {} does not exist", self.road.display()));
        }
        for t in &self.telemetry {
            if !t.is_file() {
                return bad(format!("telemetry file {} does not exist", t.display()));
            }
        }
        if self.objectives.is_empty() {
            return bad("no objectives".into());
        }
        if self.modes.is_empty() {
            return bad("no planner modes".into());
        }
        if self.w_grid.is_empty() {
            return bad("empty W grid".into());
        }
        if let Some(w) = self.w_grid.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return bad(format!("time weight {w} in W grid is not finite and >= 0"));
        }
        if self.modes.contains(&PlannerMode::RecedingHorizon) && self.grid.is_empty() {
            return bad("receding-horizon mode needs a nonempty preview grid".into());
        }
        for g in &self.grid {
            if !(g.preview_time > 0.0) || g.horizon < 3 {
                return bad(format!("invalid preview setting {g:?}"));
            }
        }
        for m in &self.matched {
            if !(m.travel_time > 0.0 && m.tolerance > 0.0) {
                return bad(format!("invalid travel-time target {m:?}"));
            }
        }
        let [lo, hi] = self.match_bracket;
        if !(lo > 0.0 && hi > lo) {
            return bad(format!("weight bracket [{lo}, {hi}] must be positive and increasing"));
        }
        if !(self.bench_w >= 0.0) || self.bench_repeats == 0 {
            return bad("benchmark needs W >= 0 and at least one repeat".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if !(self.init_jitter >= 0.0) {
            return bad(format!("init_jitter must be >= 0, got {}", self.init_jitter));
        }
        self.filters.build()?;
        self.fusion.validate()?;
        Ok(())
    }
}
