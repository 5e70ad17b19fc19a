//! Integral and receding-horizon trajectory optimization.

mod integral;
mod problem;
mod receding;
pub mod solver;

use serde::{Deserialize, Serialize};

pub use integral::{initial_guess, solve_integral, solve_integral_from};
pub use problem::PlanObjective;
pub use receding::{solve_receding_horizon, RhInitialState};
pub use solver::{inner_solve, Bounds, Objective, SolveOutcome, SolverParams, Termination};

use crate::error::{Error, Result};
use crate::objective::ObjectiveSpec;
use crate::road_geometry::RoadProfile;
use crate::trajectory_kinematics::{travel_time, MotionPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerMode {
    Integral,
    RecedingHorizon,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    pub mode: PlannerMode,
    pub objective: ObjectiveSpec,
    /// Preview time, seconds.
    pub preview_time: f64,
    /// Number of stations per horizon.
    pub horizon: usize,
    pub solver: SolverParams,
    pub warm_start: bool,
}

impl PlannerConfig {
    pub fn integral(objective: ObjectiveSpec) -> Self {
        Self {
            mode: PlannerMode::Integral,
            objective,
            preview_time: 5.0,
            horizon: 25,
            solver: SolverParams::default(),
            warm_start: true,
        }
    }

    pub fn receding(objective: ObjectiveSpec, preview_time: f64, horizon: usize) -> Self {
        Self {
            mode: PlannerMode::RecedingHorizon,
            preview_time,
            horizon,
            // horizon solves only commit their first waypoint, so the model
            // decrement can stop them earlier than a whole-route solve
            solver: SolverParams {
                decrement_tolerance: 1e-8,
                ..SolverParams::default()
            },
            ..Self::integral(objective)
        }
    }

    /// Nominal sampling time `T_p / N_p`.
    pub fn sampling_time(&self) -> f64 {
        self.preview_time / self.horizon as f64
    }

    pub fn validate(&self) -> Result<()> {
        self.objective.validate()?;
        if self.mode == PlannerMode::RecedingHorizon {
            if self.horizon < 3 {
                return Err(Error::InvalidConfig(format!(
                    "horizon needs at least 3 stations, got {}",
                    self.horizon
                )));
            }
            if !(self.preview_time > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "preview time must be positive, got {}",
                    self.preview_time
                )));
            }
            if !(3.0..=5.0).contains(&self.preview_time) {
                log::warn!(
                    "preview time {} s is outside the recommended 3-5 s",
                    self.preview_time
                );
            }
        }
        Ok(())
    }
}

/// Timing and convergence of one receding-horizon solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSample {
    pub step_index: usize,
    /// Stations in this horizon; fewer than `N_p` near the route end.
    pub stations: usize,
    pub solve_ms: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The solver failed and the shifted previous solution was reused.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub plan: MotionPlan,
    /// Objective value of `plan` evaluated from rest filter states.
    pub cost: f64,
    pub iterations: usize,
    /// Wall-clock seconds.
    pub solve_time: f64,
    pub converged: bool,
    /// Per-solve samples; empty for integral solves.
    pub steps: Vec<StepSample>,
}

impl SolveReport {
    pub fn travel_time(&self) -> f64 {
        travel_time(&self.plan).unwrap_or(f64::NAN)
    }
}

/// Runs the mode selected in `config`.
pub fn solve(road: &RoadProfile, config: &PlannerConfig) -> Result<SolveReport> {
    match config.mode {
        PlannerMode::Integral => solve_integral(road, config),
        PlannerMode::RecedingHorizon => solve_receding_horizon(road, config, None),
    }
}

/// Outcome of a travel-time match.
#[derive(Debug, Clone)]
pub struct MatchedSolve {
    pub w: f64,
    pub report: SolveReport,
    /// `|T - target|` is within tolerance.
    pub matched: bool,
    pub evaluations: usize,
}

/// Searches the time weight `W` so that the travel time of `solve_at(W)`
/// lands within `tolerance` of `target`.
///
/// Travel time falls as `W` grows. The search brackets the target on a
/// logarithmic scale starting from `[w_lo, w_hi]`, then applies the Illinois
/// variant of regula falsi on `log W`. `solve_at` receives the report closest
/// to the target so far, for warm starting.
pub fn match_travel_time<F>(
    target: f64,
    tolerance: f64,
    w_lo: f64,
    w_hi: f64,
    mut solve_at: F,
) -> Result<MatchedSolve>
where
    F: FnMut(f64, Option<&SolveReport>) -> Result<SolveReport>,
{
    if !(w_lo > 0.0 && w_hi > w_lo) {
        return Err(Error::InvalidConfig(format!(
            "weight bracket [{w_lo}, {w_hi}] must be positive and increasing"
        )));
    }
    let mut evaluations = 0;
    let mut best: Option<(f64, SolveReport)> = None;
    let mut eval = |w: f64, best: &mut Option<(f64, SolveReport)>| -> Result<f64> {
        let report = solve_at(w, best.as_ref().map(|(_, r)| r))?;
        evaluations += 1;
        let err = report.travel_time() - target;
        log::debug!("W = {w:.6}: T = {:.3} s", report.travel_time());
        let better = best
            .as_ref()
            .map_or(true, |(_, r)| err.abs() < (r.travel_time() - target).abs());
        if better {
            *best = Some((w, report));
        }
        Ok(err)
    };
    let done = |best: &Option<(f64, SolveReport)>| {
        best.as_ref()
            .is_some_and(|(_, r)| (r.travel_time() - target).abs() <= tolerance)
    };

    let (mut a, mut b) = (w_lo.ln(), w_hi.ln());
    let mut fa = eval(a.exp(), &mut best)?;
    let mut fb = if done(&best) { fa } else { eval(b.exp(), &mut best)? };
    // too slow at the low end means the weight must shrink further, and so on
    let mut expansions = 0;
    while !done(&best) && fa < 0.0 && expansions < 8 {
        b = a;
        fb = fa;
        a -= std::f64::consts::LN_10;
        fa = eval(a.exp(), &mut best)?;
        expansions += 1;
    }
    while !done(&best) && fb > 0.0 && expansions < 8 {
        a = b;
        fa = fb;
        b += std::f64::consts::LN_10;
        fb = eval(b.exp(), &mut best)?;
        expansions += 1;
    }
    let mut side = 0;
    let mut iterations = 0;
    while !done(&best) && fa > 0.0 && fb < 0.0 && iterations < 40 {
        iterations += 1;
        let mut c = (a * fb - b * fa) / (fb - fa);
        // keep the probe well inside the bracket
        let margin = 0.02 * (b - a);
        c = c.clamp(a + margin, b - margin);
        let fc = eval(c.exp(), &mut best)?;
        if fc > 0.0 {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        } else {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        }
        if b - a < 1e-9 {
            break;
        }
    }
    let matched = done(&best);
    let (w, report) = best.expect("at least one evaluation");
    if !matched {
        log::warn!(
            "travel time {:.3} s could not be matched to {target} s within {tolerance} s",
            report.travel_time()
        );
    }
    Ok(MatchedSolve {
        w,
        report,
        matched,
        evaluations,
    })
}
