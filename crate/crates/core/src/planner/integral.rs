//! Whole-route optimization over every station at once.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::objective::cost;
use crate::planner::problem::PlanObjective;
use crate::planner::solver::{inner_solve, Bounds};
use crate::planner::{PlannerConfig, SolveReport};
use crate::road_geometry::{build_stations, RoadProfile, Station};
use crate::trajectory_kinematics::MotionPlan;

/// Box bounds for the interleaved `(y, v)` vector with both ends pinned.
fn integral_bounds(road: &RoadProfile, stations: &[Station]) -> Result<Bounds> {
    let n = stations.len();
    let mut lower = Vec::with_capacity(2 * n);
    let mut upper = Vec::with_capacity(2 * n);
    for (k, st) in stations.iter().enumerate() {
        let (vmin, vmax) = road.speed_bounds(st.s);
        if k == 0 || k == n - 1 {
            let v = if k == 0 { road.entry_speed() } else { road.exit_speed() };
            lower.extend([0.0, v]);
            upper.extend([0.0, v]);
        } else {
            lower.extend([road.lane_offset_min, vmin]);
            upper.extend([road.lane_offset_max, vmax]);
        }
    }
    Bounds::new(lower, upper)
}

/// Centered lane, speed limit smoothed by a 5-station moving average, ends
/// pinned to the boundary speeds.
pub fn initial_guess(road: &RoadProfile, stations: &[Station]) -> (Vec<f64>, Vec<f64>) {
    let n = stations.len();
    let limit: Vec<f64> = stations.iter().map(|s| road.speed_bounds(s.s).1).collect();
    let mut v: Vec<f64> = (0..n)
        .map(|k| {
            let lo = k.saturating_sub(2);
            let hi = (k + 3).min(n);
            limit[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    for (k, vk) in v.iter_mut().enumerate() {
        let (vmin, vmax) = road.speed_bounds(stations[k].s);
        *vk = vk.clamp(vmin, vmax);
    }
    if n > 0 {
        v[0] = road.entry_speed();
        v[n - 1] = road.exit_speed();
    }
    (vec![0.0; n], v)
}

/// Integral solve from the default initialization.
pub fn solve_integral(road: &RoadProfile, config: &PlannerConfig) -> Result<SolveReport> {
    solve_integral_from(road, config, None)
}

/// Integral solve, optionally warm-started from a plan on the same stations.
pub fn solve_integral_from(
    road: &RoadProfile,
    config: &PlannerConfig,
    warm: Option<&MotionPlan>,
) -> Result<SolveReport> {
    config.objective.validate()?;
    let stations = build_stations(road)?;
    if stations.len() < 3 {
        return Err(Error::TooFewWaypoints {
            min: 3,
            got: stations.len(),
        });
    }
    let bounds = integral_bounds(road, &stations)?;
    let (y0, v0) = match warm {
        Some(p) if config.warm_start && p.stations.len() == stations.len() => (p.y.clone(), p.v.clone()),
        _ => initial_guess(road, &stations),
    };
    let x0 = PlanObjective::pack(&y0, &v0);
    let heading = stations[0].tangent;
    let problem = PlanObjective::new(&stations, heading, &config.objective);
    let started = Instant::now();
    let outcome = inner_solve(&problem, &x0, &bounds, &config.solver)?;
    let solve_time = started.elapsed().as_secs_f64();
    log::debug!(
        "integral solve: {:?} after {} iterations, cost {}",
        outcome.termination,
        outcome.iterations,
        outcome.cost
    );
    if !outcome.converged() {
        log::warn!(
            "integral solve stopped after {} iterations without converging",
            outcome.iterations
        );
    }
    let (y, v) = PlanObjective::unpack(&outcome.x);
    let plan = MotionPlan::new(stations, y, v, heading)?;
    let cost = cost(&plan, &config.objective)?;
    Ok(SolveReport {
        plan,
        cost,
        iterations: outcome.iterations,
        solve_time,
        converged: outcome.converged(),
        steps: Vec::new(),
    })
}
