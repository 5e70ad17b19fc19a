//! Receding-horizon planning with a speed-dependent preview distance.
//!
//! Each solve places `N_p` stations evenly over `D_p = v T_p` ahead of the
//! current waypoint, optimizes them with the current waypoint held fixed, and
//! commits only the first planned waypoint. Filter states advance through the
//! committed segment and seed the next solve. Once the route end is closer
//! than one horizon the station count shrinks and the last station sits on
//! the route end with the exit speed imposed.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::frequency_weighting::CarryState;
use crate::objective::cost;
use crate::planner::problem::PlanObjective;
use crate::planner::solver::{inner_solve, Bounds};
use crate::planner::{PlannerConfig, SolveReport, StepSample};
use crate::road_geometry::{station_to_global, RoadProfile, Station, Vec2};
use crate::trajectory_kinematics::{segment_terms, MotionPlan};

/// Where the vehicle is when planning starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhInitialState {
    pub s: f64,
    pub y: f64,
    pub v: f64,
    /// Direction of travel just before the first waypoint.
    pub heading: Vec2,
}

impl RhInitialState {
    /// Route start on the centerline at the entry speed.
    pub fn at_start(road: &RoadProfile) -> Self {
        Self {
            s: 0.0,
            y: 0.0,
            v: road.entry_speed(),
            heading: road.station_at(0.0).tangent,
        }
    }
}

/// Piecewise-linear interpolation of `(y, v)` knots over arclength, holding
/// the end values outside the knot range.
fn interpolate(knots: &[(f64, f64, f64)], s: f64) -> (f64, f64) {
    let first = knots[0];
    if s <= first.0 {
        return (first.1, first.2);
    }
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        if s <= b.0 {
            let t = if b.0 > a.0 { (s - a.0) / (b.0 - a.0) } else { 1.0 };
            return (a.1 + t * (b.1 - a.1), a.2 + t * (b.2 - a.2));
        }
    }
    let last = knots[knots.len() - 1];
    (last.1, last.2)
}

/// Runs the receding-horizon loop to the route end and returns the stitched
/// committed trajectory.
pub fn solve_receding_horizon(
    road: &RoadProfile,
    config: &PlannerConfig,
    initial: Option<RhInitialState>,
) -> Result<SolveReport> {
    config.validate()?;
    let init = initial.unwrap_or_else(|| RhInitialState::at_start(road));
    let total = road.total_length();
    let (vmin, vmax) = road.speed_bounds(init.s);
    if !(0.0..total).contains(&init.s) {
        return Err(Error::InvalidConfig(format!(
            "initial arclength {} is not on the route [0, {total})",
            init.s
        )));
    }
    if !(init.v >= vmin && init.v <= vmax) && init.v != road.entry_speed() {
        return Err(Error::InvalidConfig(format!(
            "initial speed {} outside [{vmin}, {vmax}]",
            init.v
        )));
    }
    let np = config.horizon;
    let tp = config.preview_time;
    let filters = &config.objective.filters;

    let mut committed = vec![(init.s, init.y, init.v)];
    let mut heading = init.heading;
    let mut carry = CarryState::default();
    let mut previous: Option<Vec<(f64, f64, f64)>> = None;
    let mut steps = Vec::new();
    let mut iterations = 0;
    let mut all_converged = true;
    let started = Instant::now();

    loop {
        let (s0, y0, v0) = *committed.last().expect("nonempty");
        let remaining = total - s0;
        if remaining <= 1e-9 {
            break;
        }
        let step_index = steps.len();
        let nominal = v0 * tp / np as f64;
        let (count, spacing, terminal) = if remaining <= nominal * (np as f64 + 0.5) {
            let count = ((remaining / nominal).round() as usize).clamp(1, np);
            (count, remaining / count as f64, true)
        } else {
            (np, nominal, false)
        };
        let stations: Vec<Station> = (1..=count)
            .map(|j| {
                if terminal && j == count {
                    road.station_at(total)
                } else {
                    road.station_at(s0 + spacing * j as f64)
                }
            })
            .collect();

        let mut lower = Vec::with_capacity(2 * count);
        let mut upper = Vec::with_capacity(2 * count);
        for (j, st) in stations.iter().enumerate() {
            if terminal && j == count - 1 {
                let exit = road.exit_speed();
                lower.extend([0.0, exit]);
                upper.extend([0.0, exit]);
            } else {
                let (lo, hi) = road.speed_bounds(st.s);
                lower.extend([road.lane_offset_min, lo]);
                upper.extend([road.lane_offset_max, hi]);
            }
        }
        let bounds = Bounds::new(lower, upper)?;

        let mut x0: Vec<f64> = Vec::with_capacity(2 * count);
        for st in &stations {
            let (y, v) = match (&previous, config.warm_start) {
                (Some(knots), true) => interpolate(knots, st.s),
                _ => (y0, v0),
            };
            x0.extend([y, v]);
        }
        bounds.project(&mut x0);

        let mut spec = config.objective.clone();
        spec.carry_in = carry;
        let anchor = station_to_global(&road.station_at(s0), y0);
        let problem = PlanObjective::new(&stations, heading, &spec).with_anchor(anchor, v0);
        let t = Instant::now();
        let result = inner_solve(&problem, &x0, &bounds, &config.solver);
        let solve_ms = t.elapsed().as_secs_f64() * 1e3;
        let (x, iters, converged, fallback) = match result {
            Ok(o) => {
                let c = o.converged();
                (o.x, o.iterations, c, false)
            }
            Err(e) => {
                log::warn!("receding-horizon step {step_index} failed ({e}); reusing shifted solution");
                (x0, 0, false, true)
            }
        };
        iterations += iters;
        all_converged &= converged;
        steps.push(StepSample {
            step_index,
            stations: count,
            solve_ms,
            iterations: iters,
            converged,
            fallback,
        });

        let (y1, v1) = (x[0], x[1]);
        let target = station_to_global(&stations[0], y1);
        let mut seg = Vec::with_capacity(1);
        segment_terms(&[anchor, target], &[v0, v1], heading, &mut seg);
        let seg = seg[0];
        if !(seg.d > crate::trajectory_kinematics::DEGENERATE_SEGMENT) || !seg.dt.is_finite() {
            return Err(Error::DegenerateSegment(committed.len() - 1));
        }
        carry.longitudinal = filters.longitudinal.propagate(carry.longitudinal, seg.a_x, seg.dt);
        carry.lateral = filters.lateral.propagate(carry.lateral, seg.a_y, seg.dt);
        heading = seg.h;

        let mut knots = Vec::with_capacity(count + 1);
        knots.push((s0, y0, v0));
        for (j, st) in stations.iter().enumerate() {
            knots.push((st.s, x[2 * j], x[2 * j + 1]));
        }
        previous = Some(knots);
        committed.push((stations[0].s, y1, v1));
    }
    let solve_time = started.elapsed().as_secs_f64();

    if committed.len() < 3 {
        return Err(Error::TooFewWaypoints {
            min: 3,
            got: committed.len(),
        });
    }
    let plan = MotionPlan::new(
        committed.iter().map(|&(s, _, _)| road.station_at(s)).collect(),
        committed.iter().map(|&(_, y, _)| y).collect(),
        committed.iter().map(|&(_, _, v)| v).collect(),
        init.heading,
    )?;
    let cost = cost(&plan, &config.objective)?;
    Ok(SolveReport {
        plan,
        cost,
        iterations,
        solve_time,
        converged: all_converged,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_holds_ends() {
        let k = [(0.0, 0.0, 10.0), (10.0, 1.0, 20.0)];
        assert_eq!(interpolate(&k, -1.0), (0.0, 10.0));
        assert_eq!(interpolate(&k, 5.0), (0.5, 15.0));
        assert_eq!(interpolate(&k, 11.0), (1.0, 20.0));
    }
}
