//! Waypoint kinematics for a lateral-offset / speed decision vector.
//!
//! Waypoint `k` sits at station `k` displaced by `y_k` along the station's
//! left normal and is passed at speed `v_k`. Between consecutive waypoints the
//! vehicle moves on the straight chord with constant longitudinal
//! acceleration. Turning is measured as the signed angle between consecutive
//! chords; the turn at waypoint `k` is charged to the segment that leaves it,
//! with the heading before the first waypoint supplied by the caller.

use std::io::Write;

use crate::autodiff::Real;
use crate::error::{Error, Result};
use crate::road_geometry::{station_to_global, Station, Vec2};

/// Segments shorter than this are rejected as degenerate, meters.
pub const DEGENERATE_SEGMENT: f64 = 1e-6;

/// Decision vector evaluated against a list of stations.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionPlan {
    pub stations: Vec<Station>,
    pub y: Vec<f64>,
    pub v: Vec<f64>,
    /// Unit heading of the path just before the first waypoint.
    pub initial_heading: Vec2,
}

impl MotionPlan {
    pub fn new(stations: Vec<Station>, y: Vec<f64>, v: Vec<f64>, initial_heading: Vec2) -> Result<Self> {
        if stations.len() != y.len() || stations.len() != v.len() {
            return Err(Error::Shape(format!(
                "{} stations, {} offsets, {} speeds",
                stations.len(),
                y.len(),
                v.len()
            )));
        }
        if stations.len() < 3 {
            return Err(Error::TooFewWaypoints {
                min: 3,
                got: stations.len(),
            });
        }
        let n = (initial_heading[0].powi(2) + initial_heading[1].powi(2)).sqrt();
        Ok(Self {
            stations,
            y,
            v,
            initial_heading: [initial_heading[0] / n, initial_heading[1] / n],
        })
    }

    /// Plan that follows the first station's tangent into the route.
    pub fn along(stations: Vec<Station>, y: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        let h = stations.first().map(|s| s.tangent).unwrap_or([1.0, 0.0]);
        Self::new(stations, y, v, h)
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    pub fn waypoints(&self) -> Vec<Vec2> {
        self.stations
            .iter()
            .zip(&self.y)
            .map(|(s, &y)| station_to_global(s, y))
            .collect()
    }
}

/// Kinematic quantities of the segment from waypoint `k` to `k + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentKinematics {
    pub d: f64,
    pub a_x: f64,
    /// Unit heading of the chord.
    pub heading: Vec2,
    pub dpsi: f64,
    pub kappa: f64,
    pub a_y: f64,
    pub dt: f64,
}

/// Generic per-segment terms used by the cost functions.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SegmentTerms<T> {
    pub d: T,
    pub a_x: T,
    pub a_y: T,
    pub dt: T,
    pub dpsi: T,
    pub kappa: T,
    pub h: [T; 2],
}

/// Fills `out` with the `waypoints.len() - 1` segment terms.
pub(crate) fn segment_terms<T: Real>(
    waypoints: &[[T; 2]],
    v: &[T],
    initial_heading: Vec2,
    out: &mut Vec<SegmentTerms<T>>,
) {
    out.clear();
    let mut prev = [T::cst(initial_heading[0]), T::cst(initial_heading[1])];
    for k in 0..waypoints.len().saturating_sub(1) {
        let h = [
            waypoints[k + 1][0] - waypoints[k][0],
            waypoints[k + 1][1] - waypoints[k][1],
        ];
        let d = (h[0] * h[0] + h[1] * h[1]).sqrt();
        let cross = prev[0] * h[1] - prev[1] * h[0];
        let dot = prev[0] * h[0] + prev[1] * h[1];
        let dpsi = cross.atan2(dot);
        let kappa = dpsi / d;
        let vsum = v[k] + v[k + 1];
        let a_x = (v[k + 1] * v[k + 1] - v[k] * v[k]) / (d * 2.0);
        let vbar = vsum * 0.5;
        let a_y = vbar * vbar * kappa;
        let dt = d * 2.0 / vsum;
        out.push(SegmentTerms {
            d,
            a_x,
            a_y,
            dt,
            dpsi,
            kappa,
            h,
        });
        prev = h;
    }
}

fn validate(plan: &MotionPlan) -> Result<Vec<Vec2>> {
    if plan.len() < 3 {
        return Err(Error::TooFewWaypoints {
            min: 3,
            got: plan.len(),
        });
    }
    if let Some(k) = plan.v.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::NonpositiveSpeed(k));
    }
    let wp = plan.waypoints();
    for k in 0..wp.len() - 1 {
        let d = ((wp[k + 1][0] - wp[k][0]).powi(2) + (wp[k + 1][1] - wp[k][1]).powi(2)).sqrt();
        if !(d > DEGENERATE_SEGMENT) {
            return Err(Error::DegenerateSegment(k));
        }
    }
    Ok(wp)
}

/// Evaluates every segment of `plan`.
pub fn evaluate_kinematics(plan: &MotionPlan) -> Result<Vec<SegmentKinematics>> {
    let wp = validate(plan)?;
    let mut terms = Vec::with_capacity(wp.len());
    segment_terms(&wp, &plan.v, plan.initial_heading, &mut terms);
    Ok(terms
        .into_iter()
        .map(|t| SegmentKinematics {
            d: t.d,
            a_x: t.a_x,
            heading: [t.h[0] / t.d, t.h[1] / t.d],
            dpsi: t.dpsi,
            kappa: t.kappa,
            a_y: t.a_y,
            dt: t.dt,
        })
        .collect())
}

/// Total time to traverse the plan, `sum 2 d_k / (v_k + v_{k+1})`.
pub fn travel_time(plan: &MotionPlan) -> Result<f64> {
    Ok(evaluate_kinematics(plan)?.iter().map(|s| s.dt).sum())
}

/// Writes one row per waypoint: `s, X, Y, y, v, a_x, a_y, kappa, dt, t`.
///
/// Segment columns of row `k` describe the segment leaving waypoint `k`; the
/// final row carries zeros there. `t` is the time at which the waypoint is
/// reached.
pub fn write_plan_dump<W: Write>(plan: &MotionPlan, out: W) -> Result<()> {
    let kin = evaluate_kinematics(plan)?;
    let wp = plan.waypoints();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["s", "X", "Y", "y", "v", "a_x", "a_y", "kappa", "dt", "t"])?;
    let mut t = 0.0;
    for k in 0..plan.len() {
        let (ax, ay, kappa, dt) = kin
            .get(k)
            .map(|s| (s.a_x, s.a_y, s.kappa, s.dt))
            .unwrap_or((0.0, 0.0, 0.0, 0.0));
        w.write_record([
            plan.stations[k].s.to_string(),
            wp[k][0].to_string(),
            wp[k][1].to_string(),
            plan.y[k].to_string(),
            plan.v[k].to_string(),
            ax.to_string(),
            ay.to_string(),
            kappa.to_string(),
            dt.to_string(),
            t.to_string(),
        ])?;
        t += dt;
    }
    w.flush().map_err(|e| Error::io("plan dump", e))?;
    Ok(())
}
