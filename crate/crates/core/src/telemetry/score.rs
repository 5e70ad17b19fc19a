//! Scoring reconstructed drives with the planner's metrics.

use crate::error::{Error, Result};
use crate::frequency_weighting::AxisFilters;
use crate::objective::{metrics_from_segments, Metrics};
use crate::telemetry::fusion::{FusedSample, FusedTrajectory};
use crate::trajectory_kinematics::{evaluate_kinematics, MotionPlan};

/// Below this speed the velocity direction is unreliable and the yaw channel
/// supplies the heading.
pub const HEADING_FROM_YAW_BELOW: f64 = 0.5;

/// Vehicle-frame `(a_x, a_y, dt)` per sample interval, each interval holding
/// the acceleration of its first sample.
pub fn vehicle_frame_segments(traj: &FusedTrajectory) -> Vec<(f64, f64, f64)> {
    traj.samples
        .windows(2)
        .map(|w| {
            let s = &w[0];
            let speed = s.speed();
            let h = if speed >= HEADING_FROM_YAW_BELOW {
                [s.vx / speed, s.vy / speed]
            } else {
                [s.yaw.cos(), s.yaw.sin()]
            };
            let along = s.ax * h[0] + s.ay * h[1];
            let across = h[0] * s.ay - h[1] * s.ax;
            (along, across, w[1].t - s.t)
        })
        .collect()
}

/// Travel time, weighted and raw acceleration energy and peaks of a drive.
pub fn score_drive(traj: &FusedTrajectory, filters: &AxisFilters) -> Result<Metrics> {
    if traj.samples.len() < 2 {
        return Err(Error::Telemetry(format!(
            "need at least 2 samples to score, got {}",
            traj.samples.len()
        )));
    }
    metrics_from_segments(filters, &vehicle_frame_segments(traj))
}

impl FusedTrajectory {
    /// A planner trajectory in telemetry form: one sample per waypoint,
    /// velocity along the outgoing chord and the segment's accelerations
    /// rotated to the global frame.
    pub fn from_plan(plan: &MotionPlan) -> Result<Self> {
        let kin = evaluate_kinematics(plan)?;
        let wp = plan.waypoints();
        let mut t = 0.0;
        let mut samples = Vec::with_capacity(plan.len());
        for k in 0..plan.len() {
            let seg = kin.get(k).or(kin.last()).expect("plan has segments");
            let h = seg.heading;
            let (ax, ay) = match kin.get(k) {
                Some(s) => (s.a_x * h[0] - s.a_y * h[1], s.a_x * h[1] + s.a_y * h[0]),
                None => (0.0, 0.0),
            };
            samples.push(FusedSample {
                t,
                x: wp[k][0],
                y: wp[k][1],
                vx: plan.v[k] * h[0],
                vy: plan.v[k] * h[1],
                ax,
                ay,
                yaw: h[1].atan2(h[0]),
                cov_x: [[0.0; 2]; 2],
                cov_y: [[0.0; 2]; 2],
            });
            t += kin.get(k).map_or(0.0, |s| s.dt);
        }
        Ok(Self {
            samples,
            gaps: Vec::new(),
            repairs: 0,
        })
    }
}
