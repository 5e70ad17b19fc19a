//! GPS and IMU fusion with one kinematic Kalman filter per global axis.
//!
//! Each axis tracks `(position, velocity)`. Body-frame IMU accelerations are
//! rotated into the global frame with the logged yaw and drive the
//! prediction as a held input; GPS positions are the measurements. Both axes
//! share the same tuning, so the result is equivariant under rigid motions
//! of the log.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::telemetry::log::{GapInterval, GpsFix, TelemetryLog};

pub type Cov2 = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionParams {
    /// Standard deviation of the unmodelled acceleration, m/s^2.
    pub process_accel_sigma: f64,
    /// GPS position standard deviation, m.
    pub gps_sigma: f64,
    /// Span of GPS fixes used to initialize velocity, s.
    pub velocity_window: f64,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self {
            process_accel_sigma: 0.2,
            gps_sigma: 0.5,
            velocity_window: 1.0,
        }
    }
}

impl FusionParams {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(self.process_accel_sigma) && ok(self.gps_sigma) && ok(self.velocity_window)) {
            return Err(Error::InvalidConfig(format!(
                "fusion parameters must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// One instant of a reconstructed drive, global frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusedSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    /// Acceleration held from `t` until the next sample.
    pub ax: f64,
    pub ay: f64,
    pub yaw: f64,
    pub cov_x: Cov2,
    pub cov_y: Cov2,
}

impl FusedSample {
    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FusedTrajectory {
    pub samples: Vec<FusedSample>,
    /// GPS outages carried over from the log.
    pub gaps: Vec<GapInterval>,
    /// Covariance updates that had to be repaired to stay positive
    /// semidefinite.
    pub repairs: usize,
}

impl FusedTrajectory {
    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }
}

/// Position-velocity filter for one axis driven by a held acceleration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisKalman {
    pub x: [f64; 2],
    pub p: Cov2,
}

impl AxisKalman {
    /// Propagates over `dt` with acceleration `a` and white acceleration
    /// noise of standard deviation `q`.
    pub fn predict(&mut self, a: f64, dt: f64, q: f64) {
        let [p, v] = self.x;
        self.x = [p + v * dt + 0.5 * a * dt * dt, v + a * dt];
        let [[p00, p01], [_, p11]] = self.p;
        // F P F^T with F = [[1, dt], [0, 1]]
        let n00 = p00 + 2.0 * dt * p01 + dt * dt * p11;
        let n01 = p01 + dt * p11;
        let q2 = q * q;
        let (d2, d3, d4) = (dt * dt, dt * dt * dt, dt * dt * dt * dt);
        self.p = [
            [n00 + q2 * d4 / 4.0, n01 + q2 * d3 / 2.0],
            [n01 + q2 * d3 / 2.0, p11 + q2 * d2],
        ];
    }

    /// Joseph-form position update; returns whether the covariance needed
    /// repair.
    pub fn update(&mut self, z: f64, r: f64) -> bool {
        let [[p00, p01], [p10, p11]] = self.p;
        let s = p00 + r;
        let k = [p00 / s, p10 / s];
        let innov = z - self.x[0];
        self.x = [self.x[0] + k[0] * innov, self.x[1] + k[1] * innov];
        // (I - K H) P (I - K H)^T + K r K^T
        let a = [[1.0 - k[0], 0.0], [-k[1], 1.0]];
        let ap = [
            [a[0][0] * p00 + a[0][1] * p10, a[0][0] * p01 + a[0][1] * p11],
            [a[1][0] * p00 + a[1][1] * p10, a[1][0] * p01 + a[1][1] * p11],
        ];
        let mut n = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                n[i][j] = ap[i][0] * a[j][0] + ap[i][1] * a[j][1] + k[i] * r * k[j];
            }
        }
        let off = 0.5 * (n[0][1] + n[1][0]);
        self.p = [[n[0][0], off], [off, n[1][1]]];
        repair_psd(&mut self.p)
    }
}

fn repair_psd(p: &mut Cov2) -> bool {
    let mut repaired = false;
    for i in 0..2 {
        if !(p[i][i] >= 0.0) {
            p[i][i] = 0.0;
            repaired = true;
        }
    }
    let bound = (p[0][0] * p[1][1]).sqrt();
    if p[0][1].abs() > bound {
        let c = bound.copysign(p[0][1]);
        p[0][1] = c;
        p[1][0] = c;
        repaired = true;
    }
    repaired
}

fn gps_at(gps: &[GpsFix], t: f64) -> (f64, f64) {
    let i = gps.partition_point(|f| f.t <= t);
    if i == 0 {
        return (gps[0].x, gps[0].y);
    }
    if i == gps.len() {
        let f = gps[gps.len() - 1];
        return (f.x, f.y);
    }
    let (a, b) = (gps[i - 1], gps[i]);
    let u = (t - a.t) / (b.t - a.t);
    (a.x + u * (b.x - a.x), a.y + u * (b.y - a.y))
}

/// Fuses a gap-filled log into a trajectory sampled at the IMU instants that
/// both streams cover.
pub fn fuse(log: &TelemetryLog, params: &FusionParams) -> Result<FusedTrajectory> {
    params.validate()?;
    log.validate()?;
    let (t0, t1) = log.overlap().ok_or(Error::NonOverlappingStreams)?;
    let imu: Vec<_> = log.imu.iter().filter(|s| s.t >= t0 && s.t <= t1).copied().collect();
    if imu.len() < 2 {
        return Err(Error::NonOverlappingStreams);
    }
    let start = imu[0].t;

    let (px, py) = gps_at(&log.gps, start);
    let window = params.velocity_window.min(t1 - start);
    let (qx, qy) = gps_at(&log.gps, start + window);
    let (vx, vy) = ((qx - px) / window, (qy - py) / window);
    let r = params.gps_sigma * params.gps_sigma;
    let p0 = [[r, 0.0], [0.0, 2.0 * r / (window * window)]];
    let mut kx = AxisKalman { x: [px, vx], p: p0 };
    let mut ky = AxisKalman { x: [py, vy], p: p0 };
    let q = params.process_accel_sigma;

    let mut next_fix = log.gps.partition_point(|f| f.t <= start);
    let mut repairs = 0;
    let mut samples = Vec::with_capacity(imu.len());
    for (i, s) in imu.iter().enumerate() {
        let (sin, cos) = s.yaw.sin_cos();
        let ax = cos * s.ax_body - sin * s.ay_body;
        let ay = sin * s.ax_body + cos * s.ay_body;
        samples.push(FusedSample {
            t: s.t,
            x: kx.x[0],
            y: ky.x[0],
            vx: kx.x[1],
            vy: ky.x[1],
            ax,
            ay,
            yaw: s.yaw,
            cov_x: kx.p,
            cov_y: ky.p,
        });
        let Some(next) = imu.get(i + 1) else { break };
        let mut t = s.t;
        while let Some(fix) = log.gps.get(next_fix).filter(|f| f.t <= next.t) {
            kx.predict(ax, fix.t - t, q);
            ky.predict(ay, fix.t - t, q);
            t = fix.t;
            repairs += usize::from(kx.update(fix.x, r));
            repairs += usize::from(ky.update(fix.y, r));
            next_fix += 1;
        }
        if next.t > t {
            kx.predict(ax, next.t - t, q);
            ky.predict(ay, next.t - t, q);
        }
    }
    if repairs > 0 {
        log::warn!("fusion repaired {repairs} covariance updates");
    }
    Ok(FusedTrajectory {
        samples,
        gaps: log.gaps.clone(),
        repairs,
    })
}
