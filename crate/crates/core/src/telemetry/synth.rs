//! Synthetic drives with known ground truth.
//!
//! Real logged drives are not shipped. These generators produce exact
//! kinematics on a fixed time grid and turn them into logs with clean IMU
//! channels and noisy GPS, for fusion tests and for the bundled sample log.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frequency_weighting::AxisFilters;
use crate::objective::Metrics;
use crate::road_geometry::RoadProfile;
use crate::telemetry::fusion::{FusedSample, FusedTrajectory};
use crate::telemetry::log::{GapInterval, GpsFix, ImuSample, TelemetryLog};
use crate::telemetry::score::score_drive;

/// Exact state of a synthetic vehicle, global frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub ax: f64,
    pub ay: f64,
}

impl TruthSample {
    fn yaw(&self) -> f64 {
        self.vy.atan2(self.vx)
    }
}

/// Yaw along the velocity, unwrapped.
fn unwrapped_yaw(truth: &[TruthSample]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(truth.len());
    for s in truth {
        let raw = s.yaw();
        let yaw = match out.last() {
            Some(&prev) => raw + TAU * ((prev - raw) / TAU).round(),
            None => raw,
        };
        out.push(yaw);
    }
    out
}

/// The truth as a trajectory, for scoring without sensor effects.
pub fn truth_trajectory(truth: &[TruthSample]) -> FusedTrajectory {
    let yaw = unwrapped_yaw(truth);
    FusedTrajectory {
        samples: truth
            .iter()
            .zip(yaw)
            .map(|(s, yaw)| FusedSample {
                t: s.t,
                x: s.x,
                y: s.y,
                vx: s.vx,
                vy: s.vy,
                ax: s.ax,
                ay: s.ay,
                yaw,
                cov_x: [[0.0; 2]; 2],
                cov_y: [[0.0; 2]; 2],
            })
            .collect(),
        gaps: Vec::new(),
        repairs: 0,
    }
}

/// Constant-speed counterclockwise circle starting at `(radius, 0)`.
pub fn circle_drive(radius: f64, speed: f64, duration: f64, dt: f64) -> Vec<TruthSample> {
    let w = speed / radius;
    let n = (duration / dt).round() as usize;
    (0..=n)
        .map(|i| {
            let t = i as f64 * dt;
            let (s, c) = (w * t).sin_cos();
            TruthSample {
                t,
                x: radius * c,
                y: radius * s,
                vx: -speed * s,
                vy: speed * c,
                ax: -speed * w * c,
                ay: -speed * w * s,
            }
        })
        .collect()
}

/// How a truth trajectory is turned into a log.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorModel {
    /// One GPS fix every this many truth samples.
    pub gps_every: usize,
    pub gps_sigma: f64,
    /// GPS fixes strictly inside these intervals are dropped.
    pub gaps: Vec<GapInterval>,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            gps_every: 10,
            gps_sigma: 0.5,
            gaps: Vec::new(),
        }
    }
}

/// Clean body-frame IMU at every truth sample, noisy GPS at a lower rate.
pub fn sample_log<R: Rng>(truth: &[TruthSample], sensors: &SensorModel, rng: &mut R) -> Result<TelemetryLog> {
    if sensors.gps_every == 0 {
        return Err(Error::InvalidConfig("gps_every must be at least 1".into()));
    }
    let noise = Normal::new(0.0, sensors.gps_sigma)
        .map_err(|e| Error::InvalidConfig(format!("gps sigma: {e}")))?;
    let yaw = unwrapped_yaw(truth);
    let mut log = TelemetryLog {
        gaps: sensors.gaps.clone(),
        ..Default::default()
    };
    for (i, (s, &yaw)) in truth.iter().zip(&yaw).enumerate() {
        let (sin, cos) = yaw.sin_cos();
        log.imu.push(ImuSample {
            t: s.t,
            ax_body: cos * s.ax + sin * s.ay,
            ay_body: -sin * s.ax + cos * s.ay,
            yaw,
        });
        let last = i + 1 == truth.len();
        if i % sensors.gps_every == 0 || last {
            // draw before the gap check so outages do not shift the noise
            let (ex, ey) = (noise.sample(rng), noise.sample(rng));
            if !sensors.gaps.iter().any(|g| s.t > g.start && s.t < g.end) {
                log.gps.push(GpsFix {
                    t: s.t,
                    x: s.x + ex,
                    y: s.y + ey,
                });
            }
        }
    }
    Ok(log)
}

/// A drive along a route: a smoothed speed profile, capped by the speed
/// limit and by a lateral acceleration the driver accepts in curves, scaled
/// and modulated by two speed oscillations, optionally on a corner-cutting
/// path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RouteDriveParams {
    /// Multiplier on the smoothed speed profile.
    pub speed_scale: f64,
    /// Lateral acceleration that caps curve speed, m/s^2.
    pub curve_lateral: f64,
    /// Acceleration and deceleration the driver uses between speed caps,
    /// m/s^2.
    pub accel: f64,
    pub decel: f64,
    /// Gaussian smoothing length of the speed profile, m.
    pub smoothing: f64,
    /// Relative amplitude and wavelength (m) of a slow speed oscillation.
    pub slow_amplitude: f64,
    pub slow_wavelength: f64,
    /// Relative amplitude and wavelength (m) of a fast speed oscillation.
    pub fast_amplitude: f64,
    pub fast_wavelength: f64,
    /// Gaussian smoothing length (m) of the driven path relative to the
    /// centerline; positive values cut corners. Zero follows the centerline.
    pub path_smoothing: f64,
    /// Oscillations fade in and out over this distance, m.
    pub taper: f64,
    /// Truth sampling interval, s.
    pub dt: f64,
}

impl Default for RouteDriveParams {
    fn default() -> Self {
        Self {
            speed_scale: 1.0,
            curve_lateral: 2.0,
            accel: 1.5,
            decel: 2.0,
            smoothing: 15.0,
            slow_amplitude: 0.0,
            slow_wavelength: 160.0,
            fast_amplitude: 0.0,
            fast_wavelength: 20.0,
            path_smoothing: 0.0,
            taper: 50.0,
            dt: 0.01,
        }
    }
}

struct RouteDrive<'a> {
    road: &'a RoadProfile,
    p: RouteDriveParams,
    /// Smoothed limit and its slope on a 1 m grid.
    base: Vec<(f64, f64)>,
    /// Lateral offset and its first two derivatives on the same grid.
    offset: Vec<[f64; 3]>,
    length: f64,
}

impl<'a> RouteDrive<'a> {
    fn new(road: &'a RoadProfile, p: RouteDriveParams) -> Result<Self> {
        if !(p.speed_scale > 0.0 && p.curve_lateral > 0.0 && p.accel > 0.0 && p.decel > 0.0 && p.smoothing > 0.0 && p.dt > 0.0 && p.taper > 0.0) {
            return Err(Error::InvalidConfig(format!("route drive parameters: {p:?}")));
        }
        let length = road.total_length();
        let n = length.ceil() as usize + 1;
        let gaussian = |sigma: f64| -> (isize, Vec<f64>) {
            let half = (3.0 * sigma).ceil() as isize;
            let k = (-half..=half).map(|j| (-0.5 * (j as f64 / sigma).powi(2)).exp()).collect();
            (half, k)
        };

        let mut y = vec![0.0; n];
        if p.path_smoothing > 0.0 {
            let (half, kernel) = gaussian(p.path_smoothing);
            let total: f64 = kernel.iter().sum();
            for (i, yi) in y.iter_mut().enumerate() {
                let mut c = [0.0; 2];
                for (kj, j) in (-half..=half).enumerate() {
                    // beyond the ends the centerline continues straight
                    let q = road.station_at(i as f64 + j as f64).center;
                    c[0] += kernel[kj] * q[0];
                    c[1] += kernel[kj] * q[1];
                }
                let st = road.station_at(i as f64);
                *yi = (c[0] / total - st.center[0]) * st.normal[0] + (c[1] / total - st.center[1]) * st.normal[1];
            }
        }
        let offset: Vec<[f64; 3]> = (0..n)
            .map(|i| {
                if i == 0 || i + 1 == n {
                    return [y[i], 0.0, 0.0];
                }
                [y[i], 0.5 * (y[i + 1] - y[i - 1]), y[i + 1] - 2.0 * y[i] + y[i - 1]]
            })
            .collect();
        let path: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let st = road.station_at(i as f64);
                [st.center[0] + y[i] * st.normal[0], st.center[1] + y[i] * st.normal[1]]
            })
            .collect();

        let mut limit: Vec<f64> = (0..n)
            .map(|i| {
                // curvature through three neighbouring path points
                let kappa = if i == 0 || i + 1 == n {
                    road.curvature_at(i as f64).abs()
                } else {
                    let (a, b, c) = (path[i - 1], path[i], path[i + 1]);
                    let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
                    let la = (b[0] - a[0]).hypot(b[1] - a[1]);
                    let lb = (c[0] - b[0]).hypot(c[1] - b[1]);
                    let lc = (c[0] - a[0]).hypot(c[1] - a[1]);
                    2.0 * cross.abs() / (la * lb * lc)
                };
                let curve = if kappa > 1e-9 { (p.curve_lateral / kappa).sqrt() } else { f64::INFINITY };
                road.speed_bounds(i as f64).1.min(curve)
            })
            .collect();
        // 1 m grid spacing
        for i in (0..n - 1).rev() {
            limit[i] = limit[i].min((limit[i + 1].powi(2) + 2.0 * p.decel).sqrt());
        }
        for i in 1..n {
            limit[i] = limit[i].min((limit[i - 1].powi(2) + 2.0 * p.accel).sqrt());
        }
        let (half, kernel) = gaussian(p.smoothing);
        let smooth: Vec<f64> = (0..n as isize)
            .map(|i| {
                let (mut num, mut den) = (0.0, 0.0);
                for (kj, j) in (-half..=half).enumerate() {
                    let idx = (i + j).clamp(0, n as isize - 1) as usize;
                    num += kernel[kj] * limit[idx];
                    den += kernel[kj];
                }
                num / den
            })
            .collect();
        let base = (0..n)
            .map(|i| {
                let lo = i.saturating_sub(1);
                let hi = (i + 1).min(n - 1);
                (smooth[i], (smooth[hi] - smooth[lo]) / (hi - lo) as f64)
            })
            .collect();
        Ok(Self {
            road,
            p,
            base,
            offset,
            length,
        })
    }

    /// Fade-in/out window and its slope: a quarter-period sine-squared
    /// ramp at each end.
    fn window(&self, s: f64) -> (f64, f64) {
        let ramp = |x: f64| -> (f64, f64) {
            if x >= self.p.taper {
                (1.0, 0.0)
            } else if x <= 0.0 {
                (0.0, 0.0)
            } else {
                let a = 0.5 * PI * x / self.p.taper;
                (a.sin().powi(2), (2.0 * a).sin() * 0.5 * PI / self.p.taper)
            }
        };
        let (a, da) = ramp(s);
        let (b, db) = ramp(self.length - s);
        (a * b, da * b - a * db)
    }

    /// Speed along the centerline and its slope with respect to `s`.
    fn progress_speed(&self, s: f64) -> (f64, f64) {
        let x = s.clamp(0.0, (self.base.len() - 1) as f64);
        let i = (x.floor() as usize).min(self.base.len() - 2);
        let u = x - i as f64;
        let (b0, g0) = self.base[i];
        let (b1, g1) = self.base[i + 1];
        let base = b0 + u * (b1 - b0);
        let slope = g0 + u * (g1 - g0);
        let (w, dw) = self.window(s);
        let ks = TAU / self.p.slow_wavelength;
        let kf = TAU / self.p.fast_wavelength;
        let osc = self.p.slow_amplitude * (ks * s).sin() + self.p.fast_amplitude * (kf * s).sin();
        let dosc = self.p.slow_amplitude * ks * (ks * s).cos() + self.p.fast_amplitude * kf * (kf * s).cos();
        let m = 1.0 + w * osc;
        let dm = dw * osc + w * dosc;
        let c = self.p.speed_scale;
        (c * base * m, c * (slope * m + base * dm))
    }

    /// Lateral offset and its first two derivatives in `s`.
    fn offset(&self, s: f64) -> (f64, f64, f64) {
        let x = s.clamp(0.0, (self.offset.len() - 1) as f64);
        let i = (x.floor() as usize).min(self.offset.len() - 2);
        let u = x - i as f64;
        let (a, b) = (self.offset[i], self.offset[i + 1]);
        let at = |k: usize| a[k] + u * (b[k] - a[k]);
        (at(0), at(1), at(2))
    }

    fn state(&self, t: f64, s: f64) -> TruthSample {
        let st = self.road.station_at(s);
        let kappa = self.road.curvature_at(s);
        let (u, du) = self.progress_speed(s);
        let (y, dy, ddy) = self.offset(s);
        let sdot = u;
        let sddot = u * du;
        let ydot = dy * u;
        let yddot = ddy * u * u + dy * sddot;
        let stretch = 1.0 - y * kappa;
        let vt = sdot * stretch;
        let at = sddot * stretch - 2.0 * sdot * ydot * kappa;
        let an = sdot * sdot * kappa * stretch + yddot;
        let (tg, nm) = (st.tangent, st.normal);
        TruthSample {
            t,
            x: st.center[0] + y * nm[0],
            y: st.center[1] + y * nm[1],
            vx: vt * tg[0] + ydot * nm[0],
            vy: vt * tg[1] + ydot * nm[1],
            ax: at * tg[0] + an * nm[0],
            ay: at * tg[1] + an * nm[1],
        }
    }
}

/// Integrates progress along `road` on a fixed time grid. The final sample
/// lands exactly on the route end, after a shortened last step.
pub fn route_drive(road: &RoadProfile, params: &RouteDriveParams) -> Result<Vec<TruthSample>> {
    let drive = RouteDrive::new(road, *params)?;
    let f = |s: f64| drive.progress_speed(s).0;
    let rk4 = |s: f64, h: f64| {
        let k1 = f(s);
        let k2 = f(s + 0.5 * h * k1);
        let k3 = f(s + 0.5 * h * k2);
        let k4 = f(s + h * k3);
        s + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    };
    let dt = params.dt;
    let mut s = 0.0;
    let mut out = vec![drive.state(0.0, 0.0)];
    loop {
        let next = rk4(s, dt);
        if !(next > s) {
            return Err(Error::InvalidConfig(format!("synthetic drive stalls at s = {s}")));
        }
        let t = out.len() as f64 * dt;
        if next >= drive.length {
            let (mut lo, mut hi) = (0.0, dt);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if rk4(s, mid) < drive.length {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if hi > 1e-9 * dt {
                out.push(drive.state(t - dt + hi, drive.length));
            }
            break;
        }
        s = next;
        out.push(drive.state(t, s));
    }
    Ok(out)
}

/// Targets for a calibrated sample drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveTargets {
    pub duration: f64,
    pub d_ma: f64,
    pub squared_msdv: f64,
}

fn truth_metrics(road: &RoadProfile, p: &RouteDriveParams, filters: &AxisFilters) -> Result<Metrics> {
    score_drive(&truth_trajectory(&route_drive(road, p)?), filters)
}

/// Adjusts speed scale and the two oscillation amplitudes until the truth
/// drive scores the targets, by Newton steps on a finite-difference Jacobian.
pub fn calibrate_route_drive(
    road: &RoadProfile,
    start: RouteDriveParams,
    targets: DriveTargets,
    filters: &AxisFilters,
) -> Result<(RouteDriveParams, Metrics)> {
    let set = |p: &RouteDriveParams, x: [f64; 3]| RouteDriveParams {
        speed_scale: x[0],
        slow_amplitude: x[1],
        fast_amplitude: x[2],
        ..*p
    };
    let residual = |m: &Metrics| {
        [
            m.travel_time / targets.duration - 1.0,
            m.d_ma / targets.d_ma - 1.0,
            m.squared_msdv / targets.squared_msdv - 1.0,
        ]
    };
    let mut x = [start.speed_scale, start.slow_amplitude, start.fast_amplitude];
    for _ in 0..30 {
        let m = truth_metrics(road, &set(&start, x), filters)?;
        let r = residual(&m);
        log::debug!("calibration x = {x:?}, residual = {r:?}");
        if r.iter().all(|e| e.abs() < 1e-4) {
            return Ok((set(&start, x), m));
        }
        let mut jac = [[0.0; 3]; 3];
        for j in 0..3 {
            let mut xp = x;
            let h = 1e-4 * x[j].abs().max(1e-2);
            xp[j] += h;
            let rp = residual(&truth_metrics(road, &set(&start, xp), filters)?);
            for i in 0..3 {
                jac[i][j] = (rp[i] - r[i]) / h;
            }
        }
        let step = solve3(jac, r).ok_or_else(|| {
            Error::InvalidConfig("sample drive calibration has a singular Jacobian".into())
        })?;
        // damp large steps so amplitudes stay in a sane range
        let scale = step
            .iter()
            .zip(&x)
            .map(|(d, xi)| (d.abs() / (0.3 * xi.abs().max(0.05))).max(1.0))
            .fold(1.0, f64::max);
        for j in 0..3 {
            x[j] -= step[j] / scale;
        }
        x[1] = x[1].abs();
        x[2] = x[2].abs();
    }
    Err(Error::InvalidConfig(
        "sample drive calibration did not converge".into(),
    ))
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    if !(d.abs() > 1e-300) {
        return None;
    }
    let mut x = [0.0; 3];
    for (j, xj) in x.iter_mut().enumerate() {
        let mut m = a;
        for i in 0..3 {
            m[i][j] = b[i];
        }
        *xj = det(m) / d;
    }
    Some(x)
}
