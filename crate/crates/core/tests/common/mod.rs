//! Independent reference computations shared by the integration tests and
//! the acceptance runner. Nothing here calls into the library's filter or
//! kinematics code.
#![allow(dead_code)]

use std::path::PathBuf;

pub type Mat = Vec<Vec<f64>>;

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn bundled_route() -> PathBuf {
    workspace_root().join("routes/waarder_a12.road")
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Continuous-time matrices of the band-pass filter, written out from the
/// transfer function `s / ((tau1 s + 1)(tau2 s + 1))`.
pub fn filter_matrices(tau1: f64, tau2: f64) -> ([[f64; 2]; 2], [f64; 2]) {
    let p = tau1 * tau2;
    ([[-(tau1 + tau2) / p, 1.0], [-1.0 / p, 0.0]], [1.0 / p, 0.0])
}

pub fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let m = b[0].len();
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for k in 0..b.len() {
            for j in 0..m {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

/// Matrix exponential by scaling and squaring with a 30-term Taylor series.
pub fn expm(m: &Mat) -> Mat {
    let n = m.len();
    let norm = m.iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scale = 2f64.powi(-squarings);
    let a: Mat = m.iter().map(|r| r.iter().map(|x| x * scale).collect()).collect();
    let mut result: Mat = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut term = result.clone();
    for k in 1..30 {
        term = mat_mul(&term, &a);
        for row in term.iter_mut() {
            for x in row.iter_mut() {
                *x /= k as f64;
            }
        }
        for i in 0..n {
            for j in 0..n {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = mat_mul(&result, &result);
    }
    result
}

/// Held-input discretization from the exponential of the augmented matrix
/// `[[A, B], [0, 0]] dt`.
pub fn zoh_reference(tau1: f64, tau2: f64, dt: f64) -> ([[f64; 2]; 2], [f64; 2]) {
    let (a, b) = filter_matrices(tau1, tau2);
    let aug = vec![
        vec![a[0][0] * dt, a[0][1] * dt, b[0] * dt],
        vec![a[1][0] * dt, a[1][1] * dt, b[1] * dt],
        vec![0.0, 0.0, 0.0],
    ];
    let e = expm(&aug);
    ([[e[0][0], e[0][1]], [e[1][0], e[1][1]]], [e[0][2], e[1][2]])
}

/// Fixed-step RK4 of `x' = A x + B u` over `dt` in `substeps` steps.
pub fn rk4_filter(tau1: f64, tau2: f64, x: [f64; 2], u: f64, dt: f64, substeps: usize) -> [f64; 2] {
    let (a, b) = filter_matrices(tau1, tau2);
    let f = |x: [f64; 2]| {
        [
            a[0][0] * x[0] + a[0][1] * x[1] + b[0] * u,
            a[1][0] * x[0] + a[1][1] * x[1] + b[1] * u,
        ]
    };
    let h = dt / substeps as f64;
    let mut x = x;
    for _ in 0..substeps {
        let k1 = f(x);
        let k2 = f([x[0] + 0.5 * h * k1[0], x[1] + 0.5 * h * k1[1]]);
        let k3 = f([x[0] + 0.5 * h * k2[0], x[1] + 0.5 * h * k2[1]]);
        let k4 = f([x[0] + h * k3[0], x[1] + h * k3[1]]);
        x = [
            x[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            x[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
    }
    x
}

/// Output energy of one axis over a held-input sequence plus the
/// 150 x 0.2 s zero-input tail, each step sampled at its end, by dense
/// integration.
pub fn dense_axis_energy(tau1: f64, tau2: f64, inputs: &[(f64, f64)], substeps: usize) -> f64 {
    let g = tau1 + tau2;
    let mut x = [0.0; 2];
    let mut e = 0.0;
    for &(u, dt) in inputs.iter().chain(std::iter::repeat(&(0.0, 0.2)).take(150)) {
        x = rk4_filter(tau1, tau2, x, u, dt, substeps);
        e += (g * x[0]).powi(2) * dt;
    }
    e
}

/// Zero-input output `g x1(t) = g (c1 e^{-t/tau1} + c2 e^{-t/tau2})` from the
/// initial state, as the two mode amplitudes.
pub fn two_exponential_modes(tau1: f64, tau2: f64, x0: [f64; 2]) -> [(f64, f64); 2] {
    let (l1, l2) = (-1.0 / tau1, -1.0 / tau2);
    let (a, _) = filter_matrices(tau1, tau2);
    let x1 = x0[0];
    let dx1 = a[0][0] * x0[0] + a[0][1] * x0[1];
    let c2 = (dx1 - l1 * x1) / (l2 - l1);
    let c1 = x1 - c2;
    let g = tau1 + tau2;
    [(g * c1, l1), (g * c2, l2)]
}

/// `sum_{k=1..steps} dt y(k dt)^2` in closed form (geometric series).
pub fn two_exponential_tail(tau1: f64, tau2: f64, x0: [f64; 2], steps: usize, dt: f64) -> f64 {
    let modes = two_exponential_modes(tau1, tau2, x0);
    let mut e = 0.0;
    for &(ci, li) in &modes {
        for &(cj, lj) in &modes {
            let r = ((li + lj) * dt).exp();
            let sum = if steps == usize::MAX {
                r / (1.0 - r)
            } else {
                r * (1.0 - r.powi(steps as i32)) / (1.0 - r)
            };
            e += ci * cj * sum;
        }
    }
    e * dt
}

/// `int_0^T y(t)^2 dt` in closed form; `T = inf` allowed.
pub fn two_exponential_integral(tau1: f64, tau2: f64, x0: [f64; 2], horizon: f64) -> f64 {
    let modes = two_exponential_modes(tau1, tau2, x0);
    let mut e = 0.0;
    for &(ci, li) in &modes {
        for &(cj, lj) in &modes {
            let rate = li + lj;
            e += ci * cj * ((rate * horizon).exp() - 1.0) / rate;
        }
    }
    e
}

/// Segment kinematics written from scratch: `(d, a_x, a_y, dt)` per
/// segment, turning angle from the arc cosine with the sign of the cross
/// product.
pub fn segment_reference(points: &[[f64; 2]], v: &[f64], heading: [f64; 2]) -> Vec<(f64, f64, f64, f64)> {
    let mut prev = heading;
    let mut out = Vec::new();
    for k in 0..points.len() - 1 {
        let h = [points[k + 1][0] - points[k][0], points[k + 1][1] - points[k][1]];
        let d = h[0].hypot(h[1]);
        let pn = prev[0].hypot(prev[1]);
        let cos = ((prev[0] * h[0] + prev[1] * h[1]) / (pn * d)).clamp(-1.0, 1.0);
        let cross = prev[0] * h[1] - prev[1] * h[0];
        let angle = cos.acos() * if cross < 0.0 { -1.0 } else { 1.0 };
        let vm = 0.5 * (v[k] + v[k + 1]);
        out.push((d, (v[k + 1].powi(2) - v[k].powi(2)) / (2.0 * d), vm * vm * angle / d, d / vm));
        prev = h;
    }
    out
}

/// Squared MSDV of an `(a_x, a_y, dt)` sequence through the default band
/// on both axes, by dense integration.
pub fn dense_squared_msdv(seq: &[(f64, f64, f64)], substeps: usize) -> f64 {
    let tau1 = 1.0 / (2.0 * std::f64::consts::PI * 0.0315);
    let tau2 = 1.0 / (2.0 * std::f64::consts::PI * 0.2);
    let long: Vec<(f64, f64)> = seq.iter().map(|&(ax, _, dt)| (ax, dt)).collect();
    let lat: Vec<(f64, f64)> = seq.iter().map(|&(_, ay, dt)| (ay, dt)).collect();
    dense_axis_energy(tau1, tau2, &long, substeps) + dense_axis_energy(tau1, tau2, &lat, substeps)
}

/// Central finite-difference gradient.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let h = step * x[i].abs().max(1.0);
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        g[i] = (up - down) / (2.0 * h);
    }
    g
}
