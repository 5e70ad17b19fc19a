//! Band-pass frequency weighting of acceleration signals.
//!
//! Each axis is filtered by
//!
//! ```text
//!            g          s
//! H(s) = ---------- ----------
//!        tau1 s + 1 tau2 s + 1
//! ```
//!
//! realised in observable canonical form
//!
//! ```text
//! A = [ -(1/tau1 + 1/tau2)  1 ]    B = [ 1/(tau1 tau2) ]    C = [ 1  0 ]
//!     [ -1/(tau1 tau2)      0 ]        [ 0             ]
//! ```
//!
//! with output gain `g` chosen so the peak passband gain (at
//! `w = 1/sqrt(tau1 tau2)`) is one, which gives `g = tau1 + tau2`.
//!
//! Inputs are held constant over each step (zero-order hold), so the discrete
//! propagation is exact for piecewise-constant accelerations. The eigenvalues
//! of `A` are `-1/tau1` and `-1/tau2`; `A` is diagonalized once and every
//! step only needs two scalar exponentials.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::autodiff::Real;
use crate::error::{Error, Result};

pub type Mat2 = [[f64; 2]; 2];

/// Number of zero-input samples appended after the motion ends.
pub const TAIL_STEPS: usize = 150;
/// Sampling time of the tail, seconds.
pub const TAIL_DT: f64 = 0.2;

/// Lower edge of the default nauseogenic band, Hz.
pub const DEFAULT_LOW_HZ: f64 = 0.0315;
/// Upper edge of the default nauseogenic band, Hz.
pub const DEFAULT_HIGH_HZ: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Longitudinal,
    Lateral,
}

/// Band-pass time constants for one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    /// Low-pass time constant (slow), seconds.
    pub tau1: f64,
    /// High-pass time constant (fast), seconds.
    pub tau2: f64,
    /// Output gain applied after `C`.
    pub gain_normalization: f64,
    pub axis: Axis,
}

impl FilterSpec {
    /// Spec with peak passband gain normalized to one.
    pub fn new(tau1: f64, tau2: f64, axis: Axis) -> Self {
        Self {
            tau1,
            tau2,
            gain_normalization: tau1 + tau2,
            axis,
        }
    }

    /// Spec from band edges in Hz.
    pub fn from_band(low_hz: f64, high_hz: f64, axis: Axis) -> Self {
        Self::new(
            1.0 / (2.0 * std::f64::consts::PI * low_hz),
            1.0 / (2.0 * std::f64::consts::PI * high_hz),
            axis,
        )
    }

    /// 0.0315-0.2 Hz band for the given axis.
    pub fn default_for(axis: Axis) -> Self {
        Self::from_band(DEFAULT_LOW_HZ, DEFAULT_HIGH_HZ, axis)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau1 > self.tau2 && self.tau2 > 0.0) || !self.tau1.is_finite() {
            return Err(Error::CutoffsOutOfOrder {
                tau1: self.tau1,
                tau2: self.tau2,
            });
        }
        if !(self.gain_normalization > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "gain normalization must be positive, got {}",
                self.gain_normalization
            )));
        }
        Ok(())
    }

    /// Magnitude of the normalized transfer function at angular frequency `w`.
    pub fn gain_at(&self, w: f64) -> f64 {
        self.gain_normalization * w
            / ((1.0 + (self.tau1 * w).powi(2)) * (1.0 + (self.tau2 * w).powi(2))).sqrt()
    }

    pub fn peak_frequency(&self) -> f64 {
        1.0 / (self.tau1 * self.tau2).sqrt()
    }
}

/// Internal filter state and the most recent output.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FilterState {
    pub x: [f64; 2],
    pub a_fil: f64,
}

/// Continuous model plus its precomputed eigendecomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalizedTransition {
    pub spec: FilterSpec,
    pub eigenvalues: [f64; 2],
    /// Columns are eigenvectors of `A`.
    pub p: Mat2,
    pub p_inv: Mat2,
    a: Mat2,
    b: [f64; 2],
    /// Spectral projectors `P e_i e_i^T P^-1`.
    proj: [Mat2; 2],
    /// `proj_i B / lambda_i`.
    bproj: [[f64; 2]; 2],
    /// Quadratic form of the zero-input tail energy.
    tail_q: Mat2,
}

pub fn make_filter(spec: FilterSpec) -> Result<(FilterState, DiagonalizedTransition)> {
    Ok((FilterState::default(), DiagonalizedTransition::new(spec)?))
}

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn mat_vec(a: &Mat2, x: &[f64; 2]) -> [f64; 2] {
    [
        a[0][0] * x[0] + a[0][1] * x[1],
        a[1][0] * x[0] + a[1][1] * x[1],
    ]
}

fn mat_inv(a: &Mat2) -> Mat2 {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ]
}

impl DiagonalizedTransition {
    pub fn new(spec: FilterSpec) -> Result<Self> {
        spec.validate()?;
        let (t1, t2) = (spec.tau1, spec.tau2);
        let a = [[-(1.0 / t1 + 1.0 / t2), 1.0], [-1.0 / (t1 * t2), 0.0]];
        let b = [1.0 / (t1 * t2), 0.0];
        let eigenvalues = [-1.0 / t1, -1.0 / t2];
        // (A - lambda I) v = 0 gives v = (1, -1 / (tau1 tau2 lambda)).
        let p = [[1.0, 1.0], [1.0 / t2, 1.0 / t1]];
        let p_inv = mat_inv(&p);
        let mut proj = [[[0.0; 2]; 2]; 2];
        let mut bproj = [[0.0; 2]; 2];
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    proj[k][i][j] = p[i][k] * p_inv[k][j];
                }
            }
            let pb = mat_vec(&proj[k], &b);
            bproj[k] = [pb[0] / eigenvalues[k], pb[1] / eigenvalues[k]];
        }
        let mut out = Self {
            spec,
            eigenvalues,
            p,
            p_inv,
            a,
            b,
            proj,
            bproj,
            tail_q: [[0.0; 2]; 2],
        };
        out.tail_q = out.build_tail_quadratic();
        Ok(out)
    }

    pub fn a(&self) -> Mat2 {
        self.a
    }

    pub fn b(&self) -> [f64; 2] {
        self.b
    }

    pub fn gain(&self) -> f64 {
        self.spec.gain_normalization
    }

    /// ZOH discretization `(A_d, B_d)` for step `dt`, evaluated literally as
    /// `A_d = P diag(exp(lambda dt)) P^-1`, `B_d = A^-1 (A_d - I) B`.
    pub fn discretize(&self, dt: f64) -> (Mat2, [f64; 2]) {
        let e = [
            (self.eigenvalues[0] * dt).exp(),
            (self.eigenvalues[1] * dt).exp(),
        ];
        let scaled = [
            [self.p[0][0] * e[0], self.p[0][1] * e[1]],
            [self.p[1][0] * e[0], self.p[1][1] * e[1]],
        ];
        let ad = mat_mul(&scaled, &self.p_inv);
        let m = [[ad[0][0] - 1.0, ad[0][1]], [ad[1][0], ad[1][1] - 1.0]];
        let bd = mat_vec(&mat_inv(&self.a), &mat_vec(&m, &self.b));
        (ad, bd)
    }

    /// One ZOH step for any scalar type; same map as [`Self::discretize`].
    #[inline]
    pub fn propagate<T: Real>(&self, x: [T; 2], input: T, dt: T) -> [T; 2] {
        let e0 = (dt * self.eigenvalues[0]).exp();
        let e1 = (dt * self.eigenvalues[1]).exp();
        let [m0, m1] = &self.proj;
        let [b0, b1] = &self.bproj;
        let p0 = [x[0] * m0[0][0] + x[1] * m0[0][1], x[0] * m0[1][0] + x[1] * m0[1][1]];
        let p1 = [x[0] * m1[0][0] + x[1] * m1[0][1], x[0] * m1[1][0] + x[1] * m1[1][1]];
        let u0 = (e0 - 1.0) * input;
        let u1 = (e1 - 1.0) * input;
        [
            e0 * p0[0] + e1 * p1[0] + u0 * b0[0] + u1 * b1[0],
            e0 * p0[1] + e1 * p1[1] + u0 * b0[1] + u1 * b1[1],
        ]
    }

    #[inline]
    pub fn output<T: Real>(&self, x: [T; 2]) -> T {
        x[0] * self.spec.gain_normalization
    }

    /// Zero-input tail energy of state `x`, as the precomputed quadratic
    /// form; equals [`tail_energy`] up to rounding.
    #[inline]
    pub fn tail_quadratic<T: Real>(&self, x: [T; 2]) -> T {
        let q = &self.tail_q;
        x[0] * x[0] * q[0][0] + x[0] * x[1] * (q[0][1] + q[1][0]) + x[1] * x[1] * q[1][1]
    }

    fn build_tail_quadratic(&self) -> Mat2 {
        let (ad, _) = self.discretize(TAIL_DT);
        let g = self.spec.gain_normalization;
        // row vector c_j = g e1^T A_d^j
        let mut c = [g, 0.0];
        let mut q = [[0.0; 2]; 2];
        for _ in 0..TAIL_STEPS {
            c = [
                c[0] * ad[0][0] + c[1] * ad[1][0],
                c[0] * ad[0][1] + c[1] * ad[1][1],
            ];
            for i in 0..2 {
                for j in 0..2 {
                    q[i][j] += TAIL_DT * c[i] * c[j];
                }
            }
        }
        q
    }
}

/// Advances the filter by one held-input step of length `dt`.
pub fn step(
    state: &FilterState,
    trans: &DiagonalizedTransition,
    a_act: f64,
    dt: f64,
) -> Result<(FilterState, f64)> {
    if !(dt > 0.0) {
        return Err(Error::NonpositiveTimeStep(dt));
    }
    let (ad, bd) = trans.discretize(dt);
    let ax = mat_vec(&ad, &state.x);
    let x = [ax[0] + bd[0] * a_act, ax[1] + bd[1] * a_act];
    let a_fil = trans.gain() * x[0];
    Ok((FilterState { x, a_fil }, a_fil))
}

/// Output energy over the zero-input tail: `sum a_fil^2 * 0.2` for 150 steps.
pub fn tail_energy(state: &FilterState, trans: &DiagonalizedTransition) -> f64 {
    let mut s = *state;
    let mut energy = 0.0;
    for _ in 0..TAIL_STEPS {
        let (next, out) = step(&s, trans, 0.0, TAIL_DT).expect("positive tail step");
        energy += out * out * TAIL_DT;
        s = next;
    }
    energy
}

/// Longitudinal and lateral filters applied side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisFilters {
    pub longitudinal: DiagonalizedTransition,
    pub lateral: DiagonalizedTransition,
}

impl AxisFilters {
    pub fn new(longitudinal: FilterSpec, lateral: FilterSpec) -> Result<Self> {
        Ok(Self {
            longitudinal: DiagonalizedTransition::new(longitudinal)?,
            lateral: DiagonalizedTransition::new(lateral)?,
        })
    }
}

impl Default for AxisFilters {
    fn default() -> Self {
        Self::new(
            FilterSpec::default_for(Axis::Longitudinal),
            FilterSpec::default_for(Axis::Lateral),
        )
        .expect("default band is valid")
    }
}

/// Filter states of both axes, carried between receding-horizon solves.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CarryState {
    pub longitudinal: [f64; 2],
    pub lateral: [f64; 2],
}

/// Motion and tail parts of the frequency-weighted energy.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WeightedEnergy {
    pub motion: f64,
    pub tail: f64,
    pub end_state: CarryState,
}

impl WeightedEnergy {
    pub fn total(&self) -> f64 {
        self.motion + self.tail
    }
}

/// Frequency-weighted acceleration energy of a held-input sequence of
/// `(a_x, a_y, dt)` triples, including the zero-input tail.
pub fn weighted_energy(
    filters: &AxisFilters,
    accel_sequence: &[(f64, f64, f64)],
    carry_in: Option<CarryState>,
) -> Result<WeightedEnergy> {
    if accel_sequence.is_empty() {
        warn!("weighted_energy called on an empty sequence");
        return Ok(WeightedEnergy::default());
    }
    let carry = carry_in.unwrap_or_default();
    let mut long = FilterState {
        x: carry.longitudinal,
        a_fil: 0.0,
    };
    let mut lat = FilterState {
        x: carry.lateral,
        a_fil: 0.0,
    };
    let mut motion = 0.0;
    for &(ax, ay, dt) in accel_sequence {
        let (nl, fx) = step(&long, &filters.longitudinal, ax, dt)?;
        let (nt, fy) = step(&lat, &filters.lateral, ay, dt)?;
        motion += (fx * fx + fy * fy) * dt;
        long = nl;
        lat = nt;
    }
    let tail = tail_energy(&long, &filters.longitudinal) + tail_energy(&lat, &filters.lateral);
    Ok(WeightedEnergy {
        motion,
        tail,
        end_state: CarryState {
            longitudinal: long.x,
            lateral: lat.x,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lateral() -> DiagonalizedTransition {
        DiagonalizedTransition::new(FilterSpec::default_for(Axis::Lateral)).unwrap()
    }

    #[test]
    fn eigenvalues_solve_characteristic_polynomial() {
        let spec = FilterSpec::new(5.05, 0.796, Axis::Lateral);
        let t = DiagonalizedTransition::new(spec).unwrap();
        for &l in &t.eigenvalues {
            let r = 5.05 * 0.796 * l * l + (5.05 + 0.796) * l + 1.0;
            assert!(r.abs() < 1e-12);
        }
        assert!((t.eigenvalues[0] + 0.198).abs() < 5e-4);
        assert!((t.eigenvalues[1] + 1.256).abs() < 5e-4);
    }

    #[test]
    fn diagonalization_reconstructs_a() {
        let t = lateral();
        let d = [[t.eigenvalues[0], 0.0], [0.0, t.eigenvalues[1]]];
        let r = mat_mul(&mat_mul(&t.p, &d), &t.p_inv);
        for i in 0..2 {
            for j in 0..2 {
                assert!((r[i][j] - t.a()[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cutoffs_out_of_order() {
        let err = DiagonalizedTransition::new(FilterSpec::new(0.5, 1.0, Axis::Lateral)).unwrap_err();
        assert!(err.to_string().starts_with("cutoffs out of order"));
    }

    #[test]
    fn peak_gain_is_unity() {
        let spec = FilterSpec::default_for(Axis::Lateral);
        let w0 = spec.peak_frequency();
        assert!((spec.gain_at(w0) - 1.0).abs() < 1e-12);
        assert!(spec.gain_at(w0 * 1.01) < 1.0 && spec.gain_at(w0 * 0.99) < 1.0);
    }

    #[test]
    fn equilibrium_stays_zero() {
        let t = lateral();
        let (s, out) = step(&FilterState::default(), &t, 0.0, 0.3).unwrap();
        assert_eq!(s.x, [0.0, 0.0]);
        assert_eq!(out, 0.0);
    }

    #[test]
    fn nonpositive_step_rejected() {
        let t = lateral();
        assert!(matches!(
            step(&FilterState::default(), &t, 1.0, 0.0),
            Err(Error::NonpositiveTimeStep(_))
        ));
    }

    #[test]
    fn generic_propagation_matches_literal_discretization() {
        let t = lateral();
        let x = [0.3, -0.7];
        for &dt in &[1e-3, 0.05, 0.2, 1.0, 7.5] {
            let (s, _) = step(&FilterState { x, a_fil: 0.0 }, &t, 1.7, dt).unwrap();
            let g = t.propagate(x, 1.7, dt);
            assert!((s.x[0] - g[0]).abs() < 1e-13 && (s.x[1] - g[1]).abs() < 1e-13);
        }
    }

    #[test]
    fn semigroup_under_constant_input() {
        let t = lateral();
        let s0 = FilterState {
            x: [0.2, 0.1],
            a_fil: 0.0,
        };
        let (one, _) = step(&s0, &t, 2.0, 0.8).unwrap();
        let (h, _) = step(&s0, &t, 2.0, 0.4).unwrap();
        let (two, _) = step(&h, &t, 2.0, 0.4).unwrap();
        assert!((one.x[0] - two.x[0]).abs() < 1e-14);
        assert!((one.x[1] - two.x[1]).abs() < 1e-14);
    }

    #[test]
    fn step_response_decays() {
        let t = lateral();
        let mut s = FilterState::default();
        let mut out = 0.0;
        for _ in 0..600 {
            let (n, o) = step(&s, &t, 1.0, 0.5).unwrap();
            s = n;
            out = o;
        }
        assert!(out.abs() < 1e-10, "band-pass must reject DC, got {out}");
    }

    #[test]
    fn tail_quadratic_matches_loop() {
        let t = lateral();
        let s = FilterState {
            x: [0.4, -0.9],
            a_fil: 0.0,
        };
        let direct = tail_energy(&s, &t);
        let quad = t.tail_quadratic(s.x);
        assert!((direct - quad).abs() < 1e-12 * direct.abs().max(1.0));
    }

    #[test]
    fn empty_sequence_is_zero() {
        let e = weighted_energy(&AxisFilters::default(), &[], None).unwrap();
        assert_eq!(e.total(), 0.0);
    }
}
