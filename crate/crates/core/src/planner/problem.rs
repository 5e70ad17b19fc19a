//! The planning cost as a function of a flat decision vector.
//!
//! Variables are interleaved per station, `[y_0, v_0, y_1, v_1, ...]`, so one
//! forward-mode sweep of [`LANES`] tangents covers `LANES / 2` consecutive
//! stations. Segments upstream of the first seeded station do not depend on
//! the seeded variables, so each sweep starts there from filter states cached
//! by an `f64` pass.
//!
//! The raw-acceleration cost is a sum of local terms and gets a hand-written
//! reverse sweep instead, see [`raw_energy_adjoint`].

use crate::autodiff::{Dual, Real, LANES};
use crate::objective::{comfort_energy, waypoint_cost, ObjectiveKind, ObjectiveSpec};
use crate::planner::solver::Objective;
use crate::road_geometry::{Station, Vec2};
use crate::trajectory_kinematics::{segment_terms, SegmentTerms};

/// Cost `D + W T` over free stations, optionally preceded by a fixed waypoint.
#[derive(Debug, Clone)]
pub struct PlanObjective<'a> {
    stations: &'a [Station],
    anchor: Option<(Vec2, f64)>,
    initial_heading: Vec2,
    spec: &'a ObjectiveSpec,
}

impl<'a> PlanObjective<'a> {
    /// Every station carries free `(y, v)` variables.
    pub fn new(stations: &'a [Station], initial_heading: Vec2, spec: &'a ObjectiveSpec) -> Self {
        Self {
            stations,
            anchor: None,
            initial_heading,
            spec,
        }
    }

    /// Prepends a fixed waypoint at `position` passed at `speed`.
    pub fn with_anchor(mut self, position: Vec2, speed: f64) -> Self {
        self.anchor = Some((position, speed));
        self
    }

    pub fn pack(y: &[f64], v: &[f64]) -> Vec<f64> {
        y.iter().zip(v).flat_map(|(&a, &b)| [a, b]).collect()
    }

    pub fn unpack(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (
            x.iter().step_by(2).copied().collect(),
            x.iter().skip(1).step_by(2).copied().collect(),
        )
    }

    fn offset(&self) -> usize {
        usize::from(self.anchor.is_some())
    }

    fn build<T: Real>(&self, x: &[T], wp: &mut Vec<[T; 2]>, v: &mut Vec<T>) {
        wp.clear();
        v.clear();
        if let Some((p, speed)) = self.anchor {
            wp.push([T::cst(p[0]), T::cst(p[1])]);
            v.push(T::cst(speed));
        }
        for (k, st) in self.stations.iter().enumerate() {
            let y = x[2 * k];
            wp.push([
                y * st.normal[0] + st.center[0],
                y * st.normal[1] + st.center[1],
            ]);
            v.push(x[2 * k + 1]);
        }
    }
}

impl Objective for PlanObjective<'_> {
    fn dim(&self) -> usize {
        2 * self.stations.len()
    }

    fn scaling_groups(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut wp = Vec::with_capacity(self.stations.len() + 1);
        let mut v = Vec::with_capacity(self.stations.len() + 1);
        self.build(x, &mut wp, &mut v);
        let mut scratch = Vec::with_capacity(wp.len());
        waypoint_cost(&wp, &v, self.initial_heading, self.spec, &mut scratch)
    }

    fn value_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let spec = self.spec;
        let mut wp = Vec::new();
        let mut v = Vec::new();
        self.build(x, &mut wp, &mut v);
        let mut terms: Vec<SegmentTerms<f64>> = Vec::with_capacity(wp.len());
        let value = waypoint_cost(&wp, &v, self.initial_heading, spec, &mut terms);

        // filter states entering each segment
        let fl = &spec.filters.longitudinal;
        let ft = &spec.filters.lateral;
        let mut carry = Vec::with_capacity(terms.len());
        let mut state = spec.carry_in;
        for t in &terms {
            carry.push(state);
            if spec.kind == ObjectiveKind::Ms {
                state.longitudinal = fl.propagate(state.longitudinal, t.a_x, t.dt);
                state.lateral = ft.propagate(state.lateral, t.a_y, t.dt);
            }
        }

        let offset = self.offset();
        if spec.kind == ObjectiveKind::Ma {
            let mut gp = vec![[0.0; 2]; wp.len()];
            let mut gv = vec![0.0; wp.len()];
            raw_energy_adjoint(&wp, &v, self.initial_heading, spec.w, &terms, &mut gp, &mut gv);
            for (k, st) in self.stations.iter().enumerate() {
                let j = k + offset;
                grad[2 * k] = gp[j][0] * st.normal[0] + gp[j][1] * st.normal[1];
                grad[2 * k + 1] = gv[j];
            }
            return value;
        }
        let n = x.len();
        let mut dwp: Vec<[Dual<LANES>; 2]> = Vec::with_capacity(wp.len());
        let mut dv: Vec<Dual<LANES>> = Vec::with_capacity(wp.len());
        let mut dterms = Vec::with_capacity(wp.len());
        let mut start = 0;
        while start < n {
            let end = (start + LANES).min(n);
            // first waypoint touched by this chunk and first segment it affects
            let j = start / 2 + offset;
            let k0 = j.saturating_sub(1);
            let heading = if k0 == 0 {
                self.initial_heading
            } else {
                [wp[k0][0] - wp[k0 - 1][0], wp[k0][1] - wp[k0 - 1][1]]
            };
            dwp.clear();
            dv.clear();
            for k in k0..wp.len() {
                dwp.push([Dual::constant(wp[k][0]), Dual::constant(wp[k][1])]);
                dv.push(Dual::constant(v[k]));
            }
            for (lane, i) in (start..end).enumerate() {
                let k = i / 2 + offset - k0;
                if i % 2 == 0 {
                    let st = &self.stations[i / 2];
                    let y = Dual::<LANES>::variable(x[i], lane);
                    dwp[k] = [y * st.normal[0] + st.center[0], y * st.normal[1] + st.center[1]];
                } else {
                    dv[k] = Dual::variable(x[i], lane);
                }
            }
            segment_terms(&dwp, &dv, heading, &mut dterms);
            let mut time = Dual::<LANES>::constant(0.0);
            for t in &dterms {
                time = time + t.dt;
            }
            let entering = carry.get(k0).copied().unwrap_or(spec.carry_in);
            let out = comfort_energy(&dterms, spec.kind, &spec.filters, entering) + time * spec.w;
            for (lane, i) in (start..end).enumerate() {
                grad[i] = out.d[lane];
            }
            start = end;
        }
        value
    }
}

/// Gradient of `sum (a_x^2 + a_y^2 + w) dt` with respect to waypoint
/// positions and speeds, accumulated segment by segment in reverse.
fn raw_energy_adjoint(
    wp: &[Vec2],
    v: &[f64],
    initial_heading: Vec2,
    w: f64,
    terms: &[SegmentTerms<f64>],
    gp: &mut [Vec2],
    gv: &mut [f64],
) {
    for (k, t) in terms.iter().enumerate() {
        let h = t.h;
        let p = if k == 0 {
            initial_heading
        } else {
            [wp[k][0] - wp[k - 1][0], wp[k][1] - wp[k - 1][1]]
        };
        let (vk, vn) = (v[k], v[k + 1]);
        let sum = vk + vn;
        let vbar = 0.5 * sum;

        let bar_ax = 2.0 * t.a_x * t.dt;
        let bar_ay = 2.0 * t.a_y * t.dt;
        let mut bar_d = 0.0;
        let mut bar_sum = 0.0;

        // a_x = (vn^2 - vk^2) / 2d
        gv[k + 1] += bar_ax * vn / t.d;
        gv[k] -= bar_ax * vk / t.d;
        bar_d -= bar_ax * t.a_x / t.d;

        // a_y = vbar^2 dpsi / d
        bar_sum += bar_ay * vbar * t.kappa;
        let bar_dpsi = bar_ay * vbar * vbar / t.d;
        bar_d -= bar_ay * t.a_y / t.d;

        // dt = 2d / (vk + vn)
        let bar_dt = t.a_x * t.a_x + t.a_y * t.a_y + w;
        bar_d += bar_dt * 2.0 / sum;
        bar_sum -= bar_dt * t.dt / sum;
        gv[k] += bar_sum;
        gv[k + 1] += bar_sum;

        // dpsi = atan2(p x h, p . h)
        let cross = p[0] * h[1] - p[1] * h[0];
        let dot = p[0] * h[0] + p[1] * h[1];
        let r2 = cross * cross + dot * dot;
        let (dc, do_) = (dot / r2, -cross / r2);
        let bar_h = [
            bar_dpsi * (dc * -p[1] + do_ * p[0]) + bar_d * h[0] / t.d,
            bar_dpsi * (dc * p[0] + do_ * p[1]) + bar_d * h[1] / t.d,
        ];
        let bar_p = [
            bar_dpsi * (dc * h[1] + do_ * h[0]),
            bar_dpsi * (dc * -h[0] + do_ * h[1]),
        ];
        for i in 0..2 {
            gp[k + 1][i] += bar_h[i];
            gp[k][i] -= bar_h[i];
        }
        if k > 0 {
            for i in 0..2 {
                gp[k][i] += bar_p[i];
                gp[k - 1][i] -= bar_p[i];
            }
        }
    }
}
