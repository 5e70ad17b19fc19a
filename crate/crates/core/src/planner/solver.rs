//! Box-constrained limited-memory quasi-Newton minimizer.
//!
//! Each iteration identifies the variables held at a bound by the gradient,
//! builds an L-BFGS direction on the remaining free variables, and
//! backtracks along the projection arc `P(x + a d)` until the Armijo
//! condition holds. Every iterate is projected onto the box, so feasibility is
//! exact.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smooth objective on a box.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    /// Writes the gradient into `grad` and returns the value.
    fn value_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64;

    /// Variables `i` and `j` share an initial curvature scale when
    /// `i % n == j % n`. One group by default.
    fn scaling_groups(&self) -> usize {
        1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Shape(format!(
                "{} lower vs {} upper bounds",
                lower.len(),
                upper.len()
            )));
        }
        for (index, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if !(l <= u) {
                return Err(Error::InfeasibleBounds {
                    index,
                    lower: l,
                    upper: u,
                });
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn project(&self, x: &mut [f64]) {
        for ((xi, &l), &u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *xi = xi.clamp(l, u);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.lower)
            .zip(&self.upper)
            .all(|((&xi, &l), &u)| l <= xi && xi <= u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    pub max_iterations: usize,
    /// Infinity norm of the projected gradient.
    pub gradient_tolerance: f64,
    /// Infinity norm of the accepted step, relative to `1 + |x|_inf`.
    pub step_tolerance: f64,
    /// Relative decrease of the objective.
    pub function_tolerance: f64,
    /// Decrease predicted by the quasi-Newton model, relative to
    /// `max(1, |f|)`.
    pub decrement_tolerance: f64,
    /// Number of stored curvature pairs.
    pub memory: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            gradient_tolerance: 1e-6,
            step_tolerance: 1e-12,
            function_tolerance: 1e-13,
            decrement_tolerance: 1e-10,
            memory: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Gradient,
    Step,
    Function,
    Decrement,
    LineSearch,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub x: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub termination: Termination,
}

impl SolveOutcome {
    pub fn converged(&self) -> bool {
        !matches!(self.termination, Termination::MaxIterations)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Gradient with components that push into an active bound zeroed.
fn projected_gradient(x: &[f64], g: &[f64], bounds: &Bounds, out: &mut [f64]) {
    for i in 0..x.len() {
        let at_lower = x[i] <= bounds.lower[i] && g[i] > 0.0;
        let at_upper = x[i] >= bounds.upper[i] && g[i] < 0.0;
        let pinned = bounds.lower[i] == bounds.upper[i];
        out[i] = if at_lower || at_upper || pinned { 0.0 } else { g[i] };
    }
}

struct Memory {
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    cap: usize,
}

impl Memory {
    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy = dot(&s, &y);
        if sy <= 1e-12 * (dot(&s, &s) * dot(&y, &y)).sqrt() {
            return;
        }
        if self.pairs.len() == self.cap {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    /// `-H q` by the two-loop recursion, restricted to `free`. The initial
    /// matrix is diagonal with one scale per variable group.
    fn direction(&self, q: &[f64], free: &[bool], groups: usize, alpha: &mut Vec<f64>) -> Vec<f64> {
        let masked_dot = |a: &[f64], b: &[f64]| -> f64 {
            a.iter()
                .zip(b)
                .zip(free)
                .map(|((x, y), &f)| if f { x * y } else { 0.0 })
                .sum()
        };
        let mut r: Vec<f64> = q.iter().zip(free).map(|(&v, &f)| if f { v } else { 0.0 }).collect();
        alpha.clear();
        alpha.resize(self.pairs.len(), 0.0);
        for (i, (s, y, rho)) in self.pairs.iter().enumerate().rev() {
            let a = rho * masked_dot(s, &r);
            alpha[i] = a;
            for ((ri, yi), &f) in r.iter_mut().zip(y).zip(free) {
                if f {
                    *ri -= a * yi;
                }
            }
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let overall = dot(s, y) / dot(y, y);
            for g in 0..groups {
                let (mut sy, mut yy) = (0.0, 0.0);
                for i in (g..s.len()).step_by(groups) {
                    sy += s[i] * y[i];
                    yy += y[i] * y[i];
                }
                let gamma = if sy > 0.0 && yy > 0.0 { sy / yy } else { overall };
                for i in (g..r.len()).step_by(groups) {
                    r[i] *= gamma;
                }
            }
        }
        for (i, (s, y, rho)) in self.pairs.iter().enumerate() {
            let b = rho * masked_dot(y, &r);
            for ((ri, si), &f) in r.iter_mut().zip(s).zip(free) {
                if f {
                    *ri += (alpha[i] - b) * si;
                }
            }
        }
        for ri in r.iter_mut() {
            *ri = -*ri;
        }
        r
    }
}

/// Minimizes `objective` over `bounds` starting from the projection of `x0`.
pub fn inner_solve<O: Objective + ?Sized>(
    objective: &O,
    x0: &[f64],
    bounds: &Bounds,
    params: &SolverParams,
) -> Result<SolveOutcome> {
    let n = objective.dim();
    if x0.len() != n || bounds.len() != n {
        return Err(Error::Shape(format!(
            "dimension {n}, start {}, bounds {}",
            x0.len(),
            bounds.len()
        )));
    }
    let mut x = x0.to_vec();
    bounds.project(&mut x);
    let mut g = vec![0.0; n];
    let mut f = objective.value_gradient(&x, &mut g);
    if !f.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "objective is not finite at the starting point ({f})"
        )));
    }
    let mut pg = vec![0.0; n];
    let mut memory = Memory {
        pairs: VecDeque::with_capacity(params.memory),
        cap: params.memory.max(1),
    };
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut alpha = Vec::with_capacity(params.memory);
    let groups = objective.scaling_groups().max(1);
    let mut iterations = 0;
    let termination = loop {
        projected_gradient(&x, &g, bounds, &mut pg);
        if inf_norm(&pg) <= params.gradient_tolerance {
            break Termination::Gradient;
        }
        if iterations >= params.max_iterations {
            break Termination::MaxIterations;
        }
        iterations += 1;

        let free: Vec<bool> = pg.iter().map(|&v| v != 0.0).collect();
        let mut d = memory.direction(&g, &free, groups, &mut alpha);
        let predicted = -0.5 * dot(&g, &d);
        if !memory.pairs.is_empty() && predicted >= 0.0 && predicted <= params.decrement_tolerance * f.abs().max(1.0) {
            break Termination::Decrement;
        }
        if !(dot(&g, &d) < 0.0) || memory.pairs.is_empty() {
            let scale = if memory.pairs.is_empty() {
                1.0 / (dot(&pg, &pg).sqrt()).max(1.0)
            } else {
                1.0
            };
            d = pg.iter().map(|v| -v * scale).collect();
        }

        let mut accepted = None;
        for attempt in 0..2 {
            let mut step = 1.0;
            for _ in 0..60 {
                for i in 0..n {
                    x_new[i] = x[i] + step * d[i];
                }
                bounds.project(&mut x_new);
                let moved: f64 = g.iter().zip(x_new.iter().zip(&x)).map(|(gi, (a, b))| gi * (a - b)).sum();
                let trial = objective.value(&x_new);
                if trial.is_finite() && trial <= f + 1e-4 * moved.min(0.0) && moved <= 0.0 {
                    accepted = Some(trial);
                    break;
                }
                step *= 0.5;
            }
            if accepted.is_some() || attempt == 1 {
                break;
            }
            // retry along steepest descent with fresh memory
            memory.pairs.clear();
            let scale = 1.0 / (dot(&pg, &pg).sqrt()).max(1.0);
            d = pg.iter().map(|v| -v * scale).collect();
        }
        if accepted.is_none() {
            break Termination::LineSearch;
        }

        let f_new = objective.value_gradient(&x_new, &mut g_new);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let step_norm = inf_norm(&s);
        let decrease = f - f_new;
        memory.push(s, y);
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        f = f_new;
        log::trace!("iteration {iterations}: f = {f:.12e}, step {step_norm:.3e}");
        if step_norm < params.step_tolerance * (1.0 + inf_norm(&x)) {
            break Termination::Step;
        }
        if decrease.abs() < params.function_tolerance * f.abs().max(1.0) {
            projected_gradient(&x, &g, bounds, &mut pg);
            if inf_norm(&pg) <= params.gradient_tolerance {
                break Termination::Gradient;
            }
            break Termination::Function;
        }
    };
    Ok(SolveOutcome {
        x,
        cost: f,
        iterations,
        termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic {
        diag: Vec<f64>,
        center: Vec<f64>,
    }

    impl Objective for Quadratic {
        fn dim(&self) -> usize {
            self.diag.len()
        }
        fn value(&self, x: &[f64]) -> f64 {
            x.iter()
                .zip(&self.diag)
                .zip(&self.center)
                .map(|((x, d), c)| 0.5 * d * (x - c) * (x - c))
                .sum()
        }
        fn value_gradient(&self, x: &[f64], g: &mut [f64]) -> f64 {
            for i in 0..x.len() {
                g[i] = self.diag[i] * (x[i] - self.center[i]);
            }
            self.value(x)
        }
    }

    #[test]
    fn separable_box_qp_clamps() {
        let q = Quadratic {
            diag: vec![1.0, 10.0, 100.0, 0.5],
            center: vec![2.0, -3.0, 0.25, 0.7],
        };
        let b = Bounds::new(vec![-1.0; 4], vec![1.0; 4]).unwrap();
        let out = inner_solve(&q, &[0.0; 4], &b, &SolverParams {
            gradient_tolerance: 1e-12,
            decrement_tolerance: 0.0,
            ..Default::default()
        })
        .unwrap();
        let expect = [1.0, -1.0, 0.25, 0.7];
        for (a, e) in out.x.iter().zip(expect) {
            assert!((a - e).abs() < 1e-10, "{a} vs {e}");
        }
    }

    #[test]
    fn pinned_variables_stay_put() {
        let q = Quadratic {
            diag: vec![1.0, 1.0],
            center: vec![5.0, 5.0],
        };
        let b = Bounds::new(vec![0.3, -2.0], vec![0.3, 2.0]).unwrap();
        let out = inner_solve(&q, &[0.0, 0.0], &b, &SolverParams::default()).unwrap();
        assert_eq!(out.x[0], 0.3);
        assert!((out.x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_bounds_rejected() {
        assert!(matches!(
            Bounds::new(vec![1.0], vec![0.0]),
            Err(Error::InfeasibleBounds { index: 0, .. })
        ));
    }
}
