//! Direct transcription of the rendezvous problem: forward-Euler defects,
//! wrench boxes, per-knot keep-out constraints and the quadratic objective.
//!
//! Decision vector layout (stage-wise, so the Hessian is banded):
//!
//! ```text
//! z = [x₀ (6), F₀ (3), x₁ (6), F₁ (3), …, x_{N−1}, F_{N−1}, x_N (6)]
//! ```
//!
//! `x₀ = x_init` and `θ_N = θ_finish` are imposed as fixed bounds, so they
//! hold exactly in every iterate.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods shadow these when std is linked
use num_traits::Float;

use super::al::{BandedNlp, Row};
use super::{ObjectiveBreakdown, OptProblem};
use crate::dynamics::{euler_step, kinetic_energy, BodyState, Wrench};
use crate::kos::{build_region, signed_distance, Primitive};
use crate::linalg::BandedSym;

pub(crate) const STAGE: usize = 9;
const BANDWIDTH: usize = 14;

#[inline]
pub(crate) fn state_index(k: usize) -> usize {
    STAGE * k
}

#[inline]
pub(crate) fn force_index(k: usize) -> usize {
    STAGE * k + 6
}

pub(crate) fn pack(states: &[BodyState], wrenches: &[Wrench]) -> Vec<f64> {
    let n = wrenches.len();
    let mut z = vec![0.0; STAGE * n + 6];
    for k in 0..=n {
        z[state_index(k)..state_index(k) + 6].copy_from_slice(&states[k].to_array());
        if k < n {
            z[force_index(k)..force_index(k) + 3].copy_from_slice(&wrenches[k].to_array());
        }
    }
    z
}

pub(crate) fn unpack(z: &[f64]) -> (Vec<BodyState>, Vec<Wrench>) {
    let n = (z.len() - 6) / STAGE;
    let states = (0..=n).map(|k| BodyState::from_slice(&z[state_index(k)..])).collect();
    let wrenches = (0..n)
        .map(|k| {
            let f = &z[force_index(k)..force_index(k) + 3];
            Wrench::new(f[0], f[1], f[2])
        })
        .collect();
    (states, wrenches)
}

/// Objective value split into its three terms.
pub fn build_objective(states: &[BodyState], wrenches: &[Wrench], problem: &OptProblem) -> ObjectiveBreakdown {
    let n = wrenches.len();
    let last = states[n].to_array();
    let goal = problem.x_goal.to_array();
    let goal_term = problem.w_goal * last.iter().zip(goal).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    let kinetic_term = states[..n].iter().map(|s| kinetic_energy(s, &problem.body)).sum::<f64>() * problem.dt;
    let effort_term = problem.w_u * wrenches.iter().map(Wrench::norm_squared).sum::<f64>() * problem.dt;
    ObjectiveBreakdown { goal: goal_term, kinetic: kinetic_term, effort: effort_term }
}

/// Residuals of every constraint family for a candidate trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    /// `x₀ − x_init`.
    pub initial: [f64; 6],
    /// `θ_N − θ_finish`.
    pub terminal_attitude: f64,
    /// `x_{k+1} − euler_step(x_k, F_k)`, one row per interval.
    pub defects: Vec<[f64; 6]>,
    /// Per interval and axis: amount by which the wrench leaves its box (0 if inside).
    pub bound_excess: Vec<[f64; 3]>,
    /// Exact keep-out signed distance per knot under the scheduled state.
    pub kos: Vec<f64>,
}

impl ConstraintSet {
    pub fn max_defect(&self) -> f64 {
        self.defects.iter().flat_map(|d| d.iter()).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_kos(&self) -> f64 {
        self.kos.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest violation across all families (keep-out counted as `max(0, −g)`).
    pub fn max_violation(&self) -> f64 {
        let init = self.initial.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let bounds = self.bound_excess.iter().flat_map(|d| d.iter()).fold(0.0f64, |m, v| m.max(*v));
        let kos = (-self.min_kos()).max(0.0);
        init.max(self.terminal_attitude.abs()).max(self.max_defect()).max(bounds).max(kos)
    }
}

pub fn build_constraints(states: &[BodyState], wrenches: &[Wrench], problem: &OptProblem) -> ConstraintSet {
    let n = wrenches.len();
    let x0 = states[0].to_array();
    let xi = problem.x_init.to_array();
    let initial = core::array::from_fn(|i| x0[i] - xi[i]);
    let terminal_attitude = states[n].theta - problem.theta_finish;
    let defects = (0..n)
        .map(|k| {
            let next = euler_step(&states[k], &wrenches[k], &problem.body, problem.dt).to_array();
            let actual = states[k + 1].to_array();
            core::array::from_fn(|i| actual[i] - next[i])
        })
        .collect();
    let lo = problem.wrench_min.to_array();
    let hi = problem.wrench_max.to_array();
    let bound_excess = wrenches
        .iter()
        .map(|w| {
            let a = w.to_array();
            core::array::from_fn(|i| (lo[i] - a[i]).max(a[i] - hi[i]).max(0.0))
        })
        .collect();
    let kos = (0..=n)
        .map(|k| {
            if !problem.kos_enabled {
                return f64::INFINITY;
            }
            let t = k as f64 * problem.dt;
            let theta_t = problem.target.theta_at(t);
            let region = build_region(problem.kos_schedule[k], theta_t, problem.target.position, &problem.kos_cfg);
            signed_distance(states[k].position(), &region)
        })
        .collect();
    ConstraintSet { initial, terminal_attitude, defects, bound_excess, kos }
}

/// The NLP handed to the augmented-Lagrangian solver.
pub(crate) struct Transcription<'a> {
    problem: &'a OptProblem,
    n: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    regions: Vec<Vec<Primitive>>,
}

impl<'a> Transcription<'a> {
    pub(crate) fn new(problem: &'a OptProblem) -> Self {
        let n = problem.n;
        let dim = STAGE * n + 6;
        let mut lower = vec![f64::NEG_INFINITY; dim];
        let mut upper = vec![f64::INFINITY; dim];
        let x0 = problem.x_init.to_array();
        lower[..6].copy_from_slice(&x0);
        upper[..6].copy_from_slice(&x0);
        let (fl, fh) = (problem.wrench_min.to_array(), problem.wrench_max.to_array());
        for k in 0..n {
            for i in 0..3 {
                lower[force_index(k) + i] = fl[i];
                upper[force_index(k) + i] = fh[i];
            }
        }
        let th = state_index(n) + 2;
        lower[th] = problem.theta_finish;
        upper[th] = problem.theta_finish;

        let regions = (0..=n)
            .map(|k| {
                if !problem.kos_enabled || k == 0 {
                    return Vec::new();
                }
                let theta_t = problem.target.theta_at(k as f64 * problem.dt);
                build_region(problem.kos_schedule[k], theta_t, problem.target.position, &problem.kos_cfg).primitives
            })
            .collect();
        Self { problem, n, lower, upper, regions }
    }
}

impl BandedNlp for Transcription<'_> {
    fn dim(&self) -> usize {
        STAGE * self.n + 6
    }

    fn bandwidth(&self) -> usize {
        BANDWIDTH
    }

    fn lower(&self) -> &[f64] {
        &self.lower
    }

    fn upper(&self) -> &[f64] {
        &self.upper
    }

    fn objective(&self, z: &[f64]) -> f64 {
        let p = self.problem;
        let (m, inertia) = (p.body.mass(), p.body.inertia());
        let mut running = 0.0;
        for k in 0..self.n {
            let s = &z[state_index(k)..];
            let f = &z[force_index(k)..];
            running += 0.5 * m * (s[3] * s[3] + s[4] * s[4]) + 0.5 * inertia * s[5] * s[5];
            running += p.w_u * (f[0] * f[0] + f[1] * f[1] + f[2] * f[2]);
        }
        let goal = p.x_goal.to_array();
        let last = &z[state_index(self.n)..];
        let terminal: f64 = (0..6).map(|i| (last[i] - goal[i]) * (last[i] - goal[i])).sum();
        p.w_goal * terminal + running * p.dt
    }

    fn objective_gradient(&self, z: &[f64], g: &mut [f64]) {
        let p = self.problem;
        let (m, inertia) = (p.body.mass(), p.body.inertia());
        g.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..self.n {
            let si = state_index(k);
            let fi = force_index(k);
            g[si + 3] = m * z[si + 3] * p.dt;
            g[si + 4] = m * z[si + 4] * p.dt;
            g[si + 5] = inertia * z[si + 5] * p.dt;
            for i in 0..3 {
                g[fi + i] = 2.0 * p.w_u * z[fi + i] * p.dt;
            }
        }
        let goal = p.x_goal.to_array();
        let si = state_index(self.n);
        for i in 0..6 {
            g[si + i] = 2.0 * p.w_goal * (z[si + i] - goal[i]);
        }
    }

    fn objective_hessian(&self, _z: &[f64], h: &mut BandedSym) {
        let p = self.problem;
        let (m, inertia) = (p.body.mass(), p.body.inertia());
        for k in 0..self.n {
            let si = state_index(k);
            let fi = force_index(k);
            h.add(si + 3, si + 3, m * p.dt);
            h.add(si + 4, si + 4, m * p.dt);
            h.add(si + 5, si + 5, inertia * p.dt);
            for i in 0..3 {
                h.add(fi + i, fi + i, 2.0 * p.w_u * p.dt);
            }
        }
        let si = state_index(self.n);
        for i in 0..6 {
            h.add(si + i, si + i, 2.0 * p.w_goal);
        }
    }

    fn equalities(&self, z: &[f64], out: &mut Vec<Row>) {
        out.clear();
        let p = self.problem;
        let dt = p.dt;
        let (m, inertia) = (p.body.mass(), p.body.inertia());
        for k in 0..self.n {
            let si = state_index(k);
            let fi = force_index(k);
            let sn = state_index(k + 1);
            let s = BodyState::from_slice(&z[si..]);
            let w = Wrench::new(z[fi], z[fi + 1], z[fi + 2]);
            let next = euler_step(&s, &w, &p.body, dt).to_array();
            let r = |i: usize| z[sn + i] - next[i];
            out.push(Row::new(r(0), &[(sn, 1.0), (si, -1.0), (si + 3, -dt)]));
            out.push(Row::new(r(1), &[(sn + 1, 1.0), (si + 1, -1.0), (si + 4, -dt)]));
            out.push(Row::new(r(2), &[(sn + 2, 1.0), (si + 2, -1.0), (si + 5, -dt)]));
            out.push(Row::new(r(3), &[(sn + 3, 1.0), (si + 3, -1.0), (fi, -dt / m)]));
            out.push(Row::new(r(4), &[(sn + 4, 1.0), (si + 4, -1.0), (fi + 1, -dt / m)]));
            out.push(Row::new(r(5), &[(sn + 5, 1.0), (si + 5, -1.0), (fi + 2, -dt / inertia)]));
        }
    }

    fn inequalities(&self, z: &[f64], out: &mut Vec<Row>) {
        out.clear();
        let band = self.problem.blend_band;
        for (k, prims) in self.regions.iter().enumerate() {
            let si = state_index(k);
            let pos = [z[si], z[si + 1]];
            for prim in prims {
                let c = prim.smooth_constraint(pos, band);
                out.push(
                    Row::new(c.value, &[(si, c.grad[0]), (si + 1, c.grad[1])]).with_curvature([si, si + 1], c.hess),
                );
            }
        }
    }
}
