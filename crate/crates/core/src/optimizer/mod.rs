//! Trajectory optimizer: direct transcription solved by an augmented
//! Lagrangian method, wrapped in a search over rotation-phase-consistent
//! maneuver durations.

pub mod al;
mod transcription;

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};
#[allow(unused_imports)] // inherent float methods shadow these when std is linked
use num_traits::Float;
use thiserror::Error;

pub use al::{SolverSettings, SolverStats, Termination};
pub use transcription::{build_constraints, build_objective, ConstraintSet};

use crate::angle::{nearest_equivalent, wrap_pi, wrap_two_pi};
use crate::dynamics::{corotating_velocity, euler_step, BodyParams, BodyState, TargetState, ThrusterLayout, Wrench};
use crate::kos::{build_region, classify, signed_distance, KosConfig, KosState};
use transcription::{pack, unpack, Transcription};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptError {
    #[error("invalid problem: {0}")]
    InvalidProblem(&'static str),
    #[error("solver hit its iteration budget (violation {:.3e}, kkt {:.3e})", .stats.constraint_violation, .stats.kkt_residual)]
    NotConverged { stats: SolverStats, best: Box<PlannedTrajectory> },
    #[error("constraint violation stalled at {:.3e}", .stats.constraint_violation)]
    Infeasible { stats: SolverStats, best: Box<PlannedTrajectory> },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("no duration candidate produced a converged trajectory ({} tried)", .attempts.len())]
    AllCandidatesFailed { attempts: Vec<CandidateFailure> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateFailure {
    pub duration: f64,
    pub error: OptError,
}

/// The three terms of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObjectiveBreakdown {
    /// `w_goal ‖x_N − x_goal‖²`.
    pub goal: f64,
    /// `Σ E_kin,k Δt`.
    pub kinetic: f64,
    /// `w_u Σ ‖F_k‖² Δt`.
    pub effort: f64,
}

impl ObjectiveBreakdown {
    pub fn total(&self) -> f64 {
        self.goal + self.kinetic + self.effort
    }

    /// Name of the largest term.
    pub fn dominant(&self) -> &'static str {
        if self.goal >= self.kinetic && self.goal >= self.effort {
            "goal"
        } else if self.kinetic >= self.effort {
            "kinetic"
        } else {
            "effort"
        }
    }
}

/// One fully specified transcription instance.
#[derive(Debug, Clone, PartialEq)]
pub struct OptProblem {
    /// Number of intervals; there are `n + 1` knots.
    pub n: usize,
    pub dt: f64,
    pub x_init: BodyState,
    pub theta_finish: f64,
    pub x_goal: BodyState,
    pub w_goal: f64,
    pub w_u: f64,
    pub wrench_min: Wrench,
    pub wrench_max: Wrench,
    pub kos_cfg: KosConfig,
    pub target: TargetState,
    pub body: BodyParams,
    /// Keep-out state per knot (`n + 1` entries).
    pub kos_schedule: Vec<KosState>,
    /// Disabling drops the keep-out inequalities (used by the linear-quadratic cross-check).
    pub kos_enabled: bool,
    /// Width of the half-plane blending band for half-ellipses [m].
    pub blend_band: f64,
    pub settings: SolverSettings,
}

impl OptProblem {
    pub fn validate(&self) -> Result<(), OptError> {
        if self.n < 1 {
            return Err(OptError::InvalidProblem("knot count must be at least 2"));
        }
        if !(self.dt > 0.0) {
            return Err(OptError::InvalidProblem("dt must be positive"));
        }
        let lo = self.wrench_min.to_array();
        let hi = self.wrench_max.to_array();
        if (0..3).any(|i| !(lo[i] <= 0.0 && 0.0 <= hi[i])) {
            return Err(OptError::InvalidProblem("wrench bounds must bracket zero"));
        }
        if self.kos_schedule.len() != self.n + 1 {
            return Err(OptError::InvalidProblem("keep-out schedule length must be n + 1"));
        }
        if !self.x_init.is_finite() || !self.x_goal.is_finite() || !self.theta_finish.is_finite() {
            return Err(OptError::InvalidProblem("boundary states must be finite"));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.n as f64 * self.dt
    }

    pub fn knot_time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
}

/// Output of a solve: knots, wrenches and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<BodyState>,
    /// Inertial-frame wrench held over each interval.
    pub wrenches: Vec<Wrench>,
    pub objective_value: f64,
    pub objective_breakdown: ObjectiveBreakdown,
    pub kos_states: Vec<KosState>,
    pub converged: bool,
    pub solver_stats: SolverStats,
    pub dt: f64,
    pub x_goal: BodyState,
    pub theta_finish: f64,
    pub theta_approach: f64,
}

impl PlannedTrajectory {
    pub fn n_intervals(&self) -> usize {
        self.wrenches.len()
    }

    pub fn duration(&self) -> f64 {
        self.n_intervals() as f64 * self.dt
    }

    pub fn final_state(&self) -> &BodyState {
        self.states.last().expect("trajectory has at least one knot")
    }

    /// `‖(x_N, y_N) − (x_goal, y_goal)‖`.
    pub fn terminal_position_error(&self) -> f64 {
        let s = self.final_state();
        (s.x - self.x_goal.x).hypot(s.y - self.x_goal.y)
    }

    /// `|θ_N − θ_finish|`.
    pub fn terminal_attitude_residual(&self) -> f64 {
        (self.final_state().theta - self.theta_finish).abs()
    }

    pub fn max_defect(&self, body: &BodyParams) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.n_intervals() {
            let next = euler_step(&self.states[k], &self.wrenches[k], body, self.dt).to_array();
            for (a, b) in self.states[k + 1].to_array().iter().zip(next) {
                worst = worst.max((a - b).abs());
            }
        }
        worst
    }

    /// Exact keep-out distance at each knot under the scheduled states.
    pub fn kos_distances(&self, target: &TargetState, cfg: &KosConfig) -> Vec<f64> {
        self.states
            .iter()
            .zip(&self.kos_states)
            .zip(&self.times)
            .map(|((s, &state), &t)| {
                let region = build_region(state, target.theta_at(t), target.position, cfg);
                signed_distance(s.position(), &region)
            })
            .collect()
    }

    /// Keep-out distance at each knot with the state classified from the knot
    /// itself, as the closed-loop safety audit does.
    pub fn classified_kos_distances(&self, target: &TargetState, cfg: &KosConfig) -> Vec<f64> {
        self.states
            .iter()
            .zip(&self.times)
            .map(|(s, &t)| {
                let theta = target.theta_at(t);
                let region = build_region(classify(s, theta, target.position, cfg), theta, target.position, cfg);
                signed_distance(s.position(), &region)
            })
            .collect()
    }

    /// Time of the first State II knot, if any.
    pub fn kos_switch_time(&self) -> Option<f64> {
        self.kos_states.iter().position(|&s| s == KosState::StateII).map(|k| self.times[k])
    }

    /// Zero-order-hold sample of the reference: knot `k` and its wrench;
    /// `None` past the horizon.
    pub fn reference(&self, k: usize) -> Option<(BodyState, Wrench)> {
        (k < self.n_intervals()).then(|| (self.states[k], self.wrenches[k]))
    }

    /// Linear resampling onto `n` intervals over the same normalised time.
    pub fn resampled(&self, n: usize) -> (Vec<BodyState>, Vec<Wrench>) {
        let old = self.n_intervals();
        let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
        let states = (0..=n)
            .map(|j| {
                let pos = j as f64 / n as f64 * old as f64;
                let i = (pos.floor() as usize).min(old.saturating_sub(1));
                let t = pos - i as f64;
                let (a, b) = (self.states[i].to_array(), self.states[(i + 1).min(old)].to_array());
                BodyState::from_array(core::array::from_fn(|c| lerp(a[c], b[c], t)))
            })
            .collect();
        let wrenches = (0..n)
            .map(|j| {
                let pos = (j as f64 + 0.5) / n as f64 * old as f64;
                let i = (pos.floor() as usize).min(old.saturating_sub(1));
                self.wrenches[i]
            })
            .collect();
        (states, wrenches)
    }
}

/// Everything needed to instantiate [`OptProblem`]s for a given approach angle.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanSetup {
    pub dt: f64,
    pub x_init: BodyState,
    pub w_goal: f64,
    pub w_u: f64,
    pub wrench_min: Wrench,
    pub wrench_max: Wrench,
    pub kos_cfg: KosConfig,
    pub target: TargetState,
    pub body: BodyParams,
    /// Extra standoff beyond face contact for the goal pose [m].
    pub capture_offset: f64,
    /// Shortest maneuver duration considered [s].
    pub min_duration: f64,
    /// Durations used when the target does not spin [s].
    pub static_ladder: Vec<f64>,
    pub blend_band: f64,
    pub settings: SolverSettings,
}

impl PlanSetup {
    /// Default weights, step and solver settings for the given scenario; the
    /// wrench box is `fraction` of what the layout can deliver on each axis.
    pub fn new(
        body: BodyParams,
        layout: &ThrusterLayout,
        target: TargetState,
        x_init: BodyState,
        fraction: f64,
    ) -> Self {
        let (wrench_min, wrench_max) = Self::layout_bounds(layout, fraction);
        Self {
            dt: 0.1,
            x_init,
            w_goal: 100.0,
            w_u: 10.0,
            wrench_min,
            wrench_max,
            kos_cfg: KosConfig::new(body.side_length(), target.side_length),
            target,
            body,
            capture_offset: 0.05,
            min_duration: 20.0,
            static_ladder: vec![20.0, 40.0, 60.0, 80.0],
            blend_band: 0.02,
            settings: SolverSettings::default(),
        }
    }

    /// Per-axis box: force `fraction·f_max`, torque `fraction·2·arm·f_max`
    /// with `arm` the smallest thruster lever arm.
    pub fn layout_bounds(layout: &ThrusterLayout, fraction: f64) -> (Wrench, Wrench) {
        let arm =
            (0..crate::dynamics::THRUSTER_COUNT).map(|i| layout.torque_arm(i).abs()).fold(f64::INFINITY, f64::min);
        Self::symmetric_bounds(fraction * layout.f_max(), fraction * 2.0 * arm * layout.f_max())
    }

    /// Inertial wrench box derived from the thruster layout: each force axis
    /// limited to `fraction·f_max` and torque to `fraction·2·arm·f_max`.
    pub fn symmetric_bounds(force: f64, torque: f64) -> (Wrench, Wrench) {
        (Wrench::new(-force, -force, -torque), Wrench::new(force, force, torque))
    }

    /// Distance between centres at the goal pose.
    pub fn dock_distance(&self) -> f64 {
        0.5 * (self.kos_cfg.l_s + self.kos_cfg.l_t) + self.capture_offset
    }

    /// Chaser attitude at arrival: the approach angle on the branch nearest the initial attitude.
    pub fn theta_finish(&self, theta_approach: f64) -> f64 {
        nearest_equivalent(theta_approach, self.x_init.theta)
    }

    /// Goal pose on the docking normal, co-rotating with the target.
    pub fn goal_state(&self, theta_approach: f64) -> BodyState {
        let r = self.dock_distance();
        let c = self.target.position;
        let p = [c[0] + r * theta_approach.cos(), c[1] + r * theta_approach.sin()];
        let v = corotating_velocity(&self.target, p);
        BodyState::new(p[0], p[1], self.theta_finish(theta_approach), v[0], v[1], self.target.omega)
    }

    pub fn problem_for(&self, duration: f64, theta_approach: f64) -> OptProblem {
        let n = ((duration / self.dt).round() as usize).max(1);
        OptProblem {
            n,
            dt: self.dt,
            x_init: self.x_init,
            theta_finish: self.theta_finish(theta_approach),
            x_goal: self.goal_state(theta_approach),
            w_goal: self.w_goal,
            w_u: self.w_u,
            wrench_min: self.wrench_min,
            wrench_max: self.wrench_max,
            kos_cfg: self.kos_cfg,
            target: self.target,
            body: self.body,
            kos_schedule: vec![KosState::StateI; n + 1],
            kos_enabled: true,
            blend_band: self.blend_band,
            settings: self.settings,
        }
    }
}

/// Candidate maneuver duration and its phase index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DurationCandidate {
    pub t_total: f64,
    pub n_revolutions: u32,
}

/// Durations at which the target attitude equals `theta_approach` (mod 2π),
/// in ascending order, starting from the first one not shorter than
/// `min_duration`. A non-spinning target gets `static_ladder` instead.
pub fn duration_candidates(
    target: &TargetState,
    theta_approach: f64,
    max_candidates: usize,
    min_duration: f64,
    static_ladder: &[f64],
) -> Vec<DurationCandidate> {
    if target.omega == 0.0 {
        return static_ladder
            .iter()
            .enumerate()
            .map(|(i, &t)| DurationCandidate { t_total: t, n_revolutions: i as u32 })
            .collect();
    }
    let rate = target.omega.abs();
    // phase still to travel, measured in the direction of rotation
    let phase = wrap_two_pi(target.omega.signum() * (theta_approach - target.theta0));
    let mut out = Vec::with_capacity(max_candidates);
    let mut n = 0u32;
    while out.len() < max_candidates {
        let t = (phase + TAU * n as f64) / rate;
        if t >= min_duration && t > 0.0 {
            out.push(DurationCandidate { t_total: t, n_revolutions: n });
        }
        n += 1;
    }
    out
}

/// Default initial guess: position interpolated in polar coordinates about
/// the target (so the guess goes around rather than through it), attitude
/// interpolated linearly, velocities by finite differences, zero wrenches.
pub fn interpolation_guess(problem: &OptProblem) -> (Vec<BodyState>, Vec<Wrench>) {
    let n = problem.n;
    let c = problem.target.position;
    let rel = |p: [f64; 2]| [p[0] - c[0], p[1] - c[1]];
    let a = rel(problem.x_init.position());
    let b = rel(problem.x_goal.position());
    let (r0, r1) = (a[0].hypot(a[1]), b[0].hypot(b[1]));
    let psi0 = a[1].atan2(a[0]);
    let mut sweep = wrap_pi(b[1].atan2(b[0]) - psi0);
    if (sweep.abs() - PI).abs() < 1e-9 {
        // directly opposite: go round in the target's sense of rotation
        sweep = if problem.target.omega < 0.0 { -PI } else { PI };
    }
    let th0 = problem.x_init.theta;
    let th1 = problem.theta_finish;
    let pos: Vec<[f64; 3]> = (0..=n)
        .map(|k| {
            let s = k as f64 / n as f64;
            let r = r0 + (r1 - r0) * s;
            let psi = psi0 + sweep * s;
            [c[0] + r * psi.cos(), c[1] + r * psi.sin(), th0 + (th1 - th0) * s]
        })
        .collect();
    let dt = problem.dt;
    let mut states: Vec<BodyState> = (0..=n)
        .map(|k| {
            let j = k.min(n - 1);
            let v: [f64; 3] = core::array::from_fn(|i| (pos[j + 1][i] - pos[j][i]) / dt);
            BodyState::new(pos[k][0], pos[k][1], pos[k][2], v[0], v[1], v[2])
        })
        .collect();
    states[0] = problem.x_init;
    (states, vec![Wrench::ZERO; n])
}

/// Gradient of the objective with respect to the stage-wise decision vector
/// `[x₀, F₀, x₁, F₁, …, x_N]`.
pub fn objective_gradient(states: &[BodyState], wrenches: &[Wrench], problem: &OptProblem) -> Vec<f64> {
    use al::BandedNlp;
    let z = pack(states, wrenches);
    let nlp = Transcription::new(problem);
    let mut g = vec![0.0; z.len()];
    nlp.objective_gradient(&z, &mut g);
    g
}

/// Solves one transcription instance. Without a guess the polar
/// interpolation guess is used; a guess of a different length is resampled.
pub fn solve(problem: &OptProblem, initial_guess: Option<&PlannedTrajectory>) -> Result<PlannedTrajectory, OptError> {
    problem.validate()?;
    let (mut states, wrenches) = match initial_guess {
        Some(g) if g.n_intervals() == problem.n => (g.states.clone(), g.wrenches.clone()),
        Some(g) => g.resampled(problem.n),
        None => interpolation_guess(problem),
    };
    states[0] = problem.x_init;
    let z0 = pack(&states, &wrenches);
    let nlp = Transcription::new(problem);
    let out = al::solve(&nlp, &z0, &problem.settings);
    let (states, wrenches) = unpack(&out.z);
    let breakdown = build_objective(&states, &wrenches, problem);
    let traj = PlannedTrajectory {
        times: (0..=problem.n).map(|k| problem.knot_time(k)).collect(),
        states,
        wrenches,
        objective_value: breakdown.total(),
        objective_breakdown: breakdown,
        kos_states: problem.kos_schedule.clone(),
        converged: out.termination == Termination::Converged,
        solver_stats: out.stats,
        dt: problem.dt,
        x_goal: problem.x_goal,
        theta_finish: problem.theta_finish,
        theta_approach: problem.theta_finish,
    };
    match out.termination {
        Termination::Converged => Ok(traj),
        Termination::IterationLimit => Err(OptError::NotConverged { stats: out.stats, best: Box::new(traj) }),
        Termination::Infeasible => Err(OptError::Infeasible { stats: out.stats, best: Box::new(traj) }),
    }
}

/// Index of the first knot whose state satisfies the State II conditions.
pub fn first_state_ii_knot(states: &[BodyState], problem: &OptProblem) -> Option<usize> {
    states.iter().enumerate().position(|(k, s)| {
        classify(s, problem.target.theta_at(problem.knot_time(k)), problem.target.position, &problem.kos_cfg)
            == KosState::StateII
    })
}

/// Latch moves allowed after pass 2 before the result is returned as is.
const MAX_LATCH_REPAIRS: usize = 4;

/// Penetration below which a latched knot counts as inconsistent.
const LATCH_TOLERANCE: f64 = 1e-4;

/// Two-pass solve for one duration: pass 1 keeps State I everywhere, pass 2
/// latches State II from the first pass-1 knot meeting the final-approach
/// conditions to the end of the horizon.
///
/// The shrunken State II region can let pass 2 swing round the target inside
/// the State I circle while outside the approach cone. If any latched knot
/// penetrates the region its own state classifies into, the latch moves past
/// the last such knot and the candidate is re-solved. The latch only moves
/// later, so the repair terminates.
pub fn solve_candidate(
    setup: &PlanSetup,
    theta_approach: f64,
    duration: f64,
    guess: Option<&PlannedTrajectory>,
) -> Result<PlannedTrajectory, OptError> {
    let mut problem = setup.problem_for(duration, theta_approach);
    let first = match solve(&problem, guess) {
        Ok(t) => t,
        Err(OptError::NotConverged { best, .. }) => *best,
        Err(e) => return Err(e),
    };
    let mut result = match first_state_ii_knot(&first.states, &problem) {
        Some(k) => {
            latch_from(&mut problem.kos_schedule, k);
            let mut latched = solve(&problem, Some(&first))?;
            for _ in 0..MAX_LATCH_REPAIRS {
                let g = latched.classified_kos_distances(&problem.target, &problem.kos_cfg);
                let Some(last) = (k..=problem.n).rev().find(|&j| g[j] < -LATCH_TOLERANCE) else { break };
                if last == problem.n {
                    break;
                }
                latch_from(&mut problem.kos_schedule, last + 1);
                latched = solve(&problem, Some(&latched))?;
            }
            latched
        }
        None if first.converged => first,
        None => {
            return Err(OptError::NotConverged { stats: first.solver_stats, best: Box::new(first) });
        }
    };
    result.theta_approach = theta_approach;
    Ok(result)
}

fn latch_from(schedule: &mut [KosState], k: usize) {
    for (j, label) in schedule.iter_mut().enumerate() {
        *label = if j < k { KosState::StateI } else { KosState::StateII };
    }
}

/// How successive duration candidates are initialised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    /// Each candidate starts from the previous candidate's solution.
    WarmStart,
    /// Each candidate starts from the interpolation guess.
    ColdStart,
}

/// Picks the converged candidate with the lowest objective (shortest wins ties).
pub fn select_best(results: Vec<(f64, Result<PlannedTrajectory, OptError>)>) -> Result<PlannedTrajectory, PlanError> {
    let mut best: Option<PlannedTrajectory> = None;
    let mut attempts = Vec::new();
    for (duration, r) in results {
        match r {
            Ok(t) => {
                let better = match &best {
                    None => true,
                    Some(b) => {
                        t.objective_value < b.objective_value
                            || (t.objective_value == b.objective_value && t.duration() < b.duration())
                    }
                };
                if better {
                    best = Some(t);
                }
            }
            Err(error) => attempts.push(CandidateFailure { duration, error }),
        }
    }
    best.ok_or(PlanError::AllCandidatesFailed { attempts })
}

/// Solves every duration candidate in ascending order and returns the best.
pub fn plan(
    theta_approach: f64,
    setup: &PlanSetup,
    max_candidates: usize,
    mode: SearchMode,
) -> Result<PlannedTrajectory, PlanError> {
    let candidates =
        duration_candidates(&setup.target, theta_approach, max_candidates, setup.min_duration, &setup.static_ladder);
    let mut results = Vec::with_capacity(candidates.len());
    let mut previous: Option<PlannedTrajectory> = None;
    for c in candidates {
        let guess = match mode {
            SearchMode::WarmStart => previous.as_ref(),
            SearchMode::ColdStart => None,
        };
        let r = solve_candidate(setup, theta_approach, c.t_total, guess);
        if let Ok(t) = &r {
            previous = Some(t.clone());
        }
        results.push((c.t_total, r));
    }
    select_best(results)
}
