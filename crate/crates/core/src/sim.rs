//! Closed-loop simulator: the planned trajectory is tracked with PWM thruster
//! firings on a forward-Euler plant that may differ from the planning model.

use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods shadow these when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::angle::{rotate, rotate_inv, wrap_pi};
use crate::controller::{body_to_world, control_step, ControlSettings, PdGains, TrackingError};
use crate::dynamics::{
    euler_step, total_wrench, BodyParams, BodyState, ModelError, TargetState, ThrusterCommand, ThrusterLayout, Wrench,
    THRUSTER_COUNT,
};
use crate::kos::{build_region, classify, signed_distance, KosConfig};
use crate::optimizer::PlannedTrajectory;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("timing is misaligned: {0}")]
    ConfigMisaligned(&'static str),
    #[error("plan has no intervals")]
    EmptyPlan,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub physics_dt: f64,
    pub control_hz: f64,
    /// Station-keeping time after the plan ends before metrics are taken [s].
    pub tail: f64,
    /// Planning model; the controller allocates with `layout`.
    pub body: BodyParams,
    pub layout: ThrusterLayout,
    /// Keep-out geometry for the safety audit.
    pub kos: KosConfig,
    pub gains: PdGains,
    pub n_slots: u32,
    pub feed_forward: bool,
    /// Apply binary PWM slots; otherwise the continuous duty is applied directly.
    pub pwm: bool,
    pub thrusters_enabled: bool,
    /// Half-width of the uniform multiplicative plant perturbation on m, I and f_max.
    pub mismatch: f64,
    /// Bound on the uniform random disturbance acceleration per axis [m/s², rad/s²],
    /// redrawn every control period.
    pub disturbance: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(body: BodyParams, layout: ThrusterLayout, kos: KosConfig) -> Self {
        Self {
            physics_dt: 0.01,
            control_hz: 10.0,
            tail: 5.0,
            body,
            layout,
            kos,
            gains: PdGains::default(),
            n_slots: 10,
            feed_forward: true,
            pwm: true,
            thrusters_enabled: true,
            mismatch: 0.05,
            disturbance: 0.0,
            seed: 0,
        }
    }

    pub fn control_period(&self) -> f64 {
        1.0 / self.control_hz
    }

    /// Physics steps per control period, if the ratio is integral.
    pub fn steps_per_period(&self) -> Result<u32, SimError> {
        if !(self.physics_dt > 0.0) || !(self.control_hz > 0.0) {
            return Err(SimError::ConfigMisaligned("physics_dt and control_hz must be positive"));
        }
        let ratio = self.control_period() / self.physics_dt;
        let steps = ratio.round();
        if steps < 1.0 || (ratio - steps).abs() > 1e-9 * ratio {
            return Err(SimError::ConfigMisaligned("control period is not a whole number of physics steps"));
        }
        let steps = steps as u32;
        if self.n_slots == 0 || !steps.is_multiple_of(self.n_slots) {
            return Err(SimError::ConfigMisaligned("PWM slot count must divide the physics steps per period"));
        }
        Ok(steps)
    }
}

/// Plant parameters actually simulated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plant {
    pub body: BodyParams,
    pub layout: ThrusterLayout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Physics-rate timestamps, starting at 0.
    pub times: Vec<f64>,
    pub states: Vec<BodyState>,
    /// Binary thruster state per PWM slot.
    pub firing_times: Vec<f64>,
    pub firings: Vec<[bool; THRUSTER_COUNT]>,
    /// Error against the held reference at the start of each control period.
    pub control_times: Vec<f64>,
    pub tracking_errors: Vec<TrackingError>,
    /// Target-frame relative velocity at each physics step.
    pub relative_velocity: Vec<[f64; 2]>,
    pub plant: Plant,
    pub terminal_position_error: f64,
    pub terminal_attitude_error: f64,
    pub terminal_relative_velocity: f64,
    pub min_kos_distance: f64,
}

impl SimResult {
    /// RMS of the position tracking error over control periods.
    pub fn tracking_rms(&self) -> f64 {
        if self.tracking_errors.is_empty() {
            return 0.0;
        }
        let sum: f64 = self.tracking_errors.iter().map(|e| e.position_norm().powi(2)).sum();
        (sum / self.tracking_errors.len() as f64).sqrt()
    }

    pub fn final_state(&self) -> &BodyState {
        self.states.last().expect("history holds the initial state")
    }
}

/// Chaser velocity seen from a frame rotating with the target, expressed in
/// target axes: `R(θ_t)ᵀ (v − ω_t × (p − p_t))`.
pub fn relative_velocity_target_frame(
    chaser: &BodyState,
    target_theta: f64,
    target_omega: f64,
    target_pos: [f64; 2],
) -> [f64; 2] {
    let r = [chaser.x - target_pos[0], chaser.y - target_pos[1]];
    let carried = [-target_omega * r[1], target_omega * r[0]];
    rotate_inv([chaser.vx - carried[0], chaser.vy - carried[1]], target_theta)
}

/// Smallest exact keep-out distance along a history, classifying the region
/// from each state.
pub fn audit_safety(times: &[f64], states: &[BodyState], target: &TargetState, cfg: &KosConfig) -> f64 {
    times
        .iter()
        .zip(states)
        .map(|(&t, s)| {
            let theta = target.theta_at(t);
            let state = classify(s, theta, target.position, cfg);
            signed_distance(s.position(), &build_region(state, theta, target.position, cfg))
        })
        .fold(f64::INFINITY, f64::min)
}

fn perturbed_plant(cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Result<Plant, SimError> {
    let mut factor = || if cfg.mismatch > 0.0 { 1.0 + rng.random_range(-cfg.mismatch..=cfg.mismatch) } else { 1.0 };
    let (fm, fi, ff) = (factor(), factor(), factor());
    Ok(Plant { body: cfg.body.scaled(fm, fi)?, layout: cfg.layout.with_f_max(cfg.layout.f_max() * ff)? })
}

/// Reference `elapsed` seconds past the horizon: `held` carried rigidly with
/// the target, so a berth stays on the docking axis. The feed-forward is the
/// centripetal force of that circular motion.
pub fn station_keeping(held: &BodyState, target: &TargetState, body: &BodyParams, elapsed: f64) -> (BodyState, Wrench) {
    let (c, w) = (target.position, target.omega);
    let r = rotate([held.x - c[0], held.y - c[1]], w * elapsed);
    let state = BodyState::new(c[0] + r[0], c[1] + r[1], held.theta + w * elapsed, -w * r[1], w * r[0], w);
    let m = body.mass();
    (state, Wrench::new(-m * w * w * r[0], -m * w * w * r[1], 0.0))
}

/// Tracks `plan` from its first knot, then station-keeps on its last knot,
/// co-rotating with the target, for `cfg.tail`. Terminal errors are measured
/// against the goal carried along the same way. Bit-identical for identical
/// inputs.
pub fn run(plan: &PlannedTrajectory, cfg: &SimConfig, target: &TargetState) -> Result<SimResult, SimError> {
    let steps = cfg.steps_per_period()?;
    if plan.n_intervals() == 0 {
        return Err(SimError::EmptyPlan);
    }
    if (plan.dt - cfg.control_period()).abs() > 1e-9 {
        return Err(SimError::ConfigMisaligned("plan knot spacing differs from the control period"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let plant = perturbed_plant(cfg, &mut rng)?;
    let settings = ControlSettings { gains: cfg.gains, n_slots: cfg.n_slots, feed_forward: cfg.feed_forward };
    let steps_per_slot = steps / cfg.n_slots;
    let periods = plan.n_intervals() + (cfg.tail / cfg.control_period()).round() as usize;
    let total_steps = periods * steps as usize;

    let mut state = plan.states[0];
    let mut out = SimResult {
        times: Vec::with_capacity(total_steps + 1),
        states: Vec::with_capacity(total_steps + 1),
        firing_times: Vec::with_capacity(periods * cfg.n_slots as usize),
        firings: Vec::with_capacity(periods * cfg.n_slots as usize),
        control_times: Vec::with_capacity(periods),
        tracking_errors: Vec::with_capacity(periods),
        relative_velocity: Vec::with_capacity(total_steps + 1),
        plant,
        terminal_position_error: 0.0,
        terminal_attitude_error: 0.0,
        terminal_relative_velocity: 0.0,
        min_kos_distance: f64::INFINITY,
    };
    let time = |i: usize| i as f64 * cfg.physics_dt;
    let record = |out: &mut SimResult, i: usize, s: &BodyState| {
        let t = time(i);
        out.times.push(t);
        out.states.push(*s);
        out.relative_velocity.push(relative_velocity_target_frame(
            s,
            target.theta_at(t),
            target.omega,
            target.position,
        ));
    };
    record(&mut out, 0, &state);

    for k in 0..periods {
        let (reference, feed) = plan.reference(k).unwrap_or_else(|| {
            let elapsed = (k - plan.n_intervals()) as f64 * cfg.control_period();
            station_keeping(plan.final_state(), target, &cfg.body, elapsed)
        });
        let ctrl = control_step(&reference, &feed, &state, &cfg.layout, &settings);
        out.control_times.push(time(k * steps as usize));
        out.tracking_errors.push(ctrl.error);
        let disturbance = if cfg.disturbance > 0.0 {
            let mut draw = || rng.random_range(-cfg.disturbance..=cfg.disturbance);
            let (ax, ay, alpha) = (draw(), draw(), draw());
            Wrench::new(plant.body.mass() * ax, plant.body.mass() * ay, plant.body.inertia() * alpha)
        } else {
            Wrench::ZERO
        };
        for slot in 0..cfg.n_slots {
            let command = if !cfg.thrusters_enabled {
                ThrusterCommand::OFF
            } else if cfg.pwm {
                ctrl.schedule.slot_command(slot)
            } else {
                ctrl.allocation.duty
            };
            out.firing_times.push(time(k * steps as usize + (slot * steps_per_slot) as usize));
            out.firings.push(core::array::from_fn(|i| command.0[i] > 0.5));
            let body_wrench = total_wrench(&command, &plant.layout);
            for sub in 0..steps_per_slot {
                let world = body_to_world(&body_wrench, state.theta) + disturbance;
                state = euler_step(&state, &world, &plant.body, cfg.physics_dt);
                let i = k * steps as usize + (slot * steps_per_slot + sub + 1) as usize;
                record(&mut out, i, &state);
            }
        }
    }

    let end = *out.final_state();
    let t_end = *out.times.last().expect("non-empty");
    let goal = station_keeping(&plan.x_goal, target, &cfg.body, t_end - plan.duration()).0;
    out.terminal_position_error = (end.x - goal.x).hypot(end.y - goal.y);
    out.terminal_attitude_error = wrap_pi(goal.theta - end.theta).abs();
    let v = relative_velocity_target_frame(&end, target.theta_at(t_end), target.omega, target.position);
    out.terminal_relative_velocity = v[0].hypot(v[1]);
    out.min_kos_distance = audit_safety(&out.times, &out.states, target, &cfg.kos);
    Ok(out)
}
