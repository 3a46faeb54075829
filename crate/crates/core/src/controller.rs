//! Tracking controller: PD on the knot reference plus feed-forward, rotation
//! into the body frame, bounded least-squares thruster allocation and PWM.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // inherent float methods shadow these when std is linked
use num_traits::Float;

use crate::angle::{rotate, rotate_inv, wrap_pi};
use crate::dynamics::{BodyState, ThrusterCommand, ThrusterLayout, Wrench, THRUSTER_COUNT};

/// Proportional and derivative gains for translation and attitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdGains {
    pub kp_pos: f64,
    pub kd_pos: f64,
    pub kp_att: f64,
    pub kd_att: f64,
}

impl Default for PdGains {
    fn default() -> Self {
        Self { kp_pos: 2.0, kd_pos: 8.0, kp_att: 0.4, kd_att: 1.2 }
    }
}

impl PdGains {
    pub const ZERO: Self = Self { kp_pos: 0.0, kd_pos: 0.0, kp_att: 0.0, kd_att: 0.0 };
}

/// `reference − actual`, attitude error wrapped to (−π, π].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrackingError {
    pub position: [f64; 2],
    pub theta: f64,
    pub velocity: [f64; 2],
    pub omega: f64,
}

impl TrackingError {
    pub fn position_norm(&self) -> f64 {
        self.position[0].hypot(self.position[1])
    }
}

pub fn tracking_error(reference: &BodyState, actual: &BodyState) -> TrackingError {
    TrackingError {
        position: [reference.x - actual.x, reference.y - actual.y],
        theta: wrap_pi(reference.theta - actual.theta),
        velocity: [reference.vx - actual.vx, reference.vy - actual.vy],
        omega: reference.omega - actual.omega,
    }
}

/// Inertial-frame PD wrench.
pub fn pd_wrench(e: &TrackingError, gains: &PdGains) -> Wrench {
    Wrench::new(
        gains.kp_pos * e.position[0] + gains.kd_pos * e.velocity[0],
        gains.kp_pos * e.position[1] + gains.kd_pos * e.velocity[1],
        gains.kp_att * e.theta + gains.kd_att * e.omega,
    )
}

/// Force rotated by `R(θ)ᵀ`; torque unchanged.
pub fn world_to_body(w: &Wrench, theta: f64) -> Wrench {
    let f = rotate_inv([w.fx, w.fy], theta);
    Wrench::new(f[0], f[1], w.tau)
}

/// Force rotated by `R(θ)`; torque unchanged.
pub fn body_to_world(w: &Wrench, theta: f64) -> Wrench {
    let f = rotate([w.fx, w.fy], theta);
    Wrench::new(f[0], f[1], w.tau)
}

/// Result of a box-constrained least-squares solve.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxLsq {
    pub x: DVector<f64>,
    /// `A x − b`.
    pub residual: DVector<f64>,
    /// Infinity norm of the projected gradient of `½‖Ax − b‖² + ½ε‖x‖²`.
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// Relative weight of the `½ε‖x‖²` tie-break, scaled by `tr(AᵀA)/n`.
pub const RIDGE: f64 = 1e-9;

/// Minimises `½‖Ax − b‖² + ½ε‖x‖²` over `lo ≤ x ≤ hi` by a primal active-set
/// method. The ridge term makes the problem strictly convex, so the minimiser
/// is unique and, among least-squares minimisers, the one of least norm up to
/// `O(ε)`.
pub fn box_least_squares(a: &DMatrix<f64>, b: &DVector<f64>, lo: &[f64], hi: &[f64]) -> BoxLsq {
    let n = a.ncols();
    debug_assert!(lo.len() == n && hi.len() == n);
    let ata = a.transpose() * a;
    let eps = RIDGE * (ata.trace() / n as f64).max(f64::MIN_POSITIVE);
    let h = &ata + DMatrix::identity(n, n) * eps;
    let c = a.transpose() * b;

    // Bound status: -1 at lower, +1 at upper, 0 free. Start at the lower bounds.
    let mut status = vec![-1i8; n];
    let mut x = DVector::from_iterator(n, lo.iter().copied());
    let mut iterations = 0;
    let grad = |x: &DVector<f64>| &h * x - &c;
    let tol = 1e-14 * (1.0 + c.amax());

    loop {
        iterations += 1;
        if iterations > 10 * n + 20 {
            break;
        }
        let free: Vec<usize> = (0..n).filter(|&i| status[i] == 0).collect();
        // Minimiser over the free set with the others held on their bounds.
        let mut target = x.clone();
        if !free.is_empty() {
            let hff = DMatrix::from_fn(free.len(), free.len(), |r, s| h[(free[r], free[s])]);
            let mut rhs = DVector::from_fn(free.len(), |r, _| c[free[r]]);
            for (r, &i) in free.iter().enumerate() {
                for j in (0..n).filter(|&j| status[j] != 0) {
                    rhs[r] -= h[(i, j)] * x[j];
                }
            }
            let sol = hff.cholesky().expect("ridge keeps the free block positive definite").solve(&rhs);
            for (r, &i) in free.iter().enumerate() {
                target[i] = sol[r];
            }
        }
        // Longest step towards the free-set minimiser that stays in the box.
        let mut alpha = 1.0;
        let mut blocking = None;
        for &i in &free {
            let d = target[i] - x[i];
            if d < 0.0 && target[i] < lo[i] {
                let s = (lo[i] - x[i]) / d;
                if s < alpha {
                    alpha = s;
                    blocking = Some((i, -1));
                }
            } else if d > 0.0 && target[i] > hi[i] {
                let s = (hi[i] - x[i]) / d;
                if s < alpha {
                    alpha = s;
                    blocking = Some((i, 1));
                }
            }
        }
        for &i in &free {
            x[i] += alpha * (target[i] - x[i]);
        }
        if let Some((i, side)) = blocking {
            x[i] = if side < 0 { lo[i] } else { hi[i] };
            status[i] = side;
            continue;
        }
        // Free-set optimal: release the bound with the most negative multiplier.
        let g = grad(&x);
        let mut worst = (None, -tol);
        for i in 0..n {
            let multiplier = match status[i] {
                -1 => g[i],
                1 => -g[i],
                _ => continue,
            };
            if multiplier < worst.1 {
                worst = (Some(i), multiplier);
            }
        }
        match worst.0 {
            Some(i) => status[i] = 0,
            None => break,
        }
    }

    let g = grad(&x);
    let kkt_residual = (0..n)
        .map(|i| {
            if x[i] <= lo[i] {
                g[i].min(0.0).abs()
            } else if x[i] >= hi[i] {
                g[i].max(0.0)
            } else {
                g[i].abs()
            }
        })
        .fold(0.0, f64::max);
    let residual = a * &x - b;
    BoxLsq { x, residual, kkt_residual, iterations }
}

/// Duty vector for a body-frame wrench request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allocation {
    pub duty: ThrusterCommand,
    /// Delivered minus requested body wrench.
    pub residual: Wrench,
    pub kkt_residual: f64,
}

/// Duty ratios in `[0, 1]` minimising `‖B·u·f_max − w_body‖²`.
pub fn allocate_duty(w_body: &Wrench, layout: &ThrusterLayout) -> Allocation {
    let b = layout.effectiveness();
    let a = DMatrix::from_fn(3, THRUSTER_COUNT, |r, c| b[(r, c)] * layout.f_max());
    let rhs = DVector::from_column_slice(&w_body.to_array());
    let sol = box_least_squares(&a, &rhs, &[0.0; THRUSTER_COUNT], &[1.0; THRUSTER_COUNT]);
    let mut u = [0.0; THRUSTER_COUNT];
    for (ui, xi) in u.iter_mut().zip(sol.x.iter()) {
        *ui = xi.clamp(0.0, 1.0);
    }
    Allocation {
        duty: ThrusterCommand(u),
        residual: Wrench::new(sol.residual[0], sol.residual[1], sol.residual[2]),
        kkt_residual: sol.kkt_residual,
    }
}

/// ON/OFF pattern for one control period: thruster `i` is ON for the first
/// `on_slots[i]` of `n_slots` equal sub-intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PwmSchedule {
    pub n_slots: u32,
    pub on_slots: [u32; THRUSTER_COUNT],
}

impl PwmSchedule {
    pub fn is_on(&self, thruster: usize, slot: u32) -> bool {
        slot < self.on_slots[thruster]
    }

    /// Binary command active during `slot`.
    pub fn slot_command(&self, slot: u32) -> ThrusterCommand {
        ThrusterCommand(core::array::from_fn(|i| if self.is_on(i, slot) { 1.0 } else { 0.0 }))
    }

    /// Delivered duty `k_i / n_slots`.
    pub fn delivered_duty(&self) -> ThrusterCommand {
        ThrusterCommand(core::array::from_fn(|i| self.on_slots[i] as f64 / self.n_slots as f64))
    }
}

/// `k_i = round(u_i · n_slots)`, leading-edge placement.
pub fn pwm_schedule(duty: &ThrusterCommand, n_slots: u32) -> PwmSchedule {
    assert!(n_slots > 0, "PWM needs at least one slot");
    let on_slots = core::array::from_fn(|i| {
        let k = (duty.0[i].clamp(0.0, 1.0) * n_slots as f64).round();
        (k as u32).min(n_slots)
    });
    PwmSchedule { n_slots, on_slots }
}

/// Everything computed in one control period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub error: TrackingError,
    pub wrench_world: Wrench,
    pub wrench_body: Wrench,
    pub allocation: Allocation,
    pub schedule: PwmSchedule,
}

/// Controller settings that are not gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSettings {
    pub gains: PdGains,
    pub n_slots: u32,
    /// Add the planned knot wrench to the PD wrench.
    pub feed_forward: bool,
}

impl Default for ControlSettings {
    fn default() -> Self {
        Self { gains: PdGains::default(), n_slots: 10, feed_forward: true }
    }
}

/// PD (plus optional feed-forward) in the inertial frame, rotated to the body
/// frame at the measured attitude, allocated and converted to PWM.
pub fn control_step(
    reference: &BodyState,
    reference_wrench: &Wrench,
    actual: &BodyState,
    layout: &ThrusterLayout,
    settings: &ControlSettings,
) -> ControlOutput {
    let error = tracking_error(reference, actual);
    let mut wrench_world = pd_wrench(&error, &settings.gains);
    if settings.feed_forward {
        wrench_world = wrench_world + *reference_wrench;
    }
    let wrench_body = world_to_body(&wrench_world, actual.theta);
    let allocation = allocate_duty(&wrench_body, layout);
    let schedule = pwm_schedule(&allocation.duty, settings.n_slots);
    ControlOutput { error, wrench_world, wrench_body, allocation, schedule }
}
