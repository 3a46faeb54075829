//! Planar rigid-body model of the chaser and its eight ON/OFF thrusters.
//!
//! The same forward Euler map ([`euler_step`]) is used by the optimizer's
//! defect constraints and by the simulator's fine-step propagation.

use nalgebra::{Matrix3, SMatrix, Vector3};
#[allow(unused_imports)] // inherent float methods shadow these when std is linked
use num_traits::Float;
use thiserror::Error;

/// Number of thrusters on the chaser.
pub const THRUSTER_COUNT: usize = 8;

/// Control-effectiveness matrix: rows `fx, fy, tau` per unit duty and unit
/// thrust magnitude, one column per thruster.
pub type Effectiveness = SMatrix<f64, 3, THRUSTER_COUNT>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{name} must be finite and strictly positive (got {value})")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be finite")]
    NotFinite { name: &'static str },
    #[error("thruster {index} direction is not a unit vector (norm {norm})")]
    NotUnit { index: usize, norm: f64 },
    #[error("thruster layout effectiveness matrix has rank {rank}, expected 3")]
    RankDeficient { rank: usize },
    #[error("thruster layout cannot produce every small wrench around zero")]
    NotPositivelySpanning,
    #[error("thruster duty {index} = {value} outside [0, 1]")]
    DutyOutOfRange { index: usize, value: f64 },
}

/// Chaser state `[x, y, theta, vx, vy, omega]`; `theta` is kept unwrapped.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

impl BodyState {
    pub const fn new(x: f64, y: f64, theta: f64, vx: f64, vy: f64, omega: f64) -> Self {
        Self { x, y, theta, vx, vy, omega }
    }

    pub const fn at_rest(x: f64, y: f64, theta: f64) -> Self {
        Self::new(x, y, theta, 0.0, 0.0, 0.0)
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.x, self.y, self.theta, self.vx, self.vy, self.omega]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4], a[5])
    }

    pub fn from_slice(a: &[f64]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4], a[5])
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn velocity(&self) -> [f64; 2] {
        [self.vx, self.vy]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Mass properties and size of the (square) chaser.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyParams {
    mass: f64,
    inertia: f64,
    side_length: f64,
}

impl BodyParams {
    pub fn new(mass: f64, inertia: f64, side_length: f64) -> Result<Self, ModelError> {
        positive("mass", mass)?;
        positive("inertia", inertia)?;
        positive("side_length", side_length)?;
        Ok(Self { mass, inertia, side_length })
    }

    /// Uniform square plate: `I = m·l²/6`.
    pub fn square_plate(mass: f64, side_length: f64) -> Result<Self, ModelError> {
        Self::new(mass, mass * side_length * side_length / 6.0, side_length)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    pub fn side_length(&self) -> f64 {
        self.side_length
    }

    /// Copy with mass, inertia scaled (used for model-mismatch runs).
    pub fn scaled(&self, mass_factor: f64, inertia_factor: f64) -> Result<Self, ModelError> {
        Self::new(self.mass * mass_factor, self.inertia * inertia_factor, self.side_length)
    }
}

impl Default for BodyParams {
    fn default() -> Self {
        Self::square_plate(10.0, 0.3).expect("default body parameters are valid")
    }
}

/// Planar force pair plus torque about z.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench {
    pub fx: f64,
    pub fy: f64,
    pub tau: f64,
}

impl Wrench {
    pub const ZERO: Wrench = Wrench { fx: 0.0, fy: 0.0, tau: 0.0 };

    pub const fn new(fx: f64, fy: f64, tau: f64) -> Self {
        Self { fx, fy, tau }
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.fx, self.fy, self.tau]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn norm_squared(&self) -> f64 {
        self.fx * self.fx + self.fy * self.fy + self.tau * self.tau
    }
}

impl core::ops::Add for Wrench {
    type Output = Wrench;
    fn add(self, o: Wrench) -> Wrench {
        Wrench::new(self.fx + o.fx, self.fy + o.fy, self.tau + o.tau)
    }
}

impl core::ops::Sub for Wrench {
    type Output = Wrench;
    fn sub(self, o: Wrench) -> Wrench {
        Wrench::new(self.fx - o.fx, self.fy - o.fy, self.tau - o.tau)
    }
}

impl core::ops::Mul<f64> for Wrench {
    type Output = Wrench;
    fn mul(self, k: f64) -> Wrench {
        Wrench::new(self.fx * k, self.fy * k, self.tau * k)
    }
}

/// Duty ratios (continuous stage) or ON/OFF flags (PWM stage), one per thruster.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ThrusterCommand(pub [f64; THRUSTER_COUNT]);

impl ThrusterCommand {
    pub const OFF: ThrusterCommand = ThrusterCommand([0.0; THRUSTER_COUNT]);

    pub fn new(u: [f64; THRUSTER_COUNT]) -> Result<Self, ModelError> {
        for (index, &value) in u.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(ModelError::DutyOutOfRange { index, value });
            }
        }
        Ok(Self(u))
    }
}

/// Mounting points, thrust directions and thrust magnitude of the eight
/// body-fixed thrusters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThrusterLayout {
    positions: [[f64; 2]; THRUSTER_COUNT],
    directions: [[f64; 2]; THRUSTER_COUNT],
    f_max: f64,
}

impl ThrusterLayout {
    pub fn new(
        positions: [[f64; 2]; THRUSTER_COUNT],
        directions: [[f64; 2]; THRUSTER_COUNT],
        f_max: f64,
    ) -> Result<Self, ModelError> {
        positive("f_max", f_max)?;
        for (index, d) in directions.iter().enumerate() {
            let norm = (d[0] * d[0] + d[1] * d[1]).sqrt();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(ModelError::NotUnit { index, norm });
            }
        }
        let layout = Self { positions, directions, f_max };
        let rank = layout.effectiveness().rank(1e-9);
        if rank != 3 {
            return Err(ModelError::RankDeficient { rank });
        }
        if !layout.positively_spans() {
            return Err(ModelError::NotPositivelySpanning);
        }
        Ok(layout)
    }

    /// Two thrusters per face of a square of side `side`, offset
    /// `±offset_fraction·side` from the face centre, each pushing the body
    /// opposite its face's outward normal.
    ///
    /// Order: +x face (upper, lower), −x face (upper, lower),
    /// +y face (right, left), −y face (right, left).
    pub fn square(side: f64, offset_fraction: f64, f_max: f64) -> Result<Self, ModelError> {
        positive("side_length", side)?;
        let h = 0.5 * side;
        let a = offset_fraction * side;
        let positions = [[h, a], [h, -a], [-h, a], [-h, -a], [a, h], [-a, h], [a, -h], [-a, -h]];
        let directions =
            [[-1.0, 0.0], [-1.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, -1.0], [0.0, -1.0], [0.0, 1.0], [0.0, 1.0]];
        Self::new(positions, directions, f_max)
    }

    pub fn positions(&self) -> &[[f64; 2]; THRUSTER_COUNT] {
        &self.positions
    }

    pub fn directions(&self) -> &[[f64; 2]; THRUSTER_COUNT] {
        &self.directions
    }

    pub fn f_max(&self) -> f64 {
        self.f_max
    }

    pub fn with_f_max(&self, f_max: f64) -> Result<Self, ModelError> {
        positive("f_max", f_max)?;
        Ok(Self { f_max, ..*self })
    }

    /// Torque arm of thruster `i` per unit thrust: `r_i × d_i`.
    pub fn torque_arm(&self, i: usize) -> f64 {
        cross(self.positions[i], self.directions[i])
    }

    /// The matrix `B` with columns `(d_x, d_y, r × d)`.
    pub fn effectiveness(&self) -> Effectiveness {
        Effectiveness::from_fn(|row, col| match row {
            0 => self.directions[col][0],
            1 => self.directions[col][1],
            _ => self.torque_arm(col),
        })
    }

    // The columns positively span R³ iff no nonzero h has hᵀb_i ≤ 0 for all i.
    // With rank 3 that cone is pointed, so if it is nontrivial it has an
    // extreme ray orthogonal to two independent columns: h = ±(b_i × b_j).
    fn positively_spans(&self) -> bool {
        let b = self.effectiveness();
        let cols: [Vector3<f64>; THRUSTER_COUNT] = core::array::from_fn(|i| b.column(i).into_owned());
        for i in 0..THRUSTER_COUNT {
            for j in (i + 1)..THRUSTER_COUNT {
                let n = cols[i].cross(&cols[j]);
                if n.norm() < 1e-12 {
                    continue;
                }
                let n = n.normalize();
                for h in [n, -n] {
                    if cols.iter().all(|c| h.dot(c) <= 1e-12) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Scalar 2D cross product `a.x·b.y − a.y·b.x`.
#[inline]
pub fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Body-frame wrench produced by a thruster command.
pub fn total_wrench(cmd: &ThrusterCommand, layout: &ThrusterLayout) -> Wrench {
    let mut w = Wrench::ZERO;
    for i in 0..THRUSTER_COUNT {
        let u = cmd.0[i];
        if u == 0.0 {
            continue;
        }
        let f = [u * layout.f_max * layout.directions[i][0], u * layout.f_max * layout.directions[i][1]];
        w.fx += f[0];
        w.fy += f[1];
        w.tau += cross(layout.positions[i], f);
    }
    w
}

/// Time derivative of the state under an inertial-frame wrench.
pub fn state_derivative(s: &BodyState, w: &Wrench, p: &BodyParams) -> [f64; 6] {
    [s.vx, s.vy, s.omega, w.fx / p.mass, w.fy / p.mass, w.tau / p.inertia]
}

/// One explicit forward Euler step.
pub fn euler_step(s: &BodyState, w: &Wrench, p: &BodyParams, dt: f64) -> BodyState {
    let d = state_derivative(s, w, p);
    BodyState::new(
        s.x + d[0] * dt,
        s.y + d[1] * dt,
        s.theta + d[2] * dt,
        s.vx + d[3] * dt,
        s.vy + d[4] * dt,
        s.omega + d[5] * dt,
    )
}

/// Kinetic energy `½m|v|² + ½Iω²`.
pub fn kinetic_energy(s: &BodyState, p: &BodyParams) -> f64 {
    0.5 * p.mass * (s.vx * s.vx + s.vy * s.vy) + 0.5 * p.inertia * s.omega * s.omega
}

/// Passive target: fixed position, constant spin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetState {
    pub theta0: f64,
    pub omega: f64,
    pub side_length: f64,
    pub position: [f64; 2],
}

impl TargetState {
    pub fn new(theta0: f64, omega: f64, side_length: f64, position: [f64; 2]) -> Result<Self, ModelError> {
        positive("target side_length", side_length)?;
        if !theta0.is_finite() || !omega.is_finite() {
            return Err(ModelError::NotFinite { name: "target attitude/rate" });
        }
        Ok(Self { theta0, omega, side_length, position })
    }

    pub fn theta_at(&self, t: f64) -> f64 {
        self.theta0 + self.omega * t
    }
}

impl Default for TargetState {
    fn default() -> Self {
        Self { theta0: 0.0, omega: 0.1, side_length: 0.3, position: [0.0, 0.0] }
    }
}

/// Target attitude and (constant) position at time `t`.
pub fn target_state_at(t: f64, target: &TargetState) -> (f64, [f64; 2]) {
    (target.theta_at(t), target.position)
}

/// Inertial velocity of a point rigidly attached to the target at `p`.
pub fn corotating_velocity(target: &TargetState, p: [f64; 2]) -> [f64; 2] {
    let r = [p[0] - target.position[0], p[1] - target.position[1]];
    [-target.omega * r[1], target.omega * r[0]]
}

/// Gram matrix `B Bᵀ` of the effectiveness matrix; handy for rank/conditioning checks.
pub fn effectiveness_gram(layout: &ThrusterLayout) -> Matrix3<f64> {
    let b = layout.effectiveness();
    b * b.transpose()
}

fn positive(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ModelError::NonPositive { name, value })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    fn layout() -> ThrusterLayout {
        ThrusterLayout::square(0.3, 0.4, 1.0).unwrap()
    }

    #[test]
    fn zero_command_gives_zero_wrench() {
        assert_eq!(total_wrench(&ThrusterCommand::OFF, &layout()), Wrench::ZERO);
    }

    #[test]
    fn single_thruster_cross_product() {
        let mut positions = *layout().positions();
        positions[0] = [0.15, 0.15];
        let l = ThrusterLayout::new(positions, *layout().directions(), 1.0).unwrap();
        let mut u = [0.0; 8];
        u[0] = 1.0;
        let w = total_wrench(&ThrusterCommand(u), &l);
        assert_eq!(w.fx, -1.0);
        assert_eq!(w.fy, 0.0);
        assert_relative_eq!(w.tau, 0.15, epsilon = 1e-15);
    }

    #[test]
    fn mirrored_pair_cancels_torque() {
        // thrusters 0 and 1 sit at (h, ±a) and both push −x
        let w = total_wrench(&ThrusterCommand([1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]), &layout());
        assert_eq!(w.fy, 0.0);
        assert_eq!(w.tau, 0.0);
        assert_eq!(w.fx, -2.0);
    }

    #[test]
    fn default_layout_rank_and_spanning() {
        let l = layout();
        assert_eq!(l.effectiveness().rank(1e-9), 3);
        assert!(l.positively_spans());
        assert!(effectiveness_gram(&l).determinant() > 0.0);
    }

    #[test]
    fn one_sided_layout_rejected() {
        // every thruster pushes -x: cannot push +x
        let dirs = [[-1.0, 0.0]; 8];
        let pos = *layout().positions();
        assert!(ThrusterLayout::new(pos, dirs, 1.0).is_err());
    }

    #[test]
    fn non_unit_direction_rejected() {
        let mut dirs = *layout().directions();
        dirs[3] = [1.0, 1e-3];
        assert!(matches!(
            ThrusterLayout::new(*layout().positions(), dirs, 1.0),
            Err(ModelError::NotUnit { index: 3, .. })
        ));
    }

    #[test]
    fn body_params_validation() {
        assert!(BodyParams::new(-1.0, 1.0, 1.0).is_err());
        assert!(BodyParams::new(1.0, 0.0, 1.0).is_err());
        assert!(BodyParams::new(1.0, 1.0, f64::NAN).is_err());
        let p = BodyParams::default();
        assert_relative_eq!(p.inertia(), 0.15, epsilon = 1e-15);
    }

    #[test]
    fn derivative_examples() {
        let p = BodyParams::default();
        let s = BodyState::new(0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        assert_eq!(state_derivative(&s, &Wrench::ZERO, &p), [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let d = state_derivative(&BodyState::default(), &Wrench::new(p.mass(), 0.0, 0.0), &p);
        assert_eq!(d[3], 1.0);
        let d = state_derivative(&BodyState::default(), &Wrench::new(0.0, 0.0, p.inertia() * 0.5), &p);
        assert_eq!(d[5], 0.5);
    }

    #[test]
    fn euler_examples() {
        let p = BodyParams::default();
        let s = BodyState::new(0.3, -0.2, 1.0, 1.0, 0.5, 0.1);
        assert_eq!(euler_step(&s, &Wrench::new(1.0, 2.0, 3.0), &p, 0.0), s);
        let s = BodyState::new(0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        let n = euler_step(&s, &Wrench::ZERO, &p, 0.1);
        assert_eq!(n, BodyState::new(0.1, 0.0, 0.0, 1.0, 0.0, 0.0));
    }

    #[test]
    fn euler_converges_first_order() {
        // Constant wrench over [0, T]: compare against a dt/100 reference; the
        // error ratio between dt and dt/2 must approach 2.
        let p = BodyParams::default();
        let w = Wrench::new(0.4, -0.3, 0.02);
        let s0 = BodyState::new(0.1, 0.2, 0.3, 0.01, -0.02, 0.05);
        let run = |dt: f64, steps: usize| {
            let mut s = s0;
            for _ in 0..steps {
                s = euler_step(&s, &w, &p, dt);
            }
            s
        };
        let t_end = 2.0;
        let reference = run(t_end / 10_000.0, 10_000);
        let e1 = (run(t_end / 100.0, 100).x - reference.x).abs();
        let e2 = (run(t_end / 200.0, 200).x - reference.x).abs();
        let ratio = e1 / e2;
        assert!(ratio > 1.9 && ratio < 2.1, "ratio {ratio}");
        // closed form: x(T) = x0 + v0 T + ½ a T²
        let exact = s0.x + s0.vx * t_end + 0.5 * w.fx / p.mass() * t_end * t_end;
        assert!((reference.x - exact).abs() < 1e-4);
    }

    #[test]
    fn target_phase() {
        let mut t = TargetState::default();
        t.theta0 = 0.2;
        t.omega = 0.0;
        assert_eq!(target_state_at(10.0, &t).0, 0.2);
        t.omega = 0.1;
        assert_relative_eq!(target_state_at(10.0, &t).0, 1.2, epsilon = 1e-15);
        assert_relative_eq!(target_state_at(2.0 * PI / 0.1, &t).0, 0.2 + 2.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn duty_range_checked() {
        assert!(ThrusterCommand::new([0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).is_ok());
        assert!(ThrusterCommand::new([0.0, 1.5, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
    }
}
