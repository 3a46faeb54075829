//! Dynamic keep-out region around the target.
//!
//! In the target-fixed frame the docking face normal is the body `+x` axis.
//! State I forbids a circle of radius `r_safe` plus an ellipse (split into two
//! halves along the docking axis) whose short axis lies on the docking
//! normal. State II drops the circle so the chaser can close in along the
//! normal, where the ellipse is thinnest.
//!
//! Two evaluators are exposed: [`signed_distance`], the exact (discontinuous
//! across half-plane boundaries) audit function, and
//! [`Primitive::smooth_constraint`], the smooth form used inside the optimizer.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};
#[allow(unused_imports)] // inherent float methods shadow these when std is linked
use num_traits::Float;
use thiserror::Error;

use crate::angle::rotate_inv;
use crate::dynamics::BodyState;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KosError {
    #[error("{name} must be finite and non-negative (got {value})")]
    Negative { name: &'static str, value: f64 },
    #[error("safety radius must be strictly positive (got {0})")]
    NonPositiveRadius(f64),
    #[error("distance threshold factor must be >= 1 (got {0})")]
    ThresholdFactor(f64),
    #[error("angle threshold must lie in (0, pi/2) (got {0})")]
    AngleThreshold(f64),
}

/// Keep-out geometry parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KosConfig {
    /// Chaser side length [m].
    pub l_s: f64,
    /// Target side length [m].
    pub l_t: f64,
    /// Safety margin as a fraction of `l_s`.
    pub margin_fraction: f64,
    /// State II requires a centre distance of at most this multiple of `r_safe`.
    pub dist_threshold_factor: f64,
    /// Maximum line-of-sight deviation from the docking normal in State II [rad].
    pub angle_threshold: f64,
}

impl KosConfig {
    /// Default margins with the angle threshold set to the corner-safe angle.
    pub fn new(l_s: f64, l_t: f64) -> Self {
        let mut cfg = Self { l_s, l_t, margin_fraction: 0.10, dist_threshold_factor: 1.5, angle_threshold: 0.0 };
        cfg.angle_threshold = corner_safe_angle_threshold(&cfg);
        cfg
    }

    pub fn r_safe(&self) -> f64 {
        r_safe(self)
    }

    /// Collects every violated invariant.
    pub fn validate(&self) -> Result<(), Vec<KosError>> {
        let mut errs = Vec::new();
        for (name, value) in [("l_s", self.l_s), ("l_t", self.l_t), ("margin_fraction", self.margin_fraction)] {
            if !(value.is_finite() && value >= 0.0) {
                errs.push(KosError::Negative { name, value });
            }
        }
        let r = self.r_safe();
        if !(r.is_finite() && r > 0.0) {
            errs.push(KosError::NonPositiveRadius(r));
        }
        if !(self.dist_threshold_factor >= 1.0 && self.dist_threshold_factor.is_finite()) {
            errs.push(KosError::ThresholdFactor(self.dist_threshold_factor));
        }
        if !(self.angle_threshold > 0.0 && self.angle_threshold < FRAC_PI_2) {
            errs.push(KosError::AngleThreshold(self.angle_threshold));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}

impl Default for KosConfig {
    fn default() -> Self {
        Self::new(0.3, 0.3)
    }
}

/// Which keep-out configuration is in force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KosState {
    /// General approach: circle and ellipse.
    StateI,
    /// Final approach: ellipse only.
    StateII,
}

impl KosState {
    pub fn as_index(self) -> u8 {
        match self {
            KosState::StateI => 1,
            KosState::StateII => 2,
        }
    }

    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            1 => Some(KosState::StateI),
            2 => Some(KosState::StateII),
            _ => None,
        }
    }
}

/// One forbidden shape, in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Primitive {
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    HalfEllipse {
        center: [f64; 2],
        /// World angle of the semi-major axis.
        orientation: f64,
        semi_major: f64,
        semi_minor: f64,
        /// Unit normal `h`; the primitive is active where `h·(p − center) ≥ 0`.
        active_half_plane: [f64; 2],
    },
}

/// Value, gradient and Hessian of a smooth constraint `c(p) ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothValue {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

impl Primitive {
    /// Exact signed distance: positive outside, negative inside,
    /// `+∞` for a half-ellipse evaluated outside its active half-plane.
    pub fn signed_distance(&self, p: [f64; 2]) -> f64 {
        match *self {
            Primitive::Circle { center, radius } => {
                let d = [p[0] - center[0], p[1] - center[1]];
                (d[0] * d[0] + d[1] * d[1]).sqrt() - radius
            }
            Primitive::HalfEllipse { center, orientation, semi_major, semi_minor, active_half_plane } => {
                let d = [p[0] - center[0], p[1] - center[1]];
                if active_half_plane[0] * d[0] + active_half_plane[1] * d[1] < 0.0 {
                    return f64::INFINITY;
                }
                let local = rotate_inv(d, orientation);
                let k = ((local[0] / semi_major).powi(2) + (local[1] / semi_minor).powi(2)).sqrt();
                // Radial scaling; |value| never exceeds the Euclidean distance
                // to the boundary and equals it on the minor axis.
                semi_minor * (k - 1.0)
            }
        }
    }

    /// Smooth constraint used by the optimizer.
    ///
    /// Circles use the Euclidean distance. Half-ellipses use the implicit
    /// quadratic `(u/a)² + (v/b)² − 1`, relaxed by `1 − s` where `s` ramps
    /// from 0 to 1 over a band of width `band` on the inactive side of the
    /// half-plane, so the exact active half is always fully enforced.
    pub fn smooth_constraint(&self, p: [f64; 2], band: f64) -> SmoothValue {
        match *self {
            Primitive::Circle { center, radius } => {
                let mut d = [p[0] - center[0], p[1] - center[1]];
                let mut r = (d[0] * d[0] + d[1] * d[1]).sqrt();
                if r < 1e-12 {
                    // gradient undefined at the centre; push out along +y
                    d = [0.0, 1e-12];
                    r = 1e-12;
                }
                let n = [d[0] / r, d[1] / r];
                let hess = [[(1.0 - n[0] * n[0]) / r, -n[0] * n[1] / r], [-n[0] * n[1] / r, (1.0 - n[1] * n[1]) / r]];
                SmoothValue { value: r - radius, grad: n, hess }
            }
            Primitive::HalfEllipse { center, orientation, semi_major, semi_minor, active_half_plane } => {
                let d = [p[0] - center[0], p[1] - center[1]];
                let (s, c) = orientation.sin_cos();
                let m = [c, s];
                let n = [-s, c];
                let u = m[0] * d[0] + m[1] * d[1];
                let v = n[0] * d[0] + n[1] * d[1];
                let ia = 1.0 / (semi_major * semi_major);
                let ib = 1.0 / (semi_minor * semi_minor);
                let e = u * u * ia + v * v * ib - 1.0;
                let mut grad = [2.0 * (u * ia * m[0] + v * ib * n[0]), 2.0 * (u * ia * m[1] + v * ib * n[1])];
                let mut hess = [[0.0; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        hess[i][j] = 2.0 * (ia * m[i] * m[j] + ib * n[i] * n[j]);
                    }
                }
                let h = active_half_plane;
                let sigma = h[0] * d[0] + h[1] * d[1];
                let (w, dw, ddw) = blend(sigma, band);
                // c = e + (1 − w)
                let value = e + 1.0 - w;
                for i in 0..2 {
                    grad[i] -= dw * h[i];
                    for j in 0..2 {
                        hess[i][j] -= ddw * h[i] * h[j];
                    }
                }
                SmoothValue { value, grad, hess }
            }
        }
    }
}

// Quintic smoothstep from 0 at sigma = −band to 1 at sigma = 0, with first
// and second derivatives.
fn blend(sigma: f64, band: f64) -> (f64, f64, f64) {
    if sigma >= 0.0 {
        return (1.0, 0.0, 0.0);
    }
    if band <= 0.0 || sigma <= -band {
        return (0.0, 0.0, 0.0);
    }
    let x = (sigma + band) / band;
    let x2 = x * x;
    let x3 = x2 * x;
    let w = x3 * (10.0 - 15.0 * x + 6.0 * x2);
    let dw = 30.0 * x2 * (1.0 - x) * (1.0 - x) / band;
    let ddw = 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x) / (band * band);
    (w, dw, ddw)
}

/// Forbidden region: the union of its primitives.
#[derive(Debug, Clone, PartialEq)]
pub struct KosRegion {
    pub primitives: Vec<Primitive>,
}

impl KosRegion {
    pub fn signed_distance(&self, p: [f64; 2]) -> f64 {
        signed_distance(p, self)
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.signed_distance(p) < 0.0
    }
}

/// `r_safe = (√2/2)·l_s + (√2/2)·l_t + margin_fraction·l_s`.
pub fn r_safe(cfg: &KosConfig) -> f64 {
    FRAC_1_SQRT_2 * cfg.l_s + FRAC_1_SQRT_2 * cfg.l_t + cfg.margin_fraction * cfg.l_s
}

/// Chaser position expressed in the target frame: `[along normal, lateral]`.
pub fn target_frame_position(p: [f64; 2], target_theta: f64, target_pos: [f64; 2]) -> [f64; 2] {
    rotate_inv([p[0] - target_pos[0], p[1] - target_pos[1]], target_theta)
}

/// Deviation of the target→chaser line of sight from the docking normal, in [0, π].
pub fn los_deviation(p: [f64; 2], target_theta: f64, target_pos: [f64; 2]) -> f64 {
    let q = target_frame_position(p, target_theta, target_pos);
    q[1].abs().atan2(q[0])
}

/// State II iff the chaser is in front of the docking face, within the angle
/// threshold of its normal, and within `dist_threshold_factor·r_safe`.
pub fn classify(chaser: &BodyState, target_theta: f64, target_pos: [f64; 2], cfg: &KosConfig) -> KosState {
    let q = target_frame_position(chaser.position(), target_theta, target_pos);
    let dist = (q[0] * q[0] + q[1] * q[1]).sqrt();
    let in_front = q[0] > 0.0;
    let aligned = q[1].abs().atan2(q[0]) <= cfg.angle_threshold;
    let close = dist <= cfg.dist_threshold_factor * cfg.r_safe();
    if in_front && aligned && close {
        KosState::StateII
    } else {
        KosState::StateI
    }
}

/// Line-of-sight deviation at which the chaser's circumscribing circle, with
/// its centre on the State II ellipse boundary, just touches the target's
/// circumscribing circle. Deviations beyond this angle keep the corner
/// circles apart all the way down to the ellipse.
///
/// On the ellipse the boundary radius at deviation φ is
/// `r_safe / sqrt(1 + 3 cos²φ)`; setting it equal to `(l_s + l_t)/√2` gives
/// `cos²φ = ((r_safe/R_c)² − 1)/3`.
pub fn corner_safe_angle_threshold(cfg: &KosConfig) -> f64 {
    let touch = FRAC_1_SQRT_2 * (cfg.l_s + cfg.l_t);
    let ratio = r_safe(cfg) / touch;
    let c2 = ((ratio * ratio - 1.0) / 3.0).clamp(0.0, 1.0);
    c2.sqrt().acos()
}

/// Exact signed distance of a point to the forbidden region (min over primitives).
pub fn signed_distance(p: [f64; 2], region: &KosRegion) -> f64 {
    region.primitives.iter().map(|prim| prim.signed_distance(p)).fold(f64::INFINITY, f64::min)
}

/// Region for `state`, rigidly attached to the target at attitude `target_theta`.
pub fn build_region(state: KosState, target_theta: f64, target_pos: [f64; 2], cfg: &KosConfig) -> KosRegion {
    let r = cfg.r_safe();
    let (s, c) = target_theta.sin_cos();
    // semi-major axis lies along the target's lateral (+y body) axis
    let lateral = [-s, c];
    let orientation = target_theta + FRAC_PI_2;
    let half = |h: [f64; 2]| Primitive::HalfEllipse {
        center: target_pos,
        orientation,
        semi_major: r,
        semi_minor: 0.5 * r,
        active_half_plane: h,
    };
    let mut primitives = Vec::with_capacity(3);
    if state == KosState::StateI {
        primitives.push(Primitive::Circle { center: target_pos, radius: r });
    }
    primitives.push(half(lateral));
    primitives.push(half([-lateral[0], -lateral[1]]));
    KosRegion { primitives }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    fn cfg() -> KosConfig {
        KosConfig::default()
    }

    #[test]
    fn r_safe_examples() {
        let c = cfg();
        let expected = 0.3 / 2f64.sqrt() * 2.0 + 0.03;
        assert_relative_eq!(r_safe(&c), expected, epsilon = 1e-15);
        assert_relative_eq!(r_safe(&c), 0.4543, epsilon = 1e-4);
        let z = KosConfig { l_s: 0.0, l_t: 0.0, margin_fraction: 0.0, ..c };
        assert_eq!(r_safe(&z), 0.0);
        let d = KosConfig { l_s: 0.6, l_t: 0.6, ..c };
        assert_relative_eq!(r_safe(&d), 2.0 * r_safe(&c), epsilon = 1e-15);
    }

    #[test]
    fn default_config_valid() {
        assert!(cfg().validate().is_ok());
        let bad = KosConfig { dist_threshold_factor: 0.5, angle_threshold: 2.0, ..cfg() };
        assert_eq!(bad.validate().unwrap_err().len(), 2);
    }

    #[test]
    fn classify_examples() {
        let c = cfg();
        let r = c.r_safe();
        let far = BodyState::at_rest(10.0 * r, 0.0, 0.0);
        assert_eq!(classify(&far, 0.0, [0.0, 0.0], &c), KosState::StateI);
        let near = BodyState::at_rest(1.4 * r, 0.0, 0.0);
        assert_eq!(classify(&near, 0.0, [0.0, 0.0], &c), KosState::StateII);
        for d in [0.3, 1.0, 1.4, 3.0] {
            let behind = BodyState::at_rest(-d * r, 0.0, 0.0);
            assert_eq!(classify(&behind, 0.0, [0.0, 0.0], &c), KosState::StateI);
        }
        // rotated target: docking normal points along +y
        let above = BodyState::at_rest(1.0, 2.0 + 1.2 * r, 0.0);
        assert_eq!(classify(&above, PI / 2.0, [1.0, 2.0], &c), KosState::StateII);
    }

    #[test]
    fn corner_angle_symmetric_and_monotone() {
        let base = KosConfig { margin_fraction: 0.1, ..cfg() };
        let a = corner_safe_angle_threshold(&base);
        assert!(a > 0.0 && a < FRAC_PI_2);
        // l_s = l_t: swapping is the identity
        let swapped = KosConfig { l_s: base.l_t, l_t: base.l_s, ..base };
        assert_eq!(corner_safe_angle_threshold(&swapped), a);
        let mut prev = 0.0;
        for k in (1..=30).rev() {
            let c = KosConfig { l_s: 0.3 * k as f64 / 30.0, ..base };
            let t = corner_safe_angle_threshold(&c);
            assert!(t >= prev, "threshold should grow as l_s shrinks");
            prev = t;
        }
    }

    #[test]
    fn circle_distance_examples() {
        let c = cfg();
        let r = c.r_safe();
        let region = build_region(KosState::StateI, 0.0, [0.0, 0.0], &c);
        // off the ellipse: along the normal at 2r the circle term is r
        assert_relative_eq!(signed_distance([2.0 * r, 0.0], &region), r, epsilon = 1e-15);
        assert!(signed_distance([r, 0.0], &region).abs() < 1e-15);
    }

    #[test]
    fn ellipse_center_depth_is_semi_minor() {
        let c = cfg();
        let region = build_region(KosState::StateII, 0.3, [0.5, -0.2], &c);
        let g = signed_distance([0.5, -0.2], &region);
        assert_relative_eq!(g, -0.5 * c.r_safe(), epsilon = 1e-15);
    }

    #[test]
    fn region_primitive_counts() {
        let c = cfg();
        assert_eq!(build_region(KosState::StateI, 0.0, [0.0, 0.0], &c).primitives.len(), 3);
        assert_eq!(build_region(KosState::StateII, 0.0, [0.0, 0.0], &c).primitives.len(), 2);
    }

    #[test]
    fn goal_distance_is_outside_ellipse_but_inside_circle() {
        let c = cfg();
        let p = [0.35, 0.0];
        assert!(signed_distance(p, &build_region(KosState::StateII, 0.0, [0.0, 0.0], &c)) > 0.0);
        assert!(signed_distance(p, &build_region(KosState::StateI, 0.0, [0.0, 0.0], &c)) < 0.0);
    }

    #[test]
    fn smooth_matches_exact_sign_in_active_half() {
        let c = cfg();
        let region = build_region(KosState::StateII, 0.7, [0.0, 0.0], &c);
        for prim in &region.primitives {
            for &(x, y) in &[(0.1, 0.2), (0.3, -0.3), (-0.25, 0.05), (0.0, 0.5), (0.2, 0.0)] {
                let exact = prim.signed_distance([x, y]);
                if exact.is_finite() {
                    let smooth = prim.smooth_constraint([x, y], 0.02).value;
                    assert_eq!(exact < 0.0, smooth < 0.0, "({x},{y})");
                }
            }
        }
    }

    #[test]
    fn smooth_gradient_matches_finite_difference() {
        let c = cfg();
        let mut prims = build_region(KosState::StateI, 0.4, [0.1, 0.2], &c).primitives;
        prims.truncate(3);
        // include points inside the blend band (lateral offset just below 0)
        let pts = [[0.3, 0.1], [0.05, 0.25], [0.12, 0.19], [-0.2, -0.1], [0.11, 0.195]];
        let h = 1e-6;
        for prim in &prims {
            for p in pts {
                let v = prim.smooth_constraint(p, 0.02);
                for k in 0..2 {
                    let mut a = p;
                    let mut b = p;
                    a[k] += h;
                    b[k] -= h;
                    let fa = prim.smooth_constraint(a, 0.02);
                    let fb = prim.smooth_constraint(b, 0.02);
                    let fd = (fa.value - fb.value) / (2.0 * h);
                    assert!((fd - v.grad[k]).abs() < 1e-5 * (1.0 + fd.abs()), "grad {k}: fd {fd} vs {}", v.grad[k]);
                    for j in 0..2 {
                        let fdh = (fa.grad[j] - fb.grad[j]) / (2.0 * h);
                        assert!((fdh - v.hess[k][j]).abs() < 1e-4 * (1.0 + fdh.abs()));
                    }
                }
            }
        }
    }
}
