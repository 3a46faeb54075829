//! Scenario configuration: a flat `key = value` text format with dotted keys.
//!
//! Blank lines and `#` comments are ignored. Every key is optional; unknown
//! keys are errors. Angles are given in degrees.

use std::fmt;
use std::path::Path;

use anyhow::Context;
use rendezvous_core::controller::PdGains;
use rendezvous_core::dynamics::{BodyParams, BodyState, TargetState, ThrusterLayout};
use rendezvous_core::kos::{corner_safe_angle_threshold, KosConfig};
use rendezvous_core::optimizer::{PlanSetup, SearchMode, SolverSettings};
use rendezvous_core::sim::SimConfig;

/// Integer-indexed grid `start:step:stop`; point `i` is `start + i·step` and
/// the last point is the largest one not beyond `stop` (1e-9 step tolerance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub step: f64,
    pub stop: f64,
}

impl Grid {
    pub fn single(v: f64) -> Self {
        Self { start: v, step: 1.0, stop: v }
    }

    pub fn len(&self) -> usize {
        ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.value(i)).collect()
    }

    fn check(&self) -> Result<(), String> {
        if !(self.start.is_finite() && self.step.is_finite() && self.stop.is_finite()) {
            return Err("grid bounds must be finite".into());
        }
        if self.step <= 0.0 {
            return Err(format!("grid step must be positive (got {})", self.step));
        }
        if self.stop < self.start {
            return Err(format!("grid stop {} is below start {}", self.stop, self.start));
        }
        Ok(())
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.start == self.stop {
            write!(f, "{}", self.start)
        } else {
            write!(f, "{}:{}:{}", self.start, self.step, self.stop)
        }
    }
}

/// Value types accepted in the config file.
pub trait ConfigValue: Sized {
    fn parse_value(s: &str) -> Result<Self, String>;
    fn render(&self) -> String;
}

impl ConfigValue for f64 {
    fn parse_value(s: &str) -> Result<Self, String> {
        s.parse::<f64>().map_err(|_| format!("expected a number, got `{s}`"))
    }
    fn render(&self) -> String {
        format!("{self:?}")
    }
}

impl ConfigValue for u32 {
    fn parse_value(s: &str) -> Result<Self, String> {
        s.parse().map_err(|_| format!("expected a non-negative integer, got `{s}`"))
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for u64 {
    fn parse_value(s: &str) -> Result<Self, String> {
        s.parse().map_err(|_| format!("expected a non-negative integer, got `{s}`"))
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for bool {
    fn parse_value(s: &str) -> Result<Self, String> {
        match s {
            "true" | "on" | "yes" => Ok(true),
            "false" | "off" | "no" => Ok(false),
            _ => Err(format!("expected true/false, got `{s}`")),
        }
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for String {
    fn parse_value(s: &str) -> Result<Self, String> {
        Ok(s.trim_matches('"').to_string())
    }
    fn render(&self) -> String {
        self.clone()
    }
}

/// `auto` or a number.
impl ConfigValue for Option<f64> {
    fn parse_value(s: &str) -> Result<Self, String> {
        if s == "auto" {
            Ok(None)
        } else {
            f64::parse_value(s).map(Some)
        }
    }
    fn render(&self) -> String {
        match self {
            None => "auto".into(),
            Some(v) => v.render(),
        }
    }
}

impl ConfigValue for Vec<f64> {
    fn parse_value(s: &str) -> Result<Self, String> {
        s.split(',').map(|p| f64::parse_value(p.trim())).collect()
    }
    fn render(&self) -> String {
        self.iter().map(|v| v.render()).collect::<Vec<_>>().join(",")
    }
}

impl ConfigValue for Grid {
    fn parse_value(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let g = match parts.as_slice() {
            [v] => Grid::single(f64::parse_value(v)?),
            [a, b, c] => Grid { start: f64::parse_value(a)?, step: f64::parse_value(b)?, stop: f64::parse_value(c)? },
            _ => return Err(format!("expected `start:step:stop` or a single value, got `{s}`")),
        };
        g.check()?;
        Ok(g)
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for SearchMode {
    fn parse_value(s: &str) -> Result<Self, String> {
        match s {
            "warm" => Ok(SearchMode::WarmStart),
            "cold" => Ok(SearchMode::ColdStart),
            _ => Err(format!("expected warm or cold, got `{s}`")),
        }
    }
    fn render(&self) -> String {
        match self {
            SearchMode::WarmStart => "warm".into(),
            SearchMode::ColdStart => "cold".into(),
        }
    }
}

macro_rules! config_fields {
    ($( $field:ident : $ty:ty = $default:expr, $key:literal, $doc:literal; )*) => {
        /// Fully resolved scenario.
        #[derive(Debug, Clone, PartialEq)]
        pub struct RunConfig {
            $( #[doc = $doc] pub $field: $ty, )*
        }

        impl Default for RunConfig {
            fn default() -> Self {
                Self { $( $field: $default, )* }
            }
        }

        impl RunConfig {
            /// `(key, description)` for every field, in file order.
            pub const SCHEMA: &'static [(&'static str, &'static str)] = &[$( ($key, $doc), )*];

            fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
                match key {
                    $( $key => self.$field = <$ty as ConfigValue>::parse_value(value)?, )*
                    _ => return Err(format!("unknown key `{key}`")),
                }
                Ok(())
            }

            /// Every key with its resolved value, in schema order.
            pub fn entries(&self) -> Vec<(&'static str, String)> {
                vec![$( ($key, ConfigValue::render(&self.$field)), )*]
            }
        }
    };
}

config_fields! {
    body_mass: f64 = 10.0, "body.mass", "chaser mass [kg]";
    body_inertia: Option<f64> = None, "body.inertia", "chaser moment of inertia [kg m^2]; auto = mass * side^2 / 6";
    body_side: f64 = 0.3, "body.side_length", "chaser side length l_s [m]";
    thruster_f_max: f64 = 0.3, "thrusters.f_max", "thrust per thruster F_thr [N]";
    thruster_offset: f64 = 0.4, "thrusters.offset_fraction", "thruster offset from the face centre as a fraction of l_s";
    chaser_x: f64 = 1.0, "chaser.x", "initial x [m]";
    chaser_y: f64 = 0.0, "chaser.y", "initial y [m]";
    chaser_theta_deg: f64 = 0.0, "chaser.theta_deg", "initial attitude [deg]";
    chaser_vx: f64 = 0.0, "chaser.vx", "initial vx [m/s]";
    chaser_vy: f64 = 0.0, "chaser.vy", "initial vy [m/s]";
    chaser_omega: f64 = 0.0, "chaser.omega", "initial angular rate [rad/s]";
    target_omega: f64 = 0.1, "target.omega", "target spin rate [rad/s]";
    target_theta0_deg: f64 = 0.0, "target.theta0_deg", "target attitude at t = 0 [deg]";
    target_side: f64 = 0.3, "target.side_length", "target side length l_t [m]";
    target_x: f64 = 0.0, "target.x", "target centre x [m]";
    target_y: f64 = 0.0, "target.y", "target centre y [m]";
    theta_approach_deg: f64 = 135.0, "target.theta_approach_deg", "target attitude at arrival [deg]";
    kos_margin: f64 = 0.10, "kos.margin_fraction", "safety margin as a fraction of l_s";
    kos_dist_factor: f64 = 1.5, "kos.dist_threshold_factor", "State II distance threshold as a multiple of r_safe";
    kos_angle_deg: Option<f64> = None, "kos.angle_threshold_deg", "State II line-of-sight cone half-angle [deg]; auto = corner-safe angle";
    kos_blend_band: f64 = 0.02, "kos.blend_band", "half-plane blending band used inside the optimizer [m]";
    opt_dt: f64 = 0.1, "opt.dt", "knot spacing [s]";
    opt_w_goal: f64 = 100.0, "opt.w_goal", "terminal position weight";
    opt_w_u: f64 = 10.0, "opt.w_u", "wrench effort weight";
    opt_force_fraction: f64 = 0.8, "opt.force_bound_fraction", "wrench box as a fraction of the per-axis thruster capability";
    opt_capture_offset: f64 = 0.05, "opt.capture_offset", "goal standoff beyond face contact [m]";
    opt_min_duration: f64 = 20.0, "opt.min_duration", "shortest duration candidate [s]";
    opt_max_candidates: u32 = 2, "opt.max_candidates", "number of duration candidates tried";
    opt_static_ladder: Vec<f64> = vec![20.0, 40.0, 60.0, 80.0], "opt.static_durations", "durations tried when target.omega = 0 [s]";
    opt_search: SearchMode = SearchMode::WarmStart, "opt.search", "candidate initialisation: warm or cold";
    opt_max_outer: u32 = 500, "opt.max_outer", "augmented-Lagrangian outer iteration limit";
    opt_max_inner: u32 = 200, "opt.max_inner", "Newton iteration limit per outer iteration";
    opt_tol_kkt: f64 = 1e-6, "opt.tol_kkt", "stationarity tolerance";
    opt_tol_feas: f64 = 1e-8, "opt.tol_feas", "constraint violation tolerance";
    ctrl_kp_pos: f64 = 2.0, "control.kp_pos", "position gain [N/m]";
    ctrl_kd_pos: f64 = 8.0, "control.kd_pos", "velocity gain [N s/m]";
    ctrl_kp_att: f64 = 0.4, "control.kp_att", "attitude gain [N m/rad]";
    ctrl_kd_att: f64 = 1.2, "control.kd_att", "angular rate gain [N m s/rad]";
    ctrl_n_slots: u32 = 10, "control.n_slots", "PWM slots per control period";
    ctrl_feed_forward: bool = true, "control.feed_forward", "add the planned wrench to the PD wrench";
    sim_physics_dt: f64 = 0.01, "sim.physics_dt", "physics step [s]";
    sim_control_hz: f64 = 10.0, "sim.control_hz", "control rate [Hz]";
    sim_tail: f64 = 5.0, "sim.tail", "station-keeping time after the plan ends [s]";
    sim_mismatch: f64 = 0.05, "sim.mismatch", "plant perturbation half-width on mass, inertia and thrust (fraction)";
    sim_disturbance: f64 = 0.0, "sim.disturbance", "bound on random disturbance accelerations [m/s^2, rad/s^2]";
    sim_pwm: bool = true, "sim.pwm", "apply binary PWM (false: continuous duty)";
    sim_thrusters: bool = true, "sim.thrusters_enabled", "false disables all thrust";
    sweep1_omega: Grid = Grid { start: 0.035, step: 0.025, stop: 2.0 }, "sweep1.omega", "target spin rates [rad/s]";
    sweep1_f_thr: Grid = Grid { start: 0.03, step: 0.03, stop: 1.02 }, "sweep1.f_thr", "thrust levels [N]";
    sweep1_theta_deg: f64 = 135.0, "sweep1.theta_approach_deg", "arrival attitude [deg]";
    sweep2_theta_deg: Grid = Grid { start: 0.0, step: 30.0, stop: 330.0 }, "sweep2.theta_approach_deg", "arrival attitudes [deg]";
    sweep2_omega: Grid = Grid { start: 0.05, step: 0.05, stop: 2.0 }, "sweep2.omega", "target spin rates [rad/s]";
    sweep2_f_thr: f64 = 0.03, "sweep2.f_thr", "thrust level [N]";
    out_dir: String = "out".to_string(), "output.dir", "output directory";
    seed: u64 = 0, "seed", "seed for plant perturbation and disturbances";
}

/// Parse failure with its location.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration:\n{}", .0.iter().map(|e| format!("  - {e}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<String>),
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
                line: n + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|message| ConfigError::Parse { line: n + 1, message: format!("{}: {message}", key.trim()) })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Applies `key=value` overrides on top of the current values.
    pub fn with_overrides<'a>(
        mut self,
        overrides: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, ConfigError> {
        for (k, v) in overrides {
            self.set(k, v).map_err(|message| ConfigError::Parse { line: 0, message })?;
        }
        self.validate()?;
        Ok(self)
    }

    /// Lists every violated invariant.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("{name} must be positive (got {v})"));
            }
        };
        positive("body.mass", self.body_mass);
        if let Some(i) = self.body_inertia {
            positive("body.inertia", i);
        }
        positive("body.side_length", self.body_side);
        positive("thrusters.f_max", self.thruster_f_max);
        positive("target.side_length", self.target_side);
        positive("opt.dt", self.opt_dt);
        positive("opt.w_goal", self.opt_w_goal);
        positive("opt.tol_kkt", self.opt_tol_kkt);
        positive("opt.tol_feas", self.opt_tol_feas);
        positive("sim.physics_dt", self.sim_physics_dt);
        positive("sim.control_hz", self.sim_control_hz);
        positive("sweep2.f_thr", self.sweep2_f_thr);
        if self.sweep1_f_thr.start <= 0.0 {
            errs.push("sweep1.f_thr must be positive".into());
        }
        let non_negative = [
            ("opt.w_u", self.opt_w_u),
            ("opt.capture_offset", self.opt_capture_offset),
            ("opt.min_duration", self.opt_min_duration),
            ("kos.margin_fraction", self.kos_margin),
            ("kos.blend_band", self.kos_blend_band),
            ("sim.tail", self.sim_tail),
            ("sim.disturbance", self.sim_disturbance),
            ("control.kp_pos", self.ctrl_kp_pos),
            ("control.kd_pos", self.ctrl_kd_pos),
            ("control.kp_att", self.ctrl_kp_att),
            ("control.kd_att", self.ctrl_kd_att),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                errs.push(format!("{name} must be non-negative (got {v})"));
            }
        }
        if !(0.0..1.0).contains(&self.sim_mismatch) {
            errs.push(format!("sim.mismatch must lie in [0, 1) (got {})", self.sim_mismatch));
        }
        if !(0.0..0.5).contains(&self.thruster_offset) {
            errs.push(format!("thrusters.offset_fraction must lie in [0, 0.5) (got {})", self.thruster_offset));
        }
        // zero is allowed: an actuation-free plan is reported as infeasible, not rejected
        if !(0.0..=1.0).contains(&self.opt_force_fraction) {
            errs.push(format!("opt.force_bound_fraction must lie in [0, 1] (got {})", self.opt_force_fraction));
        }
        if self.opt_max_candidates == 0 {
            errs.push("opt.max_candidates must be at least 1".into());
        }
        if self.opt_static_ladder.is_empty() || self.opt_static_ladder.iter().any(|&t| !(t > 0.0)) {
            errs.push("opt.static_durations must list positive durations".into());
        }
        if self.kos_dist_factor < 1.0 {
            errs.push(format!("kos.dist_threshold_factor must be at least 1 (got {})", self.kos_dist_factor));
        }
        if let Some(a) = self.kos_angle_deg {
            if !(a > 0.0 && a < 90.0) {
                errs.push(format!("kos.angle_threshold_deg must lie in (0, 90) (got {a})"));
            }
        }
        if self.ctrl_n_slots == 0 {
            errs.push("control.n_slots must be at least 1".into());
        }
        if self.sim_physics_dt > 0.0 && self.sim_control_hz > 0.0 {
            let ratio = 1.0 / self.sim_control_hz / self.sim_physics_dt;
            if (ratio - ratio.round()).abs() > 1e-9 * ratio || ratio.round() < 1.0 {
                errs.push("sim.control_hz: control period must be a whole number of sim.physics_dt steps".into());
            } else if self.ctrl_n_slots > 0 && !(ratio.round() as u32).is_multiple_of(self.ctrl_n_slots) {
                errs.push("control.n_slots must divide the physics steps per control period".into());
            }
            if (self.opt_dt * self.sim_control_hz - 1.0).abs() > 1e-9 {
                errs.push("opt.dt must equal the control period 1 / sim.control_hz".into());
            }
        }
        for (name, g) in [
            ("sweep1.omega", self.sweep1_omega),
            ("sweep1.f_thr", self.sweep1_f_thr),
            ("sweep2.theta_approach_deg", self.sweep2_theta_deg),
            ("sweep2.omega", self.sweep2_omega),
        ] {
            if let Err(e) = g.check() {
                errs.push(format!("{name}: {e}"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    /// Canonical text form; parsing it yields the same config.
    pub fn to_text(&self) -> String {
        self.entries().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn body(&self) -> anyhow::Result<BodyParams> {
        Ok(match self.body_inertia {
            Some(i) => BodyParams::new(self.body_mass, i, self.body_side)?,
            None => BodyParams::square_plate(self.body_mass, self.body_side)?,
        })
    }

    pub fn layout(&self) -> anyhow::Result<ThrusterLayout> {
        self.layout_with(self.thruster_f_max)
    }

    pub fn layout_with(&self, f_max: f64) -> anyhow::Result<ThrusterLayout> {
        Ok(ThrusterLayout::square(self.body_side, self.thruster_offset, f_max)?)
    }

    pub fn target(&self) -> anyhow::Result<TargetState> {
        self.target_with(self.target_omega)
    }

    pub fn target_with(&self, omega: f64) -> anyhow::Result<TargetState> {
        Ok(TargetState::new(
            self.target_theta0_deg.to_radians(),
            omega,
            self.target_side,
            [self.target_x, self.target_y],
        )?)
    }

    pub fn initial_state(&self) -> BodyState {
        BodyState::new(
            self.chaser_x,
            self.chaser_y,
            self.chaser_theta_deg.to_radians(),
            self.chaser_vx,
            self.chaser_vy,
            self.chaser_omega,
        )
    }

    pub fn kos(&self) -> KosConfig {
        let mut k = KosConfig::new(self.body_side, self.target_side);
        k.margin_fraction = self.kos_margin;
        k.dist_threshold_factor = self.kos_dist_factor;
        k.angle_threshold = match self.kos_angle_deg {
            Some(a) => a.to_radians(),
            None => corner_safe_angle_threshold(&k),
        };
        k
    }

    pub fn gains(&self) -> PdGains {
        PdGains {
            kp_pos: self.ctrl_kp_pos,
            kd_pos: self.ctrl_kd_pos,
            kp_att: self.ctrl_kp_att,
            kd_att: self.ctrl_kd_att,
        }
    }

    /// Planner inputs for a given spin rate and thrust level.
    pub fn plan_setup_with(&self, omega: f64, f_max: f64) -> anyhow::Result<PlanSetup> {
        let layout = self.layout_with(f_max)?;
        let (wrench_min, wrench_max) = PlanSetup::layout_bounds(&layout, self.opt_force_fraction);
        let settings = SolverSettings {
            max_outer: self.opt_max_outer as usize,
            max_inner: self.opt_max_inner as usize,
            tol_kkt: self.opt_tol_kkt,
            tol_feas: self.opt_tol_feas,
            ..SolverSettings::default()
        };
        Ok(PlanSetup {
            dt: self.opt_dt,
            x_init: self.initial_state(),
            w_goal: self.opt_w_goal,
            w_u: self.opt_w_u,
            wrench_min,
            wrench_max,
            kos_cfg: self.kos(),
            target: self.target_with(omega)?,
            body: self.body()?,
            capture_offset: self.opt_capture_offset,
            min_duration: self.opt_min_duration,
            static_ladder: self.opt_static_ladder.clone(),
            blend_band: self.kos_blend_band,
            settings,
        })
    }

    pub fn plan_setup(&self) -> anyhow::Result<PlanSetup> {
        self.plan_setup_with(self.target_omega, self.thruster_f_max)
    }

    pub fn sim_config(&self) -> anyhow::Result<SimConfig> {
        let mut s = SimConfig::new(self.body()?, self.layout()?, self.kos());
        s.physics_dt = self.sim_physics_dt;
        s.control_hz = self.sim_control_hz;
        s.tail = self.sim_tail;
        s.gains = self.gains();
        s.n_slots = self.ctrl_n_slots;
        s.feed_forward = self.ctrl_feed_forward;
        s.pwm = self.sim_pwm;
        s.thrusters_enabled = self.sim_thrusters;
        s.mismatch = self.sim_mismatch;
        s.disturbance = self.sim_disturbance;
        s.seed = self.seed;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
        assert_eq!(RunConfig::parse("# only a comment\n\n").unwrap(), RunConfig::default());
    }

    #[test]
    fn single_override_keeps_other_defaults() {
        let cfg = RunConfig::parse("target.omega = 0.5  # faster").unwrap();
        assert_eq!(cfg.target_omega, 0.5);
        assert_eq!(RunConfig { target_omega: 0.1, ..cfg }, RunConfig::default());
    }

    #[test]
    fn negative_mass_is_named() {
        let err = RunConfig::parse("body.mass = -1").unwrap_err().to_string();
        assert!(err.contains("body.mass"), "{err}");
    }

    #[test]
    fn all_violations_are_listed() {
        let err = RunConfig::parse("body.mass = -1\nopt.dt = 0").unwrap_err();
        match err {
            ConfigError::Invalid(list) => assert!(list.len() >= 2, "{list:?}"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = RunConfig::parse("\nbody.mas = 3").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn canonical_text_round_trips() {
        let cfg = RunConfig::parse("sweep1.omega = 0.1:0.1:2.0\nkos.angle_threshold_deg = 20").unwrap();
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn grids_are_index_generated() {
        let g = Grid::parse_value("0.035:0.025:2.0").unwrap();
        assert_eq!(g.len(), 79);
        assert_eq!(g.value(0), 0.035);
        assert_eq!(g.value(78), 0.035 + 78.0 * 0.025);
        assert!((g.value(78) - 1.985).abs() < 1e-12);
        assert_eq!(Grid::parse_value("0:30:330").unwrap().len(), 12);
        assert_eq!(Grid::parse_value("0.1:0.1:2.0").unwrap().len(), 20);
        assert_eq!(Grid::parse_value("0.03:0.33:1.02").unwrap().values().len(), 4);
        assert!(Grid::parse_value("1:0:2").is_err());
        assert!(Grid::parse_value("2:1:1").is_err());
    }
}
