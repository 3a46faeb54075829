//! Planning and tracking for close-range rendezvous with a spinning target in
//! a planar microgravity setting.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! pieces:
//!
//! - [`dynamics`]: planar rigid-body model, 8-thruster wrench map, forward Euler.
//! - [`kos`]: dynamic keep-out region (State I / State II) and its distance functions.
//! - [`optimizer`]: direct-transcription NLP, augmented-Lagrangian solver and
//!   the duration-candidate planner.
//! - [`controller`]: PD tracking, frame rotation, bounded least-squares duty
//!   allocation and PWM scheduling.
//! - [`sim`]: deterministic closed-loop simulator and safety audit.
//!
//! File formats, configuration and the command-line front end live in the
//! `rendezvous-tools` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod angle;
pub mod controller;
pub mod dynamics;
pub mod kos;
pub mod linalg;
pub mod optimizer;
pub mod sim;

pub use controller::{PdGains, PwmSchedule, TrackingError};
pub use dynamics::{BodyParams, BodyState, TargetState, ThrusterCommand, ThrusterLayout, Wrench};
pub use kos::{KosConfig, KosRegion, KosState};
pub use optimizer::{OptProblem, PlanSetup, PlannedTrajectory};
pub use sim::{SimConfig, SimResult};
