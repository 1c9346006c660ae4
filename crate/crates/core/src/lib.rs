//! Link-level simulation and optimization toolkit for RIS-assisted,
//! wave-energy-powered maritime IoT uplinks.
//!
//! The crate is organized bottom-up:
//!
//! * [`sea_surface`]: sine-wave sea, buoy heave, wave-peak geometry and the
//!   two-sided LoS test for a buoy-to-buoy link.
//! * [`channel`]: two-/three-ray LoS, empirical NLoS and free-space path loss,
//!   shadowing, and complex channel synthesis for the direct and RIS links.
//! * [`energy`]: wave power flux, wave-to-wire harvesting and the transmit
//!   power budget of each buoy.
//! * [`ris_system`]: the frozen per-interval MU model, received signal and
//!   sum capacity.
//! * [`estimation`]: two-stage pilot-based least-squares estimation of the
//!   direct and cascaded channels.
//! * [`optimizer`]: homogenized QCQP, semidefinite relaxation solved by
//!   Anderson-accelerated ADMM,
//!   and Gaussian randomization.
//! * [`harness`]: scenario configuration, Poisson deployment, per-interval
//!   orchestration, Monte-Carlo sweeps and result files.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod energy;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod linalg;
pub mod optimizer;
pub mod ris_system;
pub mod sea_surface;
pub mod validation;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};

pub use channel::{ComplexGain, LinkGeometry, PathLoss, PathLossParams};
pub use energy::WecParams;
pub use estimation::{ChannelEstimate, PilotBook, ReflectionSchedule};
pub use harness::{OutputFormat, ScenarioConfig, SweepSpec, SweepTable, SweepVariable, TrialRecord};
pub use optimizer::{HomogenizedObjective, OptimizerConfig, SdpSettings, SdpSolution};
pub use ris_system::{NetworkSnapshot, RisConfig};
pub use sea_surface::{
    FloatingNode, HeaveDirection, LinkState, SeaState, SeaStateLevel, SeaStateTable, WaveField,
};
