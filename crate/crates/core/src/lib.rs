//! Monostatic MIMO-OFDM radar sensing library.
//!
//! The crate simulates a co-located transmit/receive planar-array radar that
//! probes moving point targets with OFDM frames, and estimates each target's
//! six motion parameters (range, azimuth, elevation, radial velocity and the
//! two angular velocities) from a single echo frame via subspace methods.
//! A constant-velocity Kalman filter refines the per-frame estimates across
//! frames.
//!
//! Modules follow the processing chain: [`geometry`] and [`motion`] define
//! arrays and target kinematics, [`channel`] synthesizes the echo channel,
//! [`echo`] produces the received cube and reduces it to the dynamic-target
//! equivalent channel, [`estimation`] recovers the six parameters, and
//! [`tracking`] filters them over time. [`experiment`] runs Monte-Carlo
//! sweeps and tracking scenarios from a [`config::ExperimentConfig`].

pub mod channel;
pub mod config;
pub mod echo;
pub mod error;
pub mod estimation;
pub mod experiment;
pub mod geometry;
pub mod linalg;
pub mod motion;
pub mod tracking;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
