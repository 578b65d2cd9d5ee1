mod esprit;
mod plane;

pub use esprit::{
    esprit_principal, esprit_space_values, esprit_with_dominant, mdl_order, select_kappa,
    snapshots_azimuth, snapshots_pitch, snapshots_range, snapshots_velocity, SnapshotAxis,
    SnapshotMatrix, SpaceValueSet,
};
pub use plane::{
    fit_velocity_plane, plane_coefficients, recover_velocities, RecoveredVelocities, VelocityGrid,
    VelocityPlane,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RadarConfig;
use crate::echo::EchoCube;
use crate::error::{Error, Result};
use crate::geometry::C_LIGHT;
use crate::motion::TargetState6D;

const EPS_CLIP: f64 = 1e-9;
const DEGENERATE_COSINE: f64 = 1e-6;
const AMBIGUITY_MARGIN_M: f64 = 1.0;

/// Which of an observation's six fields carry trustworthy values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldValidity {
    pub r: bool,
    pub theta: bool,
    pub phi: bool,
    pub v_r: bool,
    pub omega_theta: bool,
    pub omega_phi: bool,
}

impl FieldValidity {
    pub const ALL: Self = Self {
        r: true,
        theta: true,
        phi: true,
        v_r: true,
        omega_theta: true,
        omega_phi: true,
    };

    pub fn all_valid(&self) -> bool {
        self.r && self.theta && self.phi && self.v_r && self.omega_theta && self.omega_phi
    }

    pub fn to_array(&self) -> [bool; 6] {
        [
            self.r,
            self.theta,
            self.phi,
            self.v_r,
            self.omega_theta,
            self.omega_phi,
        ]
    }
}

/// One slot's estimate of the six motion parameters, with per-field
/// validity; angles and rates in radians. Field order matches
/// [`TargetState6D`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Observation6D {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
    pub v_r: f64,
    pub omega_theta: f64,
    pub omega_phi: f64,
    pub valid: FieldValidity,
    /// Root-mean-square misfit of the virtual-velocity plane, m/s.
    pub plane_residual_rms: f64,
}

impl Observation6D {
    pub fn to_array(&self) -> [f64; 6] {
        [
            self.r,
            self.theta,
            self.phi,
            self.v_r,
            self.omega_theta,
            self.omega_phi,
        ]
    }

    pub fn as_state(&self) -> TargetState6D {
        TargetState6D {
            r: self.r,
            theta: self.theta,
            phi: self.phi,
            v_r: self.v_r,
            omega_theta: self.omega_theta,
            omega_phi: self.omega_phi,
        }
    }
}

fn clip_unit(value: f64, what: &'static str) -> Result<f64> {
    if value.abs() <= 1.0 {
        Ok(value)
    } else if value.abs() <= 1.0 + EPS_CLIP {
        Ok(value.signum())
    } else {
        Err(Error::OutOfRange {
            what,
            value,
            limit: 1.0,
        })
    }
}

fn angle_kappa_scale(cfg: &RadarConfig) -> f64 {
    C_LIGHT / (2.0 * std::f64::consts::PI * cfg.f0_hz * cfg.spacing_m())
}

fn pitch_stage(cube: &EchoCube, cfg: &RadarConfig) -> Result<(f64, f64)> {
    let snap = snapshots_pitch(cube)?;
    let (kappa, _) = esprit_principal(&snap)?;
    let omega = clip_unit(kappa * angle_kappa_scale(cfg), "elevation direction cosine")?;
    Ok((omega.asin(), kappa))
}

fn azimuth_stage(cube: &EchoCube, phi_hat: f64, cfg: &RadarConfig) -> Result<(f64, f64)> {
    let cos_phi = phi_hat.cos();
    if cos_phi.abs() < DEGENERATE_COSINE {
        return Err(Error::DegenerateDirection {
            what: "pitch cosine",
            value: cos_phi,
        });
    }
    let snap = snapshots_azimuth(cube)?;
    let (kappa, _) = esprit_principal(&snap)?;
    let psi = kappa * angle_kappa_scale(cfg);
    let ratio = clip_unit(psi / cos_phi, "azimuth cosine ratio")?;
    Ok((ratio.acos(), kappa))
}

fn distance_stage(cube: &EchoCube, cfg: &RadarConfig) -> Result<(f64, f64)> {
    let snap = snapshots_range(cube)?;
    let (kappa, _) = esprit_principal(&snap)?;
    let window = cfg.range_window_m();
    let r = -kappa * C_LIGHT / (4.0 * std::f64::consts::PI * cfg.delta_f_hz);
    if r < 0.0 {
        return Err(Error::AmbiguousRange {
            folded_m: r.rem_euclid(window),
            window_m: window,
        });
    }
    if r < AMBIGUITY_MARGIN_M || r > window - AMBIGUITY_MARGIN_M {
        return Err(Error::AmbiguousRange {
            folded_m: r,
            window_m: window,
        });
    }
    Ok((r, kappa))
}

/// Elevation angle from the phase step along the receive z axis.
pub fn estimate_pitch(cube: &EchoCube, cfg: &RadarConfig) -> Result<(f64, f64)> {
    pitch_stage(cube, cfg)
}

/// Azimuth angle from the phase step along the receive x axis, given the
/// already estimated elevation.
pub fn estimate_azimuth(cube: &EchoCube, phi_hat: f64, cfg: &RadarConfig) -> Result<(f64, f64)> {
    azimuth_stage(cube, phi_hat, cfg)
}

/// Range from the phase step across subcarriers. Estimates that fold past
/// the unambiguous window, or sit within a meter of its edges, error out
/// rather than alias silently.
pub fn estimate_distance(cube: &EchoCube, cfg: &RadarConfig) -> Result<(f64, f64)> {
    distance_stage(cube, cfg)
}

/// Per-antenna virtual radial velocity over the receive grid, each cell
/// from a single-component phase-step fit along the symbol axis. Cells
/// whose fit fails or lands outside the unambiguous velocity window are
/// invalid; more than 10% invalid fails the stage.
pub fn estimate_virtual_velocities(cube: &EchoCube, cfg: &RadarConfig) -> Result<VelocityGrid> {
    let window = cfg.velocity_window_mps()?;
    let t_s = cfg.timing(1)?.t_s;
    let scale = C_LIGHT / (4.0 * std::f64::consts::PI * cfg.f0_hz * t_s);
    let n_z = cube.n_r_z;
    let n_x = cube.n_r_x;
    let cells: Vec<((usize, usize), Option<f64>)> = (0..n_z * n_x)
        .into_par_iter()
        .map(|i| {
            let (z, x) = (i / n_x, i % n_x);
            let v = snapshots_velocity(cube, z, x)
                .and_then(|snap| esprit_space_values(&snap, Some(1)))
                .ok()
                .map(|set| set.kappas[0] * scale)
                .filter(|v| v.abs() < window);
            ((z, x), v)
        })
        .collect();
    let mut grid = VelocityGrid::new(n_z, n_x);
    for ((z, x), v) in cells {
        grid.set(z, x, v);
    }
    let invalid = grid.len() - grid.valid_count();
    if invalid * 10 > grid.len() {
        return Err(Error::TargetLost {
            reason: "virtual-velocity grid mostly invalid",
        });
    }
    Ok(grid)
}

fn all_noise_to_lost(e: Error, reason: &'static str) -> Error {
    match e {
        Error::AllNoise => Error::TargetLost { reason },
        other => other,
    }
}

/// Full single-slot estimation: elevation, azimuth, range, then the
/// virtual-velocity plane and its inversion into the three velocity
/// components.
///
/// Each stage estimates the principal signal component after a
/// presence check, matching the one-target-per-beam operating model; the
/// predicted state is accepted for interface stability (the transmit beam
/// was steered with it) and reserved for multi-target component selection,
/// which the principal-component pipeline does not need.
///
/// Angle or range stages that find only noise lose the target; velocity
/// stages that fail leave their three fields flagged invalid while the
/// position fields stand.
pub fn single_shot_sense(
    cube: &EchoCube,
    cfg: &RadarConfig,
    predicted: Option<&TargetState6D>,
) -> Result<Observation6D> {
    let _ = predicted;
    let (phi, _) = pitch_stage(cube, cfg)
        .map_err(|e| all_noise_to_lost(e, "no target in the elevation stage"))?;
    let (theta, _) = azimuth_stage(cube, phi, cfg)
        .map_err(|e| all_noise_to_lost(e, "no target in the azimuth stage"))?;
    let (r, _) = distance_stage(cube, cfg)
        .map_err(|e| all_noise_to_lost(e, "no target in the range stage"))?;

    let velocities = estimate_virtual_velocities(cube, cfg)
        .and_then(|grid| fit_velocity_plane(&grid))
        .and_then(|fit| recover_velocities(&fit, theta, phi, cfg).map(|rec| (fit, rec)));

    let mut obs = Observation6D {
        r,
        theta,
        phi,
        v_r: 0.0,
        omega_theta: 0.0,
        omega_phi: 0.0,
        valid: FieldValidity {
            r: true,
            theta: true,
            phi: true,
            v_r: false,
            omega_theta: false,
            omega_phi: false,
        },
        plane_residual_rms: f64::NAN,
    };
    if let Ok((fit, rec)) = velocities {
        obs.v_r = rec.v_r;
        obs.omega_phi = rec.omega_phi;
        obs.valid.v_r = true;
        obs.valid.omega_phi = true;
        if let Some(om_t) = rec.omega_theta {
            obs.omega_theta = om_t;
            obs.valid.omega_theta = true;
        }
        obs.plane_residual_rms = fit.residual_rms;
    }
    Ok(obs)
}
