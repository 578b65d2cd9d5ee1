use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{UpaGeometry, C_LIGHT};
use crate::motion::{DisturbanceSigma, FrameTiming, TargetState6D};

/// Radar front-end and frame parameters. Angles and times are SI; optional
/// fields fall back to the conventional defaults (guard = quarter symbol,
/// spacing = half wavelength).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarConfig {
    pub f0_hz: f64,
    pub delta_f_hz: f64,
    pub m_subcarriers: usize,
    pub n_symbols: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_guard_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_spacing_m: Option<f64>,
    pub n_h_x: usize,
    pub n_h_z: usize,
    pub n_r_x: usize,
    pub n_r_z: usize,
    pub p_t_w: f64,
    pub rho_sense: f64,
}

impl RadarConfig {
    pub fn lambda_m(&self) -> f64 {
        C_LIGHT / self.f0_hz
    }

    pub fn spacing_m(&self) -> f64 {
        self.d_spacing_m.unwrap_or(0.5 * self.lambda_m())
    }

    pub fn guard_s(&self) -> f64 {
        self.t_guard_s.unwrap_or(0.25 / self.delta_f_hz)
    }

    pub fn timing(&self, k_targets: usize) -> Result<FrameTiming> {
        FrameTiming::new(self.delta_f_hz, self.guard_s(), self.n_symbols, k_targets)
    }

    pub fn tx_array(&self) -> Result<UpaGeometry> {
        UpaGeometry::new(self.n_h_x, self.n_h_z, self.spacing_m(), self.f0_hz)
    }

    pub fn rx_array(&self) -> Result<UpaGeometry> {
        UpaGeometry::new(self.n_r_x, self.n_r_z, self.spacing_m(), self.f0_hz)
    }

    pub fn n_h(&self) -> usize {
        self.n_h_x * self.n_h_z
    }

    pub fn n_r(&self) -> usize {
        self.n_r_x * self.n_r_z
    }

    pub fn subcarrier_hz(&self, m: usize) -> f64 {
        self.f0_hz + m as f64 * self.delta_f_hz
    }

    /// Unambiguous one-way range window of the subcarrier phase map.
    pub fn range_window_m(&self) -> f64 {
        C_LIGHT / (4.0 * self.delta_f_hz)
    }

    /// Unambiguous radial-velocity window of the symbol phase map.
    pub fn velocity_window_mps(&self) -> Result<f64> {
        let t_s = self.timing(1)?.t_s;
        Ok(C_LIGHT / (8.0 * self.f0_hz * t_s))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f0_hz > 0.0) || !(self.delta_f_hz > 0.0) {
            return Err(Error::Config(
                "carrier and subcarrier spacing must be positive".into(),
            ));
        }
        if self.m_subcarriers < 2 || self.n_symbols < 2 {
            return Err(Error::Config(
                "need at least 2 subcarriers and 2 symbols".into(),
            ));
        }
        if !(self.p_t_w > 0.0) || !(0.0..=1.0).contains(&self.rho_sense) {
            return Err(Error::Config(
                "transmit power must be positive and rho_sense within [0, 1]".into(),
            ));
        }
        self.tx_array()?;
        self.rx_array()?;
        self.timing(1)?;
        Ok(())
    }
}

/// One point target: initial kinematic state plus mean radar cross section.
/// Angles in degrees and angular rates in degrees/second at this boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub r_m: f64,
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub v_r_mps: f64,
    pub omega_theta_dps: f64,
    pub omega_phi_dps: f64,
    #[serde(default = "default_rcs")]
    pub rcs_mean_m2: f64,
}

fn default_rcs() -> f64 {
    1.0
}

impl TargetSpec {
    pub fn state(&self) -> TargetState6D {
        TargetState6D {
            r: self.r_m,
            theta: self.theta_deg.to_radians(),
            phi: self.phi_deg.to_radians(),
            v_r: self.v_r_mps,
            omega_theta: self.omega_theta_dps.to_radians(),
            omega_phi: self.omega_phi_dps.to_radians(),
        }
    }

    pub fn from_state(state: &TargetState6D, rcs_mean_m2: f64) -> Self {
        Self {
            r_m: state.r,
            theta_deg: state.theta.to_degrees(),
            phi_deg: state.phi.to_degrees(),
            v_r_mps: state.v_r,
            omega_theta_dps: state.omega_theta.to_degrees(),
            omega_phi_dps: state.omega_phi.to_degrees(),
            rcs_mean_m2,
        }
    }
}

/// One static scatterer for the explicit clutter model. Its reflection
/// amplitude follows the same path-loss law as targets, with a fixed cross
/// section (static environment does not fade).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScattererSpec {
    pub r_m: f64,
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub rcs_m2: f64,
}

/// Static background model. `Gaussian` draws one random flat-fading matrix
/// per (slot, subcarrier), held constant across the slot's symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClutterConfig {
    Off,
    Gaussian { beta: f64 },
    Scatterers { scatterers: Vec<ScattererSpec> },
}

impl Default for ClutterConfig {
    fn default() -> Self {
        ClutterConfig::Off
    }
}

impl ClutterConfig {
    pub fn is_off(&self) -> bool {
        matches!(self, ClutterConfig::Off)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub targets: Vec<TargetSpec>,
    #[serde(default)]
    pub clutter: ClutterConfig,
    /// When set, radar cross sections are pinned to their means and echo
    /// phases to zero instead of being drawn per slot. Used by noiseless
    /// oracle runs.
    #[serde(default)]
    pub deterministic_rcs: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

/// Optional fixed measurement standard deviations for the tracker. When
/// absent, the harness calibrates them from single-shot trials at the
/// operating SNR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementStd {
    pub r_m: f64,
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub v_r_mps: f64,
    pub omega_theta_dps: f64,
    pub omega_phi_dps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackingConfig {
    pub duration_s: f64,
    pub updates: usize,
    pub snr_db: f64,
    /// Initial target for the tracking run; falls back to the first scene
    /// target when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
    #[serde(default = "default_calibration_trials")]
    pub calibration_trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement_std: Option<MeasurementStd>,
    #[serde(default = "default_sigma_u_r")]
    pub sigma_u_r_mps2: f64,
    #[serde(default = "default_sigma_u_angle")]
    pub sigma_u_theta_dps2: f64,
    #[serde(default = "default_sigma_u_angle")]
    pub sigma_u_phi_dps2: f64,
    #[serde(default = "default_coast_limit")]
    pub coast_limit: usize,
    /// Pure textbook predict without process noise, matching the source
    /// model literally; diverges under disturbance and exists for
    /// comparison runs.
    #[serde(default)]
    pub literal_predict: bool,
}

fn default_calibration_trials() -> usize {
    25
}

fn default_sigma_u_r() -> f64 {
    0.05
}

fn default_sigma_u_angle() -> f64 {
    0.1
}

fn default_coast_limit() -> usize {
    3
}

impl TrackingConfig {
    pub fn disturbance_sigma(&self) -> DisturbanceSigma {
        DisturbanceSigma {
            u_r: self.sigma_u_r_mps2,
            u_theta: self.sigma_u_theta_dps2.to_radians(),
            u_phi: self.sigma_u_phi_dps2.to_radians(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    SingleShot,
    Tracking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Per-trial JSON-lines debug dump alongside the CSV report.
    pub emit_trials: bool,
    /// Binary echo-cube dump of the first trial of each SNR point.
    pub dump_cubes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: RunMode,
    pub radar: RadarConfig,
    pub scene: SceneConfig,
    pub sweep: SweepConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracking: Option<TrackingConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.radar.validate()?;
        if self.scene.targets.is_empty() && matches!(self.mode, RunMode::Tracking) {
            let has_tracking_target = self
                .tracking
                .as_ref()
                .map(|t| t.target.is_some())
                .unwrap_or(false);
            if !has_tracking_target {
                return Err(Error::Config("tracking mode needs a target".into()));
            }
        }
        for t in &self.scene.targets {
            if !(t.r_m > 0.0) {
                return Err(Error::Config(format!(
                    "target range must be positive, got {}",
                    t.r_m
                )));
            }
        }
        if matches!(self.mode, RunMode::Tracking) && self.tracking.is_none() {
            return Err(Error::Config(
                "tracking mode needs a [tracking] section".into(),
            ));
        }
        if let Some(t) = &self.tracking {
            if t.updates == 0 || !(t.duration_s > 0.0) {
                return Err(Error::Config(
                    "tracking needs positive duration and update count".into(),
                ));
            }
        }
        Ok(())
    }

    /// Full-scale configuration: 100 GHz carrier, 480 kHz spacing, 128
    /// subcarriers, 64 symbols, 8x8 transmit and 16x16 receive arrays.
    /// Single-shot sweep over a mid-range target, plus a tracking scenario.
    pub fn paper_preset() -> Self {
        ExperimentConfig {
            mode: RunMode::SingleShot,
            radar: RadarConfig {
                f0_hz: 1.0e11,
                delta_f_hz: 4.8e5,
                m_subcarriers: 128,
                n_symbols: 64,
                t_guard_s: None,
                d_spacing_m: None,
                n_h_x: 8,
                n_h_z: 8,
                n_r_x: 16,
                n_r_z: 16,
                p_t_w: 1.0,
                rho_sense: 1.0,
            },
            scene: SceneConfig {
                targets: vec![TargetSpec {
                    r_m: 120.0,
                    theta_deg: 90.0,
                    phi_deg: 20.0,
                    v_r_mps: 15.0,
                    omega_theta_dps: 0.0,
                    omega_phi_dps: 8.0,
                    rcs_mean_m2: 1.0,
                }],
                clutter: ClutterConfig::Off,
                deterministic_rcs: false,
            },
            sweep: SweepConfig {
                snr_db: vec![0.0, 10.0, 20.0],
                trials: 500,
                seed: 1,
            },
            tracking: Some(TrackingConfig {
                duration_s: 8.0,
                updates: 40,
                snr_db: 0.0,
                target: Some(TargetSpec {
                    r_m: 100.0,
                    theta_deg: 90.0,
                    phi_deg: 55.0,
                    v_r_mps: 8.0,
                    omega_theta_dps: 0.0,
                    omega_phi_dps: 4.0,
                    rcs_mean_m2: 1.0,
                }),
                calibration_trials: 25,
                measurement_std: None,
                sigma_u_r_mps2: 0.05,
                sigma_u_theta_dps2: 0.1,
                sigma_u_phi_dps2: 0.1,
                coast_limit: 3,
                literal_predict: false,
            }),
            output: OutputConfig::default(),
        }
    }

    /// Reduced configuration for fast iteration: 64 subcarriers, 32 symbols,
    /// 4x4 transmit and 8x8 receive arrays, 100 trials.
    pub fn desk_preset() -> Self {
        let mut cfg = Self::paper_preset();
        cfg.radar.m_subcarriers = 64;
        cfg.radar.n_symbols = 32;
        cfg.radar.n_h_x = 4;
        cfg.radar.n_h_z = 4;
        cfg.radar.n_r_x = 8;
        cfg.radar.n_r_z = 8;
        cfg.sweep.trials = 100;
        cfg
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper" => Ok(Self::paper_preset()),
            "desk" => Ok(Self::desk_preset()),
            other => Err(Error::Config(format!(
                "unknown preset '{other}' (expected 'paper' or 'desk')"
            ))),
        }
    }
}
