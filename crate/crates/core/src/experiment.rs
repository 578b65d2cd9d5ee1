use std::fs;
use std::path::Path;
use std::time::Instant;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{
    gaussian_clutter_channel, path_loss_alpha, scatterer_clutter_channel, ChannelMatrix, RcsMode,
};
use crate::config::{ClutterConfig, ExperimentConfig, RunMode, TargetSpec};
use crate::echo::{
    add_noise, erase_symbols, filter_static_clutter, generate_echo_cube, promote_clutter_free,
    EchoCube, SlotTarget, TransmitPlan,
};
use crate::error::{Error, Result};
use crate::estimation::{single_shot_sense, Observation6D};
use crate::geometry::{direction_cosines, wrap_to_pi};
use crate::motion::{sample_disturbance, step_long_term, TargetState6D};
use crate::tracking::{kf_init, kf_predict, kf_update, KalmanModel, TrackState};

/// Report field order: range (m), azimuth (deg), elevation (deg), radial
/// velocity (m/s), azimuth rate (deg/s), elevation rate (deg/s). Internal
/// state keeps radians; conversion happens at the report boundary.
pub const PARAMETER_NAMES: [&str; 6] = [
    "r_m",
    "theta_deg",
    "phi_deg",
    "v_r_mps",
    "omega_theta_dps",
    "omega_phi_dps",
];

const ANGLE_FIELD: [bool; 6] = [false, true, true, false, true, true];

/// Variance floor for calibrated measurement noise, keeping the innovation
/// covariance invertible when calibration errors are at machine precision.
const R_VARIANCE_FLOOR: f64 = 1e-12;

/// A filtered track whose range error exceeds the per-slot measurement
/// error by this factor over the scored window is flagged as diverged.
const DIVERGENCE_RATIO: f64 = 10.0;

fn to_report_units(field: usize, value: f64) -> f64 {
    if ANGLE_FIELD[field] {
        value.to_degrees()
    } else {
        value
    }
}

/// Direction fields are scored on the principal branch: a tracked angle that
/// has accumulated whole turns still points at the same physical direction,
/// so only the wrapped residual is a measurable error. Rates are not wrapped.
const DIRECTION_FIELD: [bool; 6] = [false, true, true, false, false, false];

fn report_error(field: usize, estimate: f64, truth: f64) -> f64 {
    let raw = estimate - truth;
    let err = if DIRECTION_FIELD[field] {
        wrap_to_pi(raw)
    } else {
        raw
    };
    to_report_units(field, err)
}

/// One RMSE table row: one parameter at one operating point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmsePoint {
    pub snr_db: f64,
    pub parameter: String,
    pub rmse: f64,
    pub trials: usize,
    pub failures: usize,
}

/// Per-trial outcome kept for the JSON-lines debug dump.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub snr_db: f64,
    pub trial: usize,
    pub target: usize,
    pub truth: [f64; 6],
    pub estimate: Option<[f64; 6]>,
    pub valid: [bool; 6],
    pub plane_residual_rms: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmseReport {
    pub points: Vec<RmsePoint>,
    pub trial_records: Vec<TrialRecord>,
    pub wall_clock_s: f64,
}

impl RmseReport {
    pub fn rmse(&self, snr_db: f64, parameter: &str) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.snr_db == snr_db && p.parameter == parameter)
            .map(|p| p.rmse)
    }

    pub fn failures(&self, snr_db: f64, parameter: &str) -> Option<usize> {
        self.points
            .iter()
            .find(|p| p.snr_db == snr_db && p.parameter == parameter)
            .map(|p| p.failures)
    }
}

/// Root-mean-square deviation of the estimates from a common truth.
pub fn compute_rmse(estimates: &[f64], truth: f64) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::Config("rmse needs at least one estimate".into()));
    }
    let sum: f64 = estimates.iter().map(|e| (e - truth) * (e - truth)).sum();
    Ok((sum / estimates.len() as f64).sqrt())
}

fn rmse_of_errors(errors: &[f64]) -> f64 {
    if errors.is_empty() {
        return f64::NAN;
    }
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

/// Per-trial RNG streams, one namespace per purpose so adding draws to one
/// code path never shifts another. Trials are schedule-invariant: each gets
/// its own counter-mode stream of the experiment seed.
fn trial_stream(purpose: u8, block: usize, index: usize) -> u64 {
    ((purpose as u64) << 56) | ((block as u64 & 0xFFFF) << 40) | (index as u64 & 0xFF_FFFF_FFFF)
}

const STREAM_SINGLE_SHOT: u8 = 1;
const STREAM_TRACK_SLOT: u8 = 2;
const STREAM_CALIBRATION: u8 = 3;
const STREAM_DISTURBANCE: u8 = 4;

fn trial_rng(seed: u64, purpose: u8, block: usize, index: usize) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(trial_stream(purpose, block, index));
    rng
}

/// Deterministic multi-scatterer background, shared across every trial of an
/// experiment; one matrix per subcarrier.
fn fixed_clutter_matrices(cfg: &ExperimentConfig) -> Result<Option<Vec<ChannelMatrix>>> {
    let ClutterConfig::Scatterers { scatterers } = &cfg.scene.clutter else {
        return Ok(None);
    };
    let radar = &cfg.radar;
    let tx = radar.tx_array()?;
    let rx = radar.rx_array()?;
    let mats = (0..radar.m_subcarriers)
        .map(|m| {
            scatterer_clutter_channel(
                scatterers,
                &rx,
                &tx,
                radar.f0_hz,
                radar.subcarrier_hz(m),
                radar.lambda_m(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(mats))
}

fn reduce_to_dynamic(eec: EchoCube, clutter_present: bool) -> Result<EchoCube> {
    if clutter_present {
        filter_static_clutter(eec)
    } else {
        promote_clutter_free(eec)
    }
}

/// Synthesizes one slot's dynamic-target cube at the requested SNR.
///
/// The SNR is calibrated per trial: the slot is first rendered without
/// noise, reduced to its dynamic-target cube, and its mean sample power
/// becomes the signal reference; the raw-domain noise variance is then
/// `P_sig * 10^(-snr/10)`. An infinite SNR short-circuits to the noiseless
/// cube. All randomness (symbols, fading, background, noise) comes from the
/// caller's RNG in a fixed order.
fn synthesize_slot(
    cfg: &ExperimentConfig,
    fixed_clutter: Option<&[ChannelMatrix]>,
    truth: &TargetState6D,
    rcs_mean: f64,
    beam: &TargetState6D,
    snr_db: f64,
    rng: &mut ChaCha12Rng,
) -> Result<EchoCube> {
    let radar = &cfg.radar;
    let (psi, omega) = direction_cosines(beam.theta, beam.phi);
    let plan = TransmitPlan::qpsk(
        psi,
        omega,
        radar.rho_sense * radar.p_t_w,
        radar.n_symbols,
        radar.m_subcarriers,
        rng,
    )?;
    let mode = if cfg.scene.deterministic_rcs {
        RcsMode::Deterministic
    } else {
        RcsMode::Swerling1
    };
    let alpha = path_loss_alpha(truth.r, radar.lambda_m(), rcs_mean, mode, false, rng)?.alpha;

    let drawn_clutter: Option<Vec<ChannelMatrix>> = match &cfg.scene.clutter {
        ClutterConfig::Gaussian { beta } => {
            let tx = radar.tx_array()?;
            let rx = radar.rx_array()?;
            Some(
                (0..radar.m_subcarriers)
                    .map(|_| gaussian_clutter_channel(*beta, &rx, &tx, rng))
                    .collect(),
            )
        }
        _ => None,
    };
    let clutter = drawn_clutter.as_deref().or(fixed_clutter);
    let clutter_present = clutter.is_some();

    let mut raw = generate_echo_cube(
        &[SlotTarget {
            state: *truth,
            alpha,
        }],
        clutter,
        radar,
        &plan,
        0.0,
        rng,
    )?;

    if !snr_db.is_finite() && snr_db > 0.0 {
        let eec = erase_symbols(raw, &plan)?;
        return reduce_to_dynamic(eec, clutter_present);
    }

    let clean_eec = erase_symbols(raw.clone(), &plan)?;
    let p_sig = reduce_to_dynamic(clean_eec, clutter_present)?.mean_power();
    if !(p_sig > 0.0) {
        return Err(Error::Config(
            "slot has zero dynamic signal power; SNR is undefined".into(),
        ));
    }
    let sigma2 = p_sig * 10f64.powf(-snr_db / 10.0);
    add_noise(&mut raw, sigma2, rng)?;
    let eec = erase_symbols(raw, &plan)?;
    reduce_to_dynamic(eec, clutter_present)
}

fn sense_slot(
    cfg: &ExperimentConfig,
    fixed_clutter: Option<&[ChannelMatrix]>,
    truth: &TargetState6D,
    rcs_mean: f64,
    beam: &TargetState6D,
    snr_db: f64,
    rng: &mut ChaCha12Rng,
    keep_cube: bool,
) -> Result<(Result<Observation6D>, Option<EchoCube>)> {
    let cube = synthesize_slot(cfg, fixed_clutter, truth, rcs_mean, beam, snr_db, rng)?;
    let obs = single_shot_sense(&cube, &cfg.radar, Some(beam));
    Ok((obs, keep_cube.then_some(cube)))
}

struct TargetTrialOutcome {
    target: usize,
    truth: [f64; 6],
    outcome: std::result::Result<Observation6D, String>,
    cube: Option<EchoCube>,
}

/// Monte-Carlo single-shot sweep over the configured SNR list.
///
/// Each (SNR, trial, target) combination synthesizes an independent slot
/// (the transmit beam pointed at the true target direction, one target per
/// slot per the time-division observation model) and runs the full
/// estimation chain. Ground truth per field is the slot-start state.
/// Estimation failures are excluded from the RMSE and counted per field;
/// invalid velocity fields likewise. When `out_dir` is given the report CSV
/// lands there, plus debug dumps per the output flags.
pub fn run_single_shot_experiment(
    cfg: &ExperimentConfig,
    out_dir: Option<&Path>,
) -> Result<RmseReport> {
    if !matches!(cfg.mode, RunMode::SingleShot) {
        return Err(Error::Config(
            "run_single_shot_experiment needs mode = single_shot".into(),
        ));
    }
    cfg.validate()?;
    let start = Instant::now();
    let fixed_clutter = fixed_clutter_matrices(cfg)?;
    let dump_cubes = cfg.output.dump_cubes && out_dir.is_some();

    let mut points = Vec::new();
    let mut trial_records = Vec::new();
    let mut cube_dumps: Vec<(f64, EchoCube)> = Vec::new();

    for (si, &snr_db) in cfg.sweep.snr_db.iter().enumerate() {
        let trial_outcomes: Vec<Vec<TargetTrialOutcome>> = (0..cfg.sweep.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = trial_rng(cfg.sweep.seed, STREAM_SINGLE_SHOT, si, trial);
                cfg.scene
                    .targets
                    .iter()
                    .enumerate()
                    .map(|(ti, spec)| {
                        let truth = spec.state();
                        let keep = dump_cubes && trial == 0;
                        let (obs, cube) = sense_slot(
                            cfg,
                            fixed_clutter.as_deref(),
                            &truth,
                            spec.rcs_mean_m2,
                            &truth,
                            snr_db,
                            &mut rng,
                            keep,
                        )?;
                        Ok(TargetTrialOutcome {
                            target: ti,
                            truth: truth.to_array(),
                            outcome: obs.map_err(|e| e.to_string()),
                            cube,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;

        let mut errors: [Vec<f64>; 6] = Default::default();
        let mut attempts = 0usize;
        for (trial, outcomes) in trial_outcomes.into_iter().enumerate() {
            for mut out in outcomes {
                attempts += 1;
                if let Some(cube) = out.cube.take() {
                    cube_dumps.push((snr_db, cube));
                }
                let record = match &out.outcome {
                    Ok(obs) => {
                        let est = obs.to_array();
                        let valid = obs.valid.to_array();
                        for f in 0..6 {
                            if valid[f] {
                                errors[f].push(report_error(f, est[f], out.truth[f]));
                            }
                        }
                        TrialRecord {
                            snr_db,
                            trial,
                            target: out.target,
                            truth: out.truth,
                            estimate: Some(est),
                            valid,
                            plane_residual_rms: obs
                                .plane_residual_rms
                                .is_finite()
                                .then_some(obs.plane_residual_rms),
                            failure: None,
                        }
                    }
                    Err(reason) => TrialRecord {
                        snr_db,
                        trial,
                        target: out.target,
                        truth: out.truth,
                        estimate: None,
                        valid: [false; 6],
                        plane_residual_rms: None,
                        failure: Some(reason.clone()),
                    },
                };
                trial_records.push(record);
            }
        }
        if attempts > 0 {
            for f in 0..6 {
                points.push(RmsePoint {
                    snr_db,
                    parameter: PARAMETER_NAMES[f].to_string(),
                    rmse: rmse_of_errors(&errors[f]),
                    trials: errors[f].len(),
                    failures: attempts - errors[f].len(),
                });
            }
        }
    }

    let report = RmseReport {
        points,
        trial_records,
        wall_clock_s: start.elapsed().as_secs_f64(),
    };

    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("rmse.csv"), render_rmse_csv(cfg, &report.points)?)?;
        if cfg.output.emit_trials {
            write_trial_records(&dir.join("trials.jsonl"), &report.trial_records)?;
        }
        for (snr_db, cube) in &cube_dumps {
            let mut file = fs::File::create(dir.join(format!("cube_snr_{snr_db}_trial0.bin")))?;
            cube.write_binary(&mut file)?;
        }
    }
    Ok(report)
}

/// One logged tracking step: ground truth, the slot's raw estimate, the
/// filter's prediction and posterior, all in state units (m, rad, m/s,
/// rad/s).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackStepLog {
    pub step: usize,
    pub time_s: f64,
    pub truth: [f64; 6],
    pub observation: Option<[f64; 6]>,
    pub obs_valid: [bool; 6],
    pub predicted: Option<[f64; 6]>,
    pub filtered: [f64; 6],
    pub cov_trace: f64,
    pub coasted: bool,
    pub failure: Option<String>,
}

#[derive(Debug)]
pub struct TrackingReport {
    pub steps: Vec<TrackStepLog>,
    pub rmse: RmseReport,
    /// Step index at which the track exceeded the coast limit, if it did.
    pub dropped_at: Option<usize>,
    /// Filtered range error blew past the per-slot measurement error over
    /// the scored window; expected for the no-process-noise filter mode
    /// under disturbance.
    pub diverged: bool,
    /// Measurement standard deviations used for the filter (state units).
    pub measurement_std: [f64; 6],
}

/// Root-mean-square single-shot error per field at the tracking operating
/// point, used as the filter's measurement noise when the config does not
/// pin one. Biases (not just spread) belong in R, so the RMS is taken about
/// the truth, not the sample mean.
fn calibrate_measurement_std(
    cfg: &ExperimentConfig,
    fixed_clutter: Option<&[ChannelMatrix]>,
    spec: &TargetSpec,
    snr_db: f64,
    trials: usize,
) -> Result<[f64; 6]> {
    let truth = spec.state();
    let samples: Vec<Option<Observation6D>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(cfg.sweep.seed, STREAM_CALIBRATION, 0, trial);
            sense_slot(
                cfg,
                fixed_clutter,
                &truth,
                spec.rcs_mean_m2,
                &truth,
                snr_db,
                &mut rng,
                false,
            )
            .map(|(obs, _)| obs.ok())
        })
        .collect::<Result<Vec<_>>>()?;

    let truth_arr = truth.to_array();
    let mut std = [0.0f64; 6];
    for f in 0..6 {
        let errs: Vec<f64> = samples
            .iter()
            .flatten()
            .filter(|o| o.valid.to_array()[f])
            .map(|o| o.to_array()[f] - truth_arr[f])
            .collect();
        if errs.is_empty() {
            return Err(Error::Config(format!(
                "measurement calibration produced no valid samples for {}",
                PARAMETER_NAMES[f]
            )));
        }
        std[f] = rmse_of_errors(&errs).max(R_VARIANCE_FLOOR.sqrt());
    }
    Ok(std)
}

fn pinned_measurement_std(m: &crate::config::MeasurementStd) -> [f64; 6] {
    [
        m.r_m,
        m.theta_deg.to_radians(),
        m.phi_deg.to_radians(),
        m.v_r_mps,
        m.omega_theta_dps.to_radians(),
        m.omega_phi_dps.to_radians(),
    ]
}

/// Full closed-loop tracking run: ground truth propagates under random
/// accelerations between slots; each slot is sensed with the transmit beam
/// pointed at the filter's prediction (the truth at the first slot, before a
/// track exists) and the estimate is folded into the filter. Missing or
/// partially invalid slot estimates coast on the prediction; exceeding the
/// coast limit drops the track, which is logged, not an error. The report
/// scores filtered against single-shot RMSE over the last half of the run.
pub fn run_tracking_experiment(
    cfg: &ExperimentConfig,
    out_dir: Option<&Path>,
) -> Result<TrackingReport> {
    if !matches!(cfg.mode, RunMode::Tracking) {
        return Err(Error::Config(
            "run_tracking_experiment needs mode = tracking".into(),
        ));
    }
    cfg.validate()?;
    let start = Instant::now();
    let tracking = cfg.tracking.as_ref().expect("validated tracking section");
    let spec = tracking
        .target
        .as_ref()
        .or_else(|| cfg.scene.targets.first())
        .expect("validated tracking target")
        .clone();
    let fixed_clutter = fixed_clutter_matrices(cfg)?;
    let snr_db = tracking.snr_db;
    let t_update = tracking.duration_s / tracking.updates as f64;

    let measurement_std = match &tracking.measurement_std {
        Some(pinned) => pinned_measurement_std(pinned),
        None => calibrate_measurement_std(
            cfg,
            fixed_clutter.as_deref(),
            &spec,
            snr_db,
            tracking.calibration_trials.max(2),
        )?,
    };
    let r_diag: [f64; 6] =
        std::array::from_fn(|f| (measurement_std[f] * measurement_std[f]).max(R_VARIANCE_FLOOR));
    let sigma = tracking.disturbance_sigma();
    let model = KalmanModel::new(
        t_update,
        [sigma.u_r, sigma.u_theta, sigma.u_phi],
        r_diag,
        tracking.literal_predict,
    )?;

    let mut disturbance_rng = trial_rng(cfg.sweep.seed, STREAM_DISTURBANCE, 0, 0);
    let mut steps: Vec<TrackStepLog> = Vec::with_capacity(tracking.updates + 1);
    let mut dropped_at = None;

    let mut truth = spec.state();
    let mut slot_rng = trial_rng(cfg.sweep.seed, STREAM_TRACK_SLOT, 0, 0);
    let (first_obs, _) = sense_slot(
        cfg,
        fixed_clutter.as_deref(),
        &truth,
        spec.rcs_mean_m2,
        &truth,
        snr_db,
        &mut slot_rng,
        false,
    )?;
    let first_obs = first_obs.map_err(|e| e.at_step(0))?;
    let mut track = kf_init(&first_obs).map_err(|e| e.at_step(0))?;
    steps.push(TrackStepLog {
        step: 0,
        time_s: 0.0,
        truth: truth.to_array(),
        observation: Some(first_obs.to_array()),
        obs_valid: first_obs.valid.to_array(),
        predicted: None,
        filtered: track.estimate.to_array(),
        cov_trace: track.covariance.trace(),
        coasted: false,
        failure: None,
    });

    let mut misses = 0usize;
    for l in 1..=tracking.updates {
        let u = sample_disturbance(&mut disturbance_rng, &sigma);
        truth = step_long_term(&truth, &u, t_update).map_err(|e| e.at_step(l))?;

        let pred = kf_predict(&track, &model);
        let beam = TargetState6D::from_array(pred.state.as_slice().try_into().expect("length 6"));
        let mut slot_rng = trial_rng(cfg.sweep.seed, STREAM_TRACK_SLOT, 0, l);
        let (obs_result, _) = sense_slot(
            cfg,
            fixed_clutter.as_deref(),
            &truth,
            spec.rcs_mean_m2,
            &beam,
            snr_db,
            &mut slot_rng,
            false,
        )?;

        let mut log = TrackStepLog {
            step: l,
            time_s: l as f64 * t_update,
            truth: truth.to_array(),
            observation: None,
            obs_valid: [false; 6],
            predicted: Some(std::array::from_fn(|i| pred.state[i])),
            filtered: [0.0; 6],
            cov_trace: 0.0,
            coasted: false,
            failure: None,
        };
        let usable = match obs_result {
            Ok(mut obs) => {
                obs.theta = pred.observation[1] + wrap_to_pi(obs.theta - pred.observation[1]);
                obs.phi = pred.observation[2] + wrap_to_pi(obs.phi - pred.observation[2]);
                log.observation = Some(obs.to_array());
                log.obs_valid = obs.valid.to_array();
                obs.valid.all_valid().then_some(obs)
            }
            Err(e) => {
                log.failure = Some(e.to_string());
                None
            }
        };
        track = match usable {
            Some(obs) => {
                misses = 0;
                kf_update(&track, &pred, &obs, &model).map_err(|e| e.at_step(l))?
            }
            None => {
                misses += 1;
                log.coasted = true;
                TrackState {
                    estimate: TargetState6D::from_array(std::array::from_fn(|i| pred.state[i])),
                    covariance: pred.covariance,
                    step: track.step + 1,
                }
            }
        };
        log.filtered = track.estimate.to_array();
        log.cov_trace = track.covariance.trace();
        steps.push(log);
        if misses > tracking.coast_limit {
            dropped_at = Some(l);
            break;
        }
    }

    let half_start = steps.len() / 2;
    let scored = &steps[half_start..];
    let mut points = Vec::new();
    let mut filtered_r = f64::NAN;
    let mut single_shot_r = f64::NAN;
    for f in 0..6 {
        let filt_errs: Vec<f64> = scored
            .iter()
            .map(|s| report_error(f, s.filtered[f], s.truth[f]))
            .collect();
        let ss_errs: Vec<f64> = scored
            .iter()
            .filter(|s| s.obs_valid[f])
            .filter_map(|s| s.observation.map(|o| report_error(f, o[f], s.truth[f])))
            .collect();
        if f == 0 {
            filtered_r = rmse_of_errors(&filt_errs);
            single_shot_r = rmse_of_errors(&ss_errs);
        }
        points.push(RmsePoint {
            snr_db,
            parameter: format!("{}_filtered", PARAMETER_NAMES[f]),
            rmse: rmse_of_errors(&filt_errs),
            trials: filt_errs.len(),
            failures: scored.len() - filt_errs.len(),
        });
        points.push(RmsePoint {
            snr_db,
            parameter: format!("{}_single_shot", PARAMETER_NAMES[f]),
            rmse: rmse_of_errors(&ss_errs),
            trials: ss_errs.len(),
            failures: scored.len() - ss_errs.len(),
        });
    }
    let diverged = filtered_r.is_finite()
        && single_shot_r.is_finite()
        && filtered_r > DIVERGENCE_RATIO * single_shot_r + 1e-9;

    let report = TrackingReport {
        steps,
        rmse: RmseReport {
            points,
            trial_records: Vec::new(),
            wall_clock_s: start.elapsed().as_secs_f64(),
        },
        dropped_at,
        diverged,
        measurement_std,
    };

    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        fs::write(
            dir.join("tracking_rmse.csv"),
            render_rmse_csv(cfg, &report.rmse.points)?,
        )?;
        fs::write(dir.join("track_log.csv"), render_track_log_csv(&report)?)?;
    }
    Ok(report)
}

fn csv_header_comment(cfg: &ExperimentConfig) -> String {
    let r = &cfg.radar;
    let mut s = String::new();
    s.push_str(&format!("# seed = {}\n", cfg.sweep.seed));
    s.push_str(&format!(
        "# radar: f0 = {} Hz, delta_f = {} Hz, M = {}, N = {}, N_H = {}x{}, N_R = {}x{}\n",
        r.f0_hz, r.delta_f_hz, r.m_subcarriers, r.n_symbols, r.n_h_x, r.n_h_z, r.n_r_x, r.n_r_z
    ));
    s.push_str(
        "# snr definition: 10*log10(mean |noiseless dynamic-echo sample|^2 / raw noise \
         variance), noise calibrated per trial against the same trial's noiseless cube\n",
    );
    s.push_str("# angles and angular rates reported in degrees\n");
    s
}

fn render_rmse_csv(cfg: &ExperimentConfig, points: &[RmsePoint]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["snr_db", "parameter", "rmse", "trials", "failures"])
        .map_err(|e| Error::Config(e.to_string()))?;
    for p in points {
        wtr.write_record([
            p.snr_db.to_string(),
            p.parameter.clone(),
            p.rmse.to_string(),
            p.trials.to_string(),
            p.failures.to_string(),
        ])
        .map_err(|e| Error::Config(e.to_string()))?;
    }
    let body = wtr.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    let mut out = csv_header_comment(cfg);
    out.push_str(&String::from_utf8(body).map_err(|e| Error::Config(e.to_string()))?);
    Ok(out)
}

fn render_track_log_csv(report: &TrackingReport) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = vec!["step".into(), "time_s".into()];
    for prefix in ["truth", "obs", "pred", "filt"] {
        for name in PARAMETER_NAMES {
            header.push(format!("{prefix}_{name}"));
        }
    }
    header.push("cov_trace".into());
    header.push("coasted".into());
    wtr.write_record(&header)
        .map_err(|e| Error::Config(e.to_string()))?;

    let field = |arr: &Option<[f64; 6]>, f: usize| -> String {
        match arr {
            Some(a) => to_report_units(f, a[f]).to_string(),
            None => String::new(),
        }
    };
    for s in &report.steps {
        let mut row: Vec<String> = vec![s.step.to_string(), s.time_s.to_string()];
        let truth = Some(s.truth);
        let filtered = Some(s.filtered);
        for arr in [&truth, &s.observation, &s.predicted, &filtered] {
            for f in 0..6 {
                row.push(field(arr, f));
            }
        }
        row.push(s.cov_trace.to_string());
        row.push(if s.coasted { "1" } else { "0" }.into());
        wtr.write_record(&row)
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let body = wtr.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    String::from_utf8(body).map_err(|e| Error::Config(e.to_string()))
}

fn write_trial_records(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).map_err(|e| Error::Config(e.to_string()))?);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Noiseless single-slot check against the scene's first target:
/// deterministic fading, zero noise, beam on the true direction. Returns
/// the slot-start truth, the direction truth at the slot's power centroid
/// (what the subspace estimates land on while the target turns within the
/// slot), and the estimate.
#[derive(Debug, Clone)]
pub struct OracleOutcome {
    pub truth: TargetState6D,
    pub centroid_theta: f64,
    pub centroid_phi: f64,
    pub observation: Observation6D,
    pub elapsed_s: f64,
}

pub fn run_noiseless_oracle(cfg: &ExperimentConfig) -> Result<OracleOutcome> {
    let spec = cfg
        .scene
        .targets
        .first()
        .ok_or_else(|| Error::Config("oracle needs a scene target".into()))?;
    let mut cfg = cfg.clone();
    cfg.scene.deterministic_rcs = true;
    let start = Instant::now();
    let fixed_clutter = fixed_clutter_matrices(&cfg)?;
    let truth = spec.state();
    let mut rng = trial_rng(cfg.sweep.seed, STREAM_SINGLE_SHOT, 0, 0);
    let (obs, _) = sense_slot(
        &cfg,
        fixed_clutter.as_deref(),
        &truth,
        spec.rcs_mean_m2,
        &truth,
        f64::INFINITY,
        &mut rng,
        false,
    )?;
    let observation = obs?;
    let t_s = cfg.radar.timing(1)?.t_s;
    let half_span = 0.5 * (cfg.radar.n_symbols as f64 - 1.0) * t_s;
    Ok(OracleOutcome {
        truth,
        centroid_theta: truth.theta - truth.omega_theta * half_span,
        centroid_phi: truth.phi - truth.omega_phi * half_span,
        observation,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}
