use nalgebra::{Matrix3, Matrix6, Matrix6x3, Vector6};

use crate::error::{Error, Result};
use crate::estimation::Observation6D;
use crate::motion::TargetState6D;

/// Linear-Gaussian model for one tracked target. The state stacks the three
/// positions over the three velocities, so the transition block subtracts
/// velocity times the update interval from position, and the disturbance
/// matrix injects accelerations accordingly.
#[derive(Debug, Clone)]
pub struct KalmanModel {
    pub phi: Matrix6<f64>,
    pub b: Matrix6x3<f64>,
    pub g: Matrix6<f64>,
    pub q: Matrix6<f64>,
    pub r_cov: Matrix6<f64>,
}

const Q_FLOOR: f64 = 1e-9;
const COND_LIMIT: f64 = 1e12;

impl KalmanModel {
    /// Builds the model for an update interval of `t` seconds.
    ///
    /// `sigma_u` holds the per-axis disturbance (acceleration) standard
    /// deviations; `r_diag` the measurement variances. With
    /// `literal_predict` the covariance prediction is the bare similarity
    /// transform with no process noise, which reproduces the textbook
    /// recursion exactly but lets the gain collapse over long runs.
    pub fn new(t: f64, sigma_u: [f64; 3], r_diag: [f64; 6], literal_predict: bool) -> Result<Self> {
        if t <= 0.0 {
            return Err(Error::OutOfRange {
                what: "tracking interval",
                value: t,
                limit: 0.0,
            });
        }
        let i3 = Matrix3::identity();
        let mut phi = Matrix6::identity();
        phi.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-t * i3));
        let mut b = Matrix6x3::zeros();
        b.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&(-0.5 * t * t * i3));
        b.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-t * i3));
        let q = if literal_predict {
            Matrix6::zeros()
        } else {
            let du = Matrix3::from_diagonal(&nalgebra::Vector3::new(
                sigma_u[0] * sigma_u[0],
                sigma_u[1] * sigma_u[1],
                sigma_u[2] * sigma_u[2],
            ));
            b * du * b.transpose() + Matrix6::identity() * Q_FLOOR
        };
        let r_cov = Matrix6::from_diagonal(&Vector6::from_row_slice(&r_diag));
        Ok(Self {
            phi,
            b,
            g: Matrix6::identity(),
            q,
            r_cov,
        })
    }
}

/// Filtered state of one track after `step` updates.
#[derive(Debug, Clone)]
pub struct TrackState {
    pub estimate: TargetState6D,
    pub covariance: Matrix6<f64>,
    pub step: usize,
}

/// Output of the prediction half-step: predicted state, its image in
/// observation space, and the predicted covariance.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub state: Vector6<f64>,
    pub observation: Vector6<f64>,
    pub covariance: Matrix6<f64>,
}

fn first_invalid_field(obs: &Observation6D) -> Option<&'static str> {
    const NAMES: [&str; 6] = ["r", "theta", "phi", "v_r", "omega_theta", "omega_phi"];
    obs.valid
        .to_array()
        .iter()
        .position(|v| !v)
        .map(|i| NAMES[i])
}

/// Starts a track from a fully valid observation with identity covariance.
pub fn kf_init(s0: &Observation6D) -> Result<TrackState> {
    if let Some(field) = first_invalid_field(s0) {
        return Err(Error::InvalidObservation { field });
    }
    Ok(TrackState {
        estimate: s0.as_state(),
        covariance: Matrix6::identity(),
        step: 0,
    })
}

/// Propagates state and covariance one interval forward.
pub fn kf_predict(ts: &TrackState, model: &KalmanModel) -> Prediction {
    let s = Vector6::from_row_slice(&ts.estimate.to_array());
    let state = model.phi * s;
    let observation = model.g * state;
    let covariance = model.phi * ts.covariance * model.phi.transpose() + model.q;
    Prediction {
        state,
        observation,
        covariance,
    }
}

fn spectral_cond(m: &Matrix6<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Folds a fully valid observation into the prediction via the standard
/// gain, then symmetrizes the posterior covariance against rounding drift.
pub fn kf_update(
    ts: &TrackState,
    pred: &Prediction,
    z: &Observation6D,
    model: &KalmanModel,
) -> Result<TrackState> {
    if let Some(field) = first_invalid_field(z) {
        return Err(Error::InvalidObservation { field });
    }
    let innovation_cov = model.g * pred.covariance * model.g.transpose() + model.r_cov;
    let cond = spectral_cond(&innovation_cov);
    if cond > COND_LIMIT {
        return Err(Error::SingularInnovation { cond });
    }
    let inv = innovation_cov
        .try_inverse()
        .ok_or(Error::SingularInnovation { cond })?;
    let gain = pred.covariance * model.g.transpose() * inv;
    let zv = Vector6::from_row_slice(&z.to_array());
    let state = pred.state + gain * (zv - pred.observation);
    let mut covariance = (Matrix6::identity() - gain * model.g) * pred.covariance;
    covariance = (covariance + covariance.transpose()) * 0.5;
    Ok(TrackState {
        estimate: TargetState6D::from_array(state.as_slice().try_into().expect("length 6")),
        covariance,
        step: ts.step + 1,
    })
}

fn coast(ts: &TrackState, pred: &Prediction) -> TrackState {
    TrackState {
        estimate: TargetState6D::from_array(pred.state.as_slice().try_into().expect("length 6")),
        covariance: pred.covariance,
        step: ts.step + 1,
    }
}

/// Rewrites the two angle sequences so no consecutive pair of surviving
/// observations jumps by more than π; gaps carry the last unwrapped value
/// forward. The linear filter state stays on the continuous branch.
pub fn unwrap_angle_observations(observations: &mut [Option<Observation6D>]) {
    for pick in [1usize, 2] {
        let mut prev: Option<f64> = None;
        for obs in observations.iter_mut().flatten() {
            let raw = if pick == 1 { obs.theta } else { obs.phi };
            let adjusted = match prev {
                None => raw,
                Some(p) => p + crate::geometry::wrap_to_pi(raw - p),
            };
            if pick == 1 {
                obs.theta = adjusted;
            } else {
                obs.phi = adjusted;
            }
            prev = Some(adjusted);
        }
    }
}

/// Runs a full track over per-slot observations: initialize on the first
/// (which must be present and fully valid), then predict and update per
/// slot. Missing or partially invalid observations coast on the prediction
/// for up to `coast_limit` consecutive slots before the track is dropped.
/// Step errors carry their slot index.
pub fn track_sequence(
    observations: &[Option<Observation6D>],
    model: &KalmanModel,
    coast_limit: usize,
) -> Result<Vec<TrackState>> {
    let Some(first) = observations.first() else {
        return Err(Error::Config("tracking needs at least one slot".into()));
    };
    let Some(first) = first else {
        return Err(Error::Config(
            "the first tracking slot must carry an observation".into(),
        ));
    };
    let mut unwrapped = observations.to_vec();
    unwrap_angle_observations(&mut unwrapped);

    let mut states = Vec::with_capacity(unwrapped.len());
    let mut current = kf_init(unwrapped[0].as_ref().unwrap_or(first)).map_err(|e| e.at_step(0))?;
    states.push(current.clone());
    let mut misses = 0usize;
    for (l, obs) in unwrapped.iter().enumerate().skip(1) {
        let pred = kf_predict(&current, model);
        let usable = obs.as_ref().filter(|o| o.valid.all_valid());
        current = match usable {
            Some(z) => {
                misses = 0;
                kf_update(&current, &pred, z, model).map_err(|e| e.at_step(l))?
            }
            None => {
                misses += 1;
                if misses > coast_limit {
                    return Err(Error::TrackDropped {
                        consecutive_misses: misses,
                    }
                    .at_step(l));
                }
                coast(&current, &pred)
            }
        };
        states.push(current.clone());
    }
    Ok(states)
}
