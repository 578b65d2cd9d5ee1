use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kinematic state of one point target in spherical coordinates.
/// Sign convention: positive `v_r` decreases `r`, positive `omega_theta`
/// decreases `theta`, positive `omega_phi` decreases `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetState6D {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
    pub v_r: f64,
    pub omega_theta: f64,
    pub omega_phi: f64,
}

impl TargetState6D {
    pub fn to_array(self) -> [f64; 6] {
        [
            self.r,
            self.theta,
            self.phi,
            self.v_r,
            self.omega_theta,
            self.omega_phi,
        ]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self {
            r: a[0],
            theta: a[1],
            phi: a[2],
            v_r: a[3],
            omega_theta: a[4],
            omega_phi: a[5],
        }
    }
}

/// Random accelerations acting over one long-term interval.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Disturbance3D {
    pub u_r: f64,
    pub u_theta: f64,
    pub u_phi: f64,
}

/// OFDM frame timing. `t_sym` is the useful symbol time 1/Δf, `t_s` the full
/// symbol including the guard, `t_uts` one target's slot of N symbols and
/// `t_tts` the full round over all K targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameTiming {
    pub delta_f: f64,
    pub t_sym: f64,
    pub t_guard: f64,
    pub t_s: f64,
    pub n_symbols: usize,
    pub t_uts: f64,
    pub k_targets: usize,
    pub t_tts: f64,
}

impl FrameTiming {
    pub fn new(delta_f: f64, t_guard: f64, n_symbols: usize, k_targets: usize) -> Result<Self> {
        if !(delta_f > 0.0) {
            return Err(Error::Config(format!(
                "subcarrier spacing must be positive, got {delta_f}"
            )));
        }
        if t_guard < 0.0 {
            return Err(Error::Config(format!(
                "guard time must be nonnegative, got {t_guard}"
            )));
        }
        if n_symbols == 0 || k_targets == 0 {
            return Err(Error::Config(
                "n_symbols and k_targets must be positive".into(),
            ));
        }
        let t_sym = 1.0 / delta_f;
        let t_s = t_sym + t_guard;
        let t_uts = n_symbols as f64 * t_s;
        Ok(Self {
            delta_f,
            t_sym,
            t_guard,
            t_s,
            n_symbols,
            t_uts,
            k_targets,
            t_tts: k_targets as f64 * t_uts,
        })
    }
}

/// Advance a target across one long-term interval of length `t_tts` under a
/// constant random acceleration. Positions integrate the (decreasing)
/// velocities; velocities pick up `-u * T`.
pub fn step_long_term(s: &TargetState6D, u: &Disturbance3D, t_tts: f64) -> Result<TargetState6D> {
    let t = t_tts;
    let half_t2 = 0.5 * t * t;
    let next = TargetState6D {
        r: s.r - s.v_r * t - u.u_r * half_t2,
        theta: s.theta - s.omega_theta * t - u.u_theta * half_t2,
        phi: s.phi - s.omega_phi * t - u.u_phi * half_t2,
        v_r: s.v_r - u.u_r * t,
        omega_theta: s.omega_theta - u.u_theta * t,
        omega_phi: s.omega_phi - u.u_phi * t,
    };
    if !(next.r > 0.0) {
        return Err(Error::StateEscaped {
            field: "r",
            value: next.r,
        });
    }
    if !(0.0..=std::f64::consts::PI).contains(&next.theta) {
        return Err(Error::StateEscaped {
            field: "theta",
            value: next.theta,
        });
    }
    if !(-std::f64::consts::FRAC_PI_2..=std::f64::consts::FRAC_PI_2).contains(&next.phi) {
        return Err(Error::StateEscaped {
            field: "phi",
            value: next.phi,
        });
    }
    Ok(next)
}

/// State at the n-th OFDM symbol inside one slot: positions drift at the
/// frozen long-term velocities, velocities stay constant.
pub fn short_term_state(s_long: &TargetState6D, n: usize, t_s: f64) -> TargetState6D {
    let dt = n as f64 * t_s;
    TargetState6D {
        r: s_long.r - s_long.v_r * dt,
        theta: s_long.theta - s_long.omega_theta * dt,
        phi: s_long.phi - s_long.omega_phi * dt,
        ..*s_long
    }
}

/// Standard deviations for [`sample_disturbance`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DisturbanceSigma {
    pub u_r: f64,
    pub u_theta: f64,
    pub u_phi: f64,
}

pub fn sample_disturbance<R: Rng + ?Sized>(rng: &mut R, sigma: &DisturbanceSigma) -> Disturbance3D {
    let mut draw = |s: f64| {
        if s == 0.0 {
            0.0
        } else {
            Normal::new(0.0, s).expect("finite sigma").sample(rng)
        }
    };
    Disturbance3D {
        u_r: draw(sigma.u_r),
        u_theta: draw(sigma.u_theta),
        u_phi: draw(sigma.u_phi),
    }
}
