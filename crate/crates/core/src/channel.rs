use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::config::ScattererSpec;
use crate::error::{Error, Result};
use crate::geometry::{direction_cosines, UpaGeometry, C_LIGHT};
use crate::linalg::CMat;
use crate::motion::TargetState6D;

/// Full receive-by-transmit channel matrix for one (symbol, subcarrier).
pub type ChannelMatrix = CMat;

/// Complex fading amplitude of one echo path over one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingAmplitude {
    pub alpha: Complex64,
}

/// How the per-slot radar cross section is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcsMode {
    /// Exponentially distributed cross section (one draw per slot) with a
    /// uniform random echo phase.
    Swerling1,
    /// Cross section pinned to its mean, phase zero. For reproducible
    /// oracle runs.
    Deterministic,
}

/// The amplitude law reads sqrt(lambda^2 / ((4 pi)^3 r^4)) * sigma with the
/// cross section outside the root; `sigma_inside_sqrt` switches to the
/// conventional sqrt(sigma) scaling instead.
pub fn path_loss_alpha<R: Rng + ?Sized>(
    r: f64,
    lambda: f64,
    rcs_mean: f64,
    mode: RcsMode,
    sigma_inside_sqrt: bool,
    rng: &mut R,
) -> Result<FadingAmplitude> {
    if !(r > 0.0) {
        return Err(Error::OutOfRange {
            what: "path range r",
            value: r,
            limit: 0.0,
        });
    }
    if rcs_mean < 0.0 {
        return Err(Error::OutOfRange {
            what: "rcs_mean",
            value: rcs_mean,
            limit: 0.0,
        });
    }
    let (sigma, phase) = match mode {
        RcsMode::Deterministic => (rcs_mean, 0.0),
        RcsMode::Swerling1 => {
            let sigma = if rcs_mean == 0.0 {
                0.0
            } else {
                Exp::new(1.0 / rcs_mean).expect("positive mean").sample(rng)
            };
            (sigma, rng.random_range(0.0..std::f64::consts::TAU))
        }
    };
    let geom = (lambda * lambda / ((4.0 * std::f64::consts::PI).powi(3) * r.powi(4))).sqrt();
    let magnitude = if sigma_inside_sqrt {
        geom * sigma.sqrt()
    } else {
        geom * sigma
    };
    Ok(FadingAmplitude {
        alpha: Complex64::from_polar(magnitude, phase),
    })
}

/// Single-target channel in factored rank-1 form: `scalar * a_rx * a_tx^T`.
/// Keeping the factors lets the echo stage apply the transmit vector as one
/// inner product instead of materializing N_R x N_H entries per
/// (symbol, subcarrier).
#[derive(Debug, Clone)]
pub struct RankOneChannel {
    pub scalar: Complex64,
    pub a_rx: Vec<Complex64>,
    pub a_tx: Vec<Complex64>,
}

impl RankOneChannel {
    pub fn to_matrix(&self, rx: &UpaGeometry, tx: &UpaGeometry) -> ChannelMatrix {
        debug_assert_eq!(self.a_rx.len(), rx.len());
        debug_assert_eq!(self.a_tx.len(), tx.len());
        CMat::from_fn(rx.len(), tx.len(), |i, j| {
            self.scalar * self.a_rx[i] * self.a_tx[j]
        })
    }
}

/// Factored echo channel of one target for symbol `n` (elapsed time
/// `tau = n * t_s`) on subcarrier frequency `f_m`.
///
/// The delay phase turns at the subcarrier frequency against the slot-start
/// range `r_ref`; the Doppler phase turns at the carrier against the slot's
/// radial velocity; both steering vectors point at the target's
/// symbol-`n` direction. `s` must be the short-term state at symbol `n`.
pub fn target_channel_factors(
    s: &TargetState6D,
    r_ref: f64,
    alpha: Complex64,
    tx: &UpaGeometry,
    rx: &UpaGeometry,
    f0: f64,
    f_m: f64,
    tau: f64,
) -> Result<RankOneChannel> {
    let (psi, omega) = direction_cosines(s.theta, s.phi);
    let delay_phase = -4.0 * std::f64::consts::PI * f_m * r_ref / C_LIGHT;
    let doppler_phase = 4.0 * std::f64::consts::PI * f0 * s.v_r * tau / C_LIGHT;
    let scalar = alpha * Complex64::from_polar(1.0, delay_phase + doppler_phase);
    Ok(RankOneChannel {
        scalar,
        a_rx: rx.steering(f0, psi, omega)?,
        a_tx: tx.steering(f0, psi, omega)?,
    })
}

/// Single-target channel matrix; see [`target_channel_factors`].
pub fn target_channel(
    s: &TargetState6D,
    r_ref: f64,
    alpha: Complex64,
    tx: &UpaGeometry,
    rx: &UpaGeometry,
    f0: f64,
    f_m: f64,
    tau: f64,
) -> Result<ChannelMatrix> {
    Ok(target_channel_factors(s, r_ref, alpha, tx, rx, f0, f_m, tau)?.to_matrix(rx, tx))
}

/// Random flat-fading background channel for one (slot, subcarrier):
/// `beta * G` with `G` i.i.d. standard complex Gaussian. Draw once per
/// (slot, subcarrier) and reuse across the slot's symbols.
pub fn gaussian_clutter_channel<R: Rng + ?Sized>(
    beta: f64,
    rx: &UpaGeometry,
    tx: &UpaGeometry,
    rng: &mut R,
) -> ChannelMatrix {
    let dist = rand_distr::Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("unit normal");
    CMat::from_fn(rx.len(), tx.len(), |_, _| {
        Complex64::new(beta * dist.sample(rng), beta * dist.sample(rng))
    })
}

/// Deterministic multi-scatterer background channel for one subcarrier:
/// a sum of static rank-1 reflections with no Doppler term.
pub fn scatterer_clutter_channel(
    scatterers: &[ScattererSpec],
    rx: &UpaGeometry,
    tx: &UpaGeometry,
    f0: f64,
    f_m: f64,
    lambda: f64,
) -> Result<ChannelMatrix> {
    let mut sum = CMat::zeros(rx.len(), tx.len());
    for sc in scatterers {
        let alpha = path_loss_alpha(
            sc.r_m,
            lambda,
            sc.rcs_m2,
            RcsMode::Deterministic,
            false,
            &mut rand::rng(),
        )?
        .alpha;
        let (psi, omega) = direction_cosines(sc.theta_deg.to_radians(), sc.phi_deg.to_radians());
        let delay_phase = -4.0 * std::f64::consts::PI * f_m * sc.r_m / C_LIGHT;
        let scalar = alpha * Complex64::from_polar(1.0, delay_phase);
        let a_rx = rx.steering(f0, psi, omega)?;
        let a_tx = tx.steering(f0, psi, omega)?;
        for j in 0..tx.len() {
            for i in 0..rx.len() {
                sum[(i, j)] += scalar * a_rx[i] * a_tx[j];
            }
        }
    }
    Ok(sum)
}

/// Overall sensing channel: elementwise sum of the per-target matrices and
/// the background matrix.
pub fn sensing_channel(parts: &[&ChannelMatrix]) -> Result<ChannelMatrix> {
    let (rows, cols) = match parts.first() {
        Some(m) => (m.nrows(), m.ncols()),
        None => {
            return Err(Error::Config(
                "sensing_channel needs at least one part".into(),
            ))
        }
    };
    let mut sum = CMat::zeros(rows, cols);
    for part in parts {
        if part.nrows() != rows || part.ncols() != cols {
            return Err(Error::Config(format!(
                "channel dimension mismatch: {}x{} vs {rows}x{cols}",
                part.nrows(),
                part.ncols()
            )));
        }
        for j in 0..cols {
            for i in 0..rows {
                sum[(i, j)] += part[(i, j)];
            }
        }
    }
    Ok(sum)
}
