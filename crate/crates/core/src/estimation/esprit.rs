use num_complex::Complex64;

use crate::echo::{CubeKind, EchoCube};
use crate::error::{Error, Result};
use crate::linalg::{
    cond2, general_eigvals_desc, hermitian_eig_desc, inverse, sample_covariance, CMat,
};

/// Which physical axis a snapshot matrix spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotAxis {
    /// Receive rows along z: phase step carries the elevation cosine.
    Omega,
    /// Receive rows along x: phase step carries the azimuth-plane cosine.
    Psi,
    /// Subcarrier rows: phase step carries the round-trip delay.
    Range,
    /// Symbol rows of one antenna: phase step carries its virtual velocity.
    VirtualVelocity,
}

/// Snapshot matrix for one estimation stage: p array samples per snapshot,
/// q snapshots. Fewer snapshots than array elements still run, but the
/// sample covariance is then rank deficient; `is_well_conditioned` lets
/// callers surface that.
#[derive(Debug, Clone)]
pub struct SnapshotMatrix {
    pub y: CMat,
    pub axis: SnapshotAxis,
}

impl SnapshotMatrix {
    pub fn is_well_conditioned(&self) -> bool {
        self.y.ncols() >= self.y.nrows()
    }
}

/// Detected model order and the phase value per detected component,
/// ordered by descending eigenvalue modulus; each value lies in (−π, π].
#[derive(Debug, Clone)]
pub struct SpaceValueSet {
    pub order: usize,
    pub kappas: Vec<f64>,
}

fn require_dt_eec(cube: &EchoCube) -> Result<()> {
    if cube.kind != CubeKind::DtEec {
        return Err(Error::Config(
            "estimation consumes the dynamic-target cube".into(),
        ));
    }
    Ok(())
}

/// Rows along receive z; snapshots over (receive x, symbol, subcarrier).
pub fn snapshots_pitch(cube: &EchoCube) -> Result<SnapshotMatrix> {
    require_dt_eec(cube)?;
    let (nz, nx, n, m) = (cube.n_r_z, cube.n_r_x, cube.n_sym, cube.m_sub);
    let y = CMat::from_fn(nz, nx * n * m, |z, col| {
        let (xn, mm) = (col / m, col % m);
        cube.at(z, xn / n, xn % n, mm)
    });
    Ok(SnapshotMatrix {
        y,
        axis: SnapshotAxis::Omega,
    })
}

/// Rows along receive x; snapshots over (receive z, symbol, subcarrier).
pub fn snapshots_azimuth(cube: &EchoCube) -> Result<SnapshotMatrix> {
    require_dt_eec(cube)?;
    let (nz, nx, n, m) = (cube.n_r_z, cube.n_r_x, cube.n_sym, cube.m_sub);
    let y = CMat::from_fn(nx, nz * n * m, |x, col| {
        let (zn, mm) = (col / m, col % m);
        cube.at(zn / n, x, zn % n, mm)
    });
    Ok(SnapshotMatrix {
        y,
        axis: SnapshotAxis::Psi,
    })
}

/// Rows along the subcarrier axis; snapshots over (antenna, symbol).
pub fn snapshots_range(cube: &EchoCube) -> Result<SnapshotMatrix> {
    require_dt_eec(cube)?;
    let (nz, nx, n, m) = (cube.n_r_z, cube.n_r_x, cube.n_sym, cube.m_sub);
    let y = CMat::from_fn(m, nz * nx * n, |row, col| {
        let (zx, nn) = (col / n, col % n);
        cube.at(zx / nx, zx % nx, nn, row)
    });
    Ok(SnapshotMatrix {
        y,
        axis: SnapshotAxis::Range,
    })
}

/// One antenna's symbol-by-subcarrier matrix; rows along the symbol axis.
pub fn snapshots_velocity(cube: &EchoCube, z: usize, x: usize) -> Result<SnapshotMatrix> {
    require_dt_eec(cube)?;
    if z >= cube.n_r_z || x >= cube.n_r_x {
        return Err(Error::Config(format!(
            "antenna ({z}, {x}) outside {}x{} grid",
            cube.n_r_z, cube.n_r_x
        )));
    }
    let y = CMat::from_fn(cube.n_sym, cube.m_sub, |n, m| cube.at(z, x, n, m));
    Ok(SnapshotMatrix {
        y,
        axis: SnapshotAxis::VirtualVelocity,
    })
}

/// Information-theoretic model-order selection over descending covariance
/// eigenvalues: K̂ minimizes
/// −n(p−k)·log(geometric/arithmetic mean of the k-excluded tail)
/// + k(2p−k)/2·log n.
pub fn mdl_order(eigenvalues: &[f64], n_snapshots: usize, max_order: usize) -> Result<usize> {
    let p = eigenvalues.len();
    if p == 0 || n_snapshots == 0 {
        return Err(Error::Config(
            "order selection needs eigenvalues and at least one snapshot".into(),
        ));
    }
    if max_order > p - 1 {
        return Err(Error::Config(format!(
            "max order {max_order} exceeds p - 1 = {}",
            p - 1
        )));
    }
    let n = n_snapshots as f64;
    // Eigenvalues this far below the largest are numerical zeros of the
    // decomposition, not a structured tail; lifting them to a common floor
    // keeps the geometric mean from reacting to rounding noise.
    let floor = eigenvalues[0].max(0.0) * 1e-14;
    let mut best = (f64::INFINITY, 0usize);
    for k in 0..=max_order {
        let tail = &eigenvalues[k..];
        let len = tail.len() as f64;
        let ari = tail.iter().map(|&l| l.max(floor)).sum::<f64>() / len;
        let geo_log = tail
            .iter()
            .map(|&l| l.max(floor).max(1e-300).ln())
            .sum::<f64>()
            / len;
        let ratio_log = if ari > 0.0 { geo_log - ari.ln() } else { 0.0 };
        let score = -n * len * ratio_log + 0.5 * k as f64 * (2 * p - k) as f64 * n.ln();
        if score < best.0 {
            best = (score, k);
        }
    }
    if best.1 == 0 {
        return Err(Error::AllNoise);
    }
    Ok(best.1)
}

/// Rotational-invariance estimation of the phase step between adjacent rows,
/// total-least-squares variant:
/// sample covariance, descending eigendecomposition, order selection (or
/// `forced_order`), stacked shifted signal subspaces, eigendecomposition of
/// their 2K×2K Gram matrix, block ratio Ř = −Ũ_a·Ũ_b^{−1}, and finally the
/// four-quadrant angles of Ř's eigenvalues.
pub fn esprit_space_values(
    snap: &SnapshotMatrix,
    forced_order: Option<usize>,
) -> Result<SpaceValueSet> {
    esprit_with_dominant(snap, forced_order).map(|(set, _)| set)
}

/// As [`esprit_space_values`], also returning the dominant covariance
/// eigenvector so callers can rank multiple detected components.
pub fn esprit_with_dominant(
    snap: &SnapshotMatrix,
    forced_order: Option<usize>,
) -> Result<(SpaceValueSet, Vec<Complex64>)> {
    let (vals, u) = covariance_eig(snap)?;
    let p = snap.y.nrows();
    let q = snap.y.ncols();
    let k = match forced_order {
        Some(k) => {
            if k == 0 || k > p - 1 {
                return Err(Error::Config(format!(
                    "forced order {k} outside 1..={}",
                    p - 1
                )));
            }
            k
        }
        None => mdl_order(&vals, q, p.saturating_sub(2).max(1))?,
    };
    let kappas = rotational_kappas(&u, p, k)?;
    let dominant: Vec<Complex64> = (0..p).map(|i| u[(i, 0)]).collect();
    Ok((SpaceValueSet { order: k, kappas }, dominant))
}

/// Presence-checked single-component estimate: the order selector must see
/// at least one component (otherwise the data is all noise), and the
/// returned phase is that of the principal signal direction, whose rank-one
/// fit lands on the power-weighted mean of any slow drift within the slot.
/// Returns the phase together with the detected order.
pub fn esprit_principal(snap: &SnapshotMatrix) -> Result<(f64, usize)> {
    let (vals, u) = covariance_eig(snap)?;
    let p = snap.y.nrows();
    let q = snap.y.ncols();
    let detected = mdl_order(&vals, q, p.saturating_sub(2).max(1))?;
    let kappas = rotational_kappas(&u, p, 1)?;
    Ok((kappas[0], detected))
}

fn covariance_eig(snap: &SnapshotMatrix) -> Result<(Vec<f64>, CMat)> {
    let p = snap.y.nrows();
    if p < 2 {
        return Err(Error::Config(format!(
            "phase-step estimation needs at least 2 rows, got {p}"
        )));
    }
    let r = sample_covariance(snap.y.as_ref());
    hermitian_eig_desc(r.as_ref())
}

/// Steps 4 through 6 of the subspace pipeline: stack the two shifted copies
/// of the order-k signal subspace, eigendecompose their Gram matrix, take
/// the block ratio, and read the component phases off its eigenvalues.
fn rotational_kappas(u: &CMat, p: usize, k: usize) -> Result<Vec<f64>> {
    let u1 = CMat::from_fn(p - 1, 2 * k, |i, j| {
        if j < k {
            u[(i, j)]
        } else {
            u[(i + 1, j - k)]
        }
    });
    let gram = u1.as_ref().adjoint() * u1.as_ref();
    let (_, ut) = hermitian_eig_desc(gram.as_ref())?;
    let ua = CMat::from_fn(k, k, |i, j| ut[(i, k + j)]);
    let ub = CMat::from_fn(k, k, |i, j| ut[(k + i, k + j)]);
    let cond = cond2(ub.as_ref())?;
    if cond > 1e12 {
        return Err(Error::SingularBlock { cond });
    }
    let ub_inv = inverse(ub.as_ref());
    let prod = ua.as_ref() * ub_inv.as_ref();
    let ratio = CMat::from_fn(k, k, |i, j| -prod[(i, j)]);
    let lambdas = general_eigvals_desc(ratio.as_ref())?;
    Ok(lambdas.iter().map(|l| l.arg()).collect())
}

fn wrap_phase(x: f64) -> f64 {
    let mut v = x.rem_euclid(std::f64::consts::TAU);
    if v > std::f64::consts::PI {
        v -= std::f64::consts::TAU;
    }
    v
}

/// Picks one phase value out of a multi-component detection: nearest to the
/// caller's predicted phase when available, otherwise the one whose uniform
/// progression best correlates with the dominant covariance eigenvector.
pub fn select_kappa(set: &SpaceValueSet, dominant: &[Complex64], hint: Option<f64>) -> f64 {
    if set.kappas.len() == 1 {
        return set.kappas[0];
    }
    if let Some(h) = hint {
        return set
            .kappas
            .iter()
            .copied()
            .min_by(|a, b| {
                let da = wrap_phase(a - h).abs();
                let db = wrap_phase(b - h).abs();
                da.partial_cmp(&db).unwrap()
            })
            .unwrap_or(0.0);
    }
    set.kappas
        .iter()
        .copied()
        .max_by(|&a, &b| {
            let score = |kappa: f64| {
                dominant
                    .iter()
                    .enumerate()
                    .map(|(i, u)| u.conj() * Complex64::from_polar(1.0, kappa * i as f64))
                    .sum::<Complex64>()
                    .norm()
            };
            score(a).partial_cmp(&score(b)).unwrap()
        })
        .unwrap_or(0.0)
}
