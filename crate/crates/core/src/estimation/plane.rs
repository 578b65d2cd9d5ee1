use nalgebra::{DMatrix, DVector};

use crate::config::RadarConfig;
use crate::error::{Error, Result};

/// Per-antenna virtual radial velocities over the receive grid; cells whose
/// estimation failed or fell outside the unambiguous window are `None`.
#[derive(Debug, Clone)]
pub struct VelocityGrid {
    values: Vec<Option<f64>>,
    pub n_z: usize,
    pub n_x: usize,
}

impl VelocityGrid {
    pub fn new(n_z: usize, n_x: usize) -> Self {
        Self {
            values: vec![None; n_z * n_x],
            n_z,
            n_x,
        }
    }

    pub fn at(&self, z: usize, x: usize) -> Option<f64> {
        self.values[z * self.n_x + x]
    }

    pub fn set(&mut self, z: usize, x: usize, v: Option<f64>) {
        self.values[z * self.n_x + x] = v;
    }

    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter_valid(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|val| (i / self.n_x, i % self.n_x, val)))
    }
}

/// Affine model of the virtual-velocity surface over the receive indices:
/// v = a + b * n_x + c * n_z.
#[derive(Debug, Clone, Copy)]
pub struct VelocityPlane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub residual_rms: f64,
}

/// Ordinary least squares over the grid's valid cells.
pub fn fit_velocity_plane(grid: &VelocityGrid) -> Result<VelocityPlane> {
    let cells: Vec<(usize, usize, f64)> = grid.iter_valid().collect();
    if cells.len() < 3 {
        return Err(Error::RankDeficient {
            valid: cells.len(),
            unknowns: 3,
        });
    }
    let design = DMatrix::from_fn(cells.len(), 3, |row, col| {
        let (z, x, _) = cells[row];
        match col {
            0 => 1.0,
            1 => x as f64,
            _ => z as f64,
        }
    });
    let rhs = DVector::from_fn(cells.len(), |row, _| cells[row].2);
    let svd = design.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    let eps = s_max * 1e-12;
    if svd.rank(eps) < 3 {
        return Err(Error::RankDeficient {
            valid: cells.len(),
            unknowns: 3,
        });
    }
    let coeffs = svd
        .solve(&rhs, eps)
        .map_err(|e| Error::Config(format!("least-squares solve failed: {e}")))?;
    let fitted = &design * &coeffs;
    let residual_rms = ((&rhs - &fitted).norm_squared() / cells.len() as f64).sqrt();
    Ok(VelocityPlane {
        a: coeffs[0],
        b: coeffs[1],
        c: coeffs[2],
        residual_rms,
    })
}

/// Forward map from true motion to the plane coefficients the grid obeys:
/// the intercept folds in the transmit-array centroid offset, the two slopes
/// carry the angular velocities through the local geometry.
pub fn plane_coefficients(
    v_r: f64,
    omega_theta: f64,
    omega_phi: f64,
    theta: f64,
    phi: f64,
    cfg: &RadarConfig,
) -> (f64, f64, f64) {
    let d = cfg.spacing_m();
    let (sin_phi, cos_phi) = phi.sin_cos();
    let (sin_theta, cos_theta) = theta.sin_cos();
    let nhx = cfg.n_h_x as f64;
    let nhz = cfg.n_h_z as f64;
    let a = v_r - d / 4.0 * ((nhz - 1.0) * cos_phi - (nhx - 1.0) * sin_phi * cos_theta) * omega_phi
        + d / 4.0 * (nhx - 1.0) * cos_phi * sin_theta * omega_theta;
    let b = d / 2.0 * (sin_phi * cos_theta * omega_phi + cos_phi * sin_theta * omega_theta);
    let c = -d / 2.0 * cos_phi * omega_phi;
    (a, b, c)
}

/// Motion recovered from a fitted plane; the azimuth rate is absent when the
/// viewing geometry puts its coefficient at zero.
#[derive(Debug, Clone, Copy)]
pub struct RecoveredVelocities {
    pub v_r: f64,
    pub omega_theta: Option<f64>,
    pub omega_phi: f64,
}

const DEGENERATE_COSINE: f64 = 1e-6;

/// Inverts [`plane_coefficients`] at the estimated angles: the z-slope gives
/// the elevation rate, the x-slope then gives the azimuth rate, and the
/// intercept corrected by both gives the radial velocity. With the target in
/// the x-z plane (sin theta ~ 0) the azimuth rate is unobservable and left
/// out; its vanishing coefficient lets the other two proceed unharmed.
pub fn recover_velocities(
    plane: &VelocityPlane,
    theta: f64,
    phi: f64,
    cfg: &RadarConfig,
) -> Result<RecoveredVelocities> {
    let d = cfg.spacing_m();
    let (sin_phi, cos_phi) = phi.sin_cos();
    let (sin_theta, cos_theta) = theta.sin_cos();
    if cos_phi.abs() < DEGENERATE_COSINE {
        return Err(Error::DegenerateDirection {
            what: "pitch cosine",
            value: cos_phi,
        });
    }
    let omega_phi = -2.0 * plane.c / (d * cos_phi);
    let denom = cos_phi * sin_theta;
    let omega_theta = if denom.abs() < DEGENERATE_COSINE {
        None
    } else {
        Some((2.0 * plane.b / d - sin_phi * cos_theta * omega_phi) / denom)
    };
    let nhx = cfg.n_h_x as f64;
    let nhz = cfg.n_h_z as f64;
    let v_r = plane.a
        + d / 4.0 * ((nhz - 1.0) * cos_phi - (nhx - 1.0) * sin_phi * cos_theta) * omega_phi
        - d / 4.0 * (nhx - 1.0) * cos_phi * sin_theta * omega_theta.unwrap_or(0.0);
    Ok(RecoveredVelocities {
        v_r,
        omega_theta,
        omega_phi,
    })
}
