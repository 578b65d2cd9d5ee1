use num_complex::Complex64;

use crate::error::{Error, Result};

/// Propagation speed used everywhere, pinned exactly so derived constants
/// (carrier wavelength, ambiguity windows) are reproducible bit-for-bit.
pub const C_LIGHT: f64 = 3.0e8;

/// Spherical convention: `theta` is azimuth in [0, pi] measured in the x-y
/// plane from +x, `phi` is elevation in [-pi/2, pi/2] measured from the x-y
/// plane. Both in radians.
pub fn spherical_to_cartesian(r: f64, theta: f64, phi: f64) -> Result<[f64; 3]> {
    if !(r > 0.0) {
        return Err(Error::OutOfRange {
            what: "range r",
            value: r,
            limit: 0.0,
        });
    }
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(Error::OutOfRange {
            what: "azimuth theta",
            value: theta,
            limit: std::f64::consts::PI,
        });
    }
    if !(-std::f64::consts::FRAC_PI_2..=std::f64::consts::FRAC_PI_2).contains(&phi) {
        return Err(Error::OutOfRange {
            what: "elevation phi",
            value: phi,
            limit: std::f64::consts::FRAC_PI_2,
        });
    }
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Ok([r * cp * ct, r * cp * st, r * sp])
}

/// Direction cosines seen by an array in the x-z plane:
/// `psi` along x, `omega` along z.
pub fn direction_cosines(theta: f64, phi: f64) -> (f64, f64) {
    (phi.cos() * theta.cos(), phi.sin())
}

/// Wraps an angle into (−π, π].
pub fn wrap_to_pi(x: f64) -> f64 {
    let mut v = x.rem_euclid(std::f64::consts::TAU);
    if v > std::f64::consts::PI {
        v -= std::f64::consts::TAU;
    }
    v
}

/// Uniform planar array in the x-z plane with its reference element at the
/// origin. Element `(n_x, n_z)` sits at `[n_x * d, 0, n_z * d]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpaGeometry {
    pub nx: usize,
    pub nz: usize,
    /// Element spacing in meters, identical along both axes.
    pub d: f64,
}

impl UpaGeometry {
    /// Spacing above half the carrier wavelength would alias spatial
    /// frequencies, so it is rejected up front.
    pub fn new(nx: usize, nz: usize, d: f64, f0: f64) -> Result<Self> {
        if nx == 0 || nz == 0 {
            return Err(Error::Config(format!(
                "array must have at least one element per axis, got {nx}x{nz}"
            )));
        }
        let d_max = C_LIGHT / (2.0 * f0);
        if !(d > 0.0) || d > d_max * (1.0 + 1e-12) {
            return Err(Error::OutOfRange {
                what: "element spacing d",
                value: d,
                limit: d_max,
            });
        }
        Ok(Self { nx, nz, d })
    }

    pub fn len(&self) -> usize {
        self.nx * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Linear index of element `(n_x, n_z)`; x-major so the layout matches
    /// the Kronecker product a_x ⊗ a_z.
    pub fn linear_index(&self, n_x: usize, n_z: usize) -> usize {
        debug_assert!(n_x < self.nx && n_z < self.nz);
        n_x * self.nz + n_z
    }

    pub fn element_position(&self, n_x: usize, n_z: usize) -> [f64; 3] {
        [n_x as f64 * self.d, 0.0, n_z as f64 * self.d]
    }

    /// Steering vector toward direction cosines `(psi, omega)` at carrier
    /// `f0`, laid out as a_x ⊗ a_z. Every element has unit modulus.
    pub fn steering(&self, f0: f64, psi: f64, omega: f64) -> Result<Vec<Complex64>> {
        if psi.abs() > 1.0 + 1e-12 {
            return Err(Error::DegenerateDirection {
                what: "direction cosine psi",
                value: psi,
            });
        }
        if omega.abs() > 1.0 + 1e-12 {
            return Err(Error::DegenerateDirection {
                what: "direction cosine omega",
                value: omega,
            });
        }
        let scale = 2.0 * std::f64::consts::PI * f0 * self.d / C_LIGHT;
        let step_x = Complex64::from_polar(1.0, scale * psi);
        let step_z = Complex64::from_polar(1.0, scale * omega);
        let mut out = Vec::with_capacity(self.len());
        let mut ax = Complex64::new(1.0, 0.0);
        for _ in 0..self.nx {
            let mut val = ax;
            for _ in 0..self.nz {
                out.push(val);
                val *= step_z;
            }
            ax *= step_x;
        }
        Ok(out)
    }
}
