use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::channel::ChannelMatrix;
use crate::config::RadarConfig;
use crate::error::{Error, Result};
use crate::geometry::direction_cosines;
use crate::motion::{short_term_state, TargetState6D};

/// Processing stage of an [`EchoCube`]. Transitions only move forward:
/// raw antenna samples, then the equivalent echo channel after symbol
/// erasure, then the dynamic-target part after static-background removal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CubeKind {
    Raw,
    Eec,
    DtEec,
}

impl CubeKind {
    fn tag(self) -> u32 {
        match self {
            CubeKind::Raw => 0,
            CubeKind::Eec => 1,
            CubeKind::DtEec => 2,
        }
    }

    fn from_tag(tag: u32) -> Result<Self> {
        match tag {
            0 => Ok(CubeKind::Raw),
            1 => Ok(CubeKind::Eec),
            2 => Ok(CubeKind::DtEec),
            other => Err(Error::Config(format!("unknown cube kind tag {other}"))),
        }
    }
}

/// Received echo samples over one slot, indexed
/// `[receive z][receive x][symbol][subcarrier]`, stored row-major in that
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoCube {
    data: Vec<Complex64>,
    pub n_r_z: usize,
    pub n_r_x: usize,
    pub n_sym: usize,
    pub m_sub: usize,
    pub kind: CubeKind,
}

impl EchoCube {
    pub fn zeros(n_r_z: usize, n_r_x: usize, n_sym: usize, m_sub: usize, kind: CubeKind) -> Self {
        Self {
            data: vec![Complex64::new(0.0, 0.0); n_r_z * n_r_x * n_sym * m_sub],
            n_r_z,
            n_r_x,
            n_sym,
            m_sub,
            kind,
        }
    }

    #[inline]
    pub fn index(&self, z: usize, x: usize, n: usize, m: usize) -> usize {
        debug_assert!(z < self.n_r_z && x < self.n_r_x && n < self.n_sym && m < self.m_sub);
        ((z * self.n_r_x + x) * self.n_sym + n) * self.m_sub + m
    }

    #[inline]
    pub fn at(&self, z: usize, x: usize, n: usize, m: usize) -> Complex64 {
        self.data[self.index(z, x, n, m)]
    }

    #[inline]
    pub fn at_mut(&mut self, z: usize, x: usize, n: usize, m: usize) -> &mut Complex64 {
        let i = self.index(z, x, n, m);
        &mut self.data[i]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn mean_power(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.data.len() as f64
    }

    pub fn total_energy(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Little-endian binary dump: five u32 header fields
    /// (z, x, symbol and subcarrier extents, then the kind tag) followed by
    /// interleaved re/im f64 pairs in storage order.
    pub fn write_binary<W: Write>(&self, w: &mut W) -> Result<()> {
        for dim in [
            self.n_r_z as u32,
            self.n_r_x as u32,
            self.n_sym as u32,
            self.m_sub as u32,
            self.kind.tag(),
        ] {
            w.write_all(&dim.to_le_bytes())?;
        }
        for v in &self.data {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(r: &mut R) -> Result<Self> {
        let mut u32buf = [0u8; 4];
        let mut header = [0u32; 5];
        for h in &mut header {
            r.read_exact(&mut u32buf)?;
            *h = u32::from_le_bytes(u32buf);
        }
        let [z, x, n, m, tag] = header;
        let kind = CubeKind::from_tag(tag)?;
        let len = z as usize * x as usize * n as usize * m as usize;
        let mut data = Vec::with_capacity(len);
        let mut f64buf = [0u8; 8];
        for _ in 0..len {
            r.read_exact(&mut f64buf)?;
            let re = f64::from_le_bytes(f64buf);
            r.read_exact(&mut f64buf)?;
            let im = f64::from_le_bytes(f64buf);
            data.push(Complex64::new(re, im));
        }
        Ok(Self {
            data,
            n_r_z: z as usize,
            n_r_x: x as usize,
            n_sym: n as usize,
            m_sub: m as usize,
            kind,
        })
    }
}

/// Beam, power and symbol sequence transmitted over one slot.
#[derive(Debug, Clone)]
pub struct TransmitPlan {
    /// Direction cosines of the sensing beam, from the predicted target
    /// direction.
    pub psi: f64,
    pub omega: f64,
    /// Sensing share of the transmit power (rho * P_t), watts.
    pub power: f64,
    symbols: Vec<Complex64>,
    n_sym: usize,
    m_sub: usize,
}

impl TransmitPlan {
    pub fn new(
        psi: f64,
        omega: f64,
        power: f64,
        n_sym: usize,
        m_sub: usize,
        symbols: Vec<Complex64>,
    ) -> Result<Self> {
        if power < 0.0 {
            return Err(Error::OutOfRange {
                what: "transmit power",
                value: power,
                limit: 0.0,
            });
        }
        if symbols.len() != n_sym * m_sub {
            return Err(Error::Config(format!(
                "symbol sequence length {} does not match {n_sym} x {m_sub}",
                symbols.len()
            )));
        }
        for s in &symbols {
            if (s.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!(
                    "transmit symbols must be unit modulus, got |s| = {}",
                    s.norm()
                )));
            }
        }
        Ok(Self {
            psi,
            omega,
            power,
            symbols,
            n_sym,
            m_sub,
        })
    }

    pub fn toward(state: &TargetState6D, power: f64, n_sym: usize, m_sub: usize) -> Result<Self> {
        let (psi, omega) = direction_cosines(state.theta, state.phi);
        Self::all_ones(psi, omega, power, n_sym, m_sub)
    }

    pub fn all_ones(psi: f64, omega: f64, power: f64, n_sym: usize, m_sub: usize) -> Result<Self> {
        Self::new(
            psi,
            omega,
            power,
            n_sym,
            m_sub,
            vec![Complex64::new(1.0, 0.0); n_sym * m_sub],
        )
    }

    /// Quadrature-phase symbols from the caller's RNG.
    pub fn qpsk<R: Rng + ?Sized>(
        psi: f64,
        omega: f64,
        power: f64,
        n_sym: usize,
        m_sub: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let symbols = (0..n_sym * m_sub)
            .map(|_| {
                let q = rng.random_range(0..4u8);
                Complex64::from_polar(
                    1.0,
                    std::f64::consts::FRAC_PI_4 + std::f64::consts::FRAC_PI_2 * q as f64,
                )
            })
            .collect();
        Self::new(psi, omega, power, n_sym, m_sub, symbols)
    }

    #[inline]
    pub fn symbol(&self, n: usize, m: usize) -> Complex64 {
        debug_assert!(n < self.n_sym && m < self.m_sub);
        self.symbols[n * self.m_sub + m]
    }
}

/// Spatial transmit vector sqrt(power / N_H) * a_H(beam direction); the
/// per-symbol scalar is applied at the use site.
pub fn make_transmit_vector(
    plan: &TransmitPlan,
    tx: &crate::geometry::UpaGeometry,
    f0: f64,
) -> Result<Vec<Complex64>> {
    let scale = (plan.power / tx.len() as f64).sqrt();
    let mut v = tx.steering(f0, plan.psi, plan.omega)?;
    for e in &mut v {
        *e *= scale;
    }
    Ok(v)
}

/// One target as seen by a single slot: its slot-start state and the fading
/// amplitude drawn for that slot.
#[derive(Debug, Clone, Copy)]
pub struct SlotTarget {
    pub state: TargetState6D,
    pub alpha: Complex64,
}

/// Synthesizes the raw echo cube for one slot: every (symbol, subcarrier)
/// pair receives the summed target echoes of the conjugated beam plus the
/// static background response, then complex Gaussian noise of variance
/// `sigma2` per sample.
///
/// `clutter`, when present, holds one background matrix per subcarrier,
/// reused across all symbols of the slot.
pub fn generate_echo_cube<R: Rng + ?Sized>(
    targets: &[SlotTarget],
    clutter: Option<&[ChannelMatrix]>,
    cfg: &RadarConfig,
    plan: &TransmitPlan,
    sigma2: f64,
    rng: &mut R,
) -> Result<EchoCube> {
    let tx = cfg.tx_array()?;
    let rx = cfg.rx_array()?;
    let timing = cfg.timing(1)?;
    let n_sym = cfg.n_symbols;
    let m_sub = cfg.m_subcarriers;
    if let Some(cl) = clutter {
        if cl.len() != m_sub {
            return Err(Error::Config(format!(
                "clutter needs one matrix per subcarrier: got {} for {m_sub}",
                cl.len()
            )));
        }
    }

    let mut cube = EchoCube::zeros(cfg.n_r_z, cfg.n_r_x, n_sym, m_sub, CubeKind::Raw);
    let x_spatial = make_transmit_vector(plan, &tx, cfg.f0_hz)?;

    for tgt in targets {
        // Per-symbol factors are subcarrier-independent and vice versa, so
        // build both axes once and combine per (n, m).
        let mut per_symbol = Vec::with_capacity(n_sym);
        for n in 0..n_sym {
            let sn = short_term_state(&tgt.state, n, timing.t_s);
            let (psi, omega) = direction_cosines(sn.theta, sn.phi);
            let a_rx = rx.steering(cfg.f0_hz, psi, omega)?;
            let a_tx = tx.steering(cfg.f0_hz, psi, omega)?;
            let tx_gain: Complex64 = a_tx.iter().zip(&x_spatial).map(|(a, x)| a * x.conj()).sum();
            let doppler = Complex64::from_polar(
                1.0,
                4.0 * std::f64::consts::PI * cfg.f0_hz * tgt.state.v_r * (n as f64 * timing.t_s)
                    / crate::geometry::C_LIGHT,
            );
            per_symbol.push((a_rx, tx_gain * doppler));
        }
        let delay: Vec<Complex64> = (0..m_sub)
            .map(|m| {
                Complex64::from_polar(
                    1.0,
                    -4.0 * std::f64::consts::PI * cfg.subcarrier_hz(m) * tgt.state.r
                        / crate::geometry::C_LIGHT,
                )
            })
            .collect();

        for z in 0..cfg.n_r_z {
            for x in 0..cfg.n_r_x {
                let i_rx = rx.linear_index(x, z);
                for (n, (a_rx, sym_factor)) in per_symbol.iter().enumerate() {
                    let base = tgt.alpha * a_rx[i_rx] * sym_factor;
                    for (m, d) in delay.iter().enumerate() {
                        *cube.at_mut(z, x, n, m) += base * d * plan.symbol(n, m);
                    }
                }
            }
        }
    }

    if let Some(cl) = clutter {
        // The background response to the beam is symbol-independent apart
        // from the transmitted scalar, so fold the matrix-vector product
        // once per subcarrier.
        for (m, g) in cl.iter().enumerate() {
            if g.nrows() != rx.len() || g.ncols() != tx.len() {
                return Err(Error::Config(format!(
                    "clutter matrix {m} is {}x{}, expected {}x{}",
                    g.nrows(),
                    g.ncols(),
                    rx.len(),
                    tx.len()
                )));
            }
            let mut w = vec![Complex64::new(0.0, 0.0); rx.len()];
            for (i, wi) in w.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, x) in x_spatial.iter().enumerate() {
                    acc += g[(i, j)] * x.conj();
                }
                *wi = acc;
            }
            for z in 0..cfg.n_r_z {
                for x in 0..cfg.n_r_x {
                    let wi = w[rx.linear_index(x, z)];
                    for n in 0..n_sym {
                        *cube.at_mut(z, x, n, m) += wi * plan.symbol(n, m);
                    }
                }
            }
        }
    }

    if sigma2 > 0.0 {
        add_noise(&mut cube, sigma2, rng)?;
    }
    Ok(cube)
}

/// Adds i.i.d. complex Gaussian noise of variance `sigma2` per sample to a
/// raw cube, in storage order.
pub fn add_noise<R: Rng + ?Sized>(cube: &mut EchoCube, sigma2: f64, rng: &mut R) -> Result<()> {
    if cube.kind != CubeKind::Raw {
        return Err(Error::Config(
            "noise is injected before symbol erasure (raw cube only)".into(),
        ));
    }
    if sigma2 < 0.0 {
        return Err(Error::OutOfRange {
            what: "noise variance",
            value: sigma2,
            limit: 0.0,
        });
    }
    if sigma2 == 0.0 {
        return Ok(());
    }
    let dist = Normal::new(0.0, (sigma2 / 2.0).sqrt()).expect("finite std");
    for v in &mut cube.data {
        *v += Complex64::new(dist.sample(rng), dist.sample(rng));
    }
    Ok(())
}

/// Divides out the transmitted symbols, turning raw echoes into the
/// equivalent echo channel. Unit-modulus symbols make this a pure rotation
/// per sample.
pub fn erase_symbols(mut cube: EchoCube, plan: &TransmitPlan) -> Result<EchoCube> {
    if cube.kind != CubeKind::Raw {
        return Err(Error::Config("symbol erasure expects a raw cube".into()));
    }
    if plan.n_sym != cube.n_sym || plan.m_sub != cube.m_sub {
        return Err(Error::Config(format!(
            "plan is {}x{} but cube is {}x{}",
            plan.n_sym, plan.m_sub, cube.n_sym, cube.m_sub
        )));
    }
    for z in 0..cube.n_r_z {
        for x in 0..cube.n_r_x {
            for n in 0..cube.n_sym {
                for m in 0..cube.m_sub {
                    let s = plan.symbol(n, m);
                    *cube.at_mut(z, x, n, m) /= s;
                }
            }
        }
    }
    cube.kind = CubeKind::Eec;
    Ok(cube)
}

/// Removes the static background by subtracting, per (antenna, subcarrier),
/// the mean across the slot's symbols. A component constant over the slot
/// cancels exactly; a moving target keeps all energy outside its
/// zero-frequency line.
pub fn filter_static_clutter(mut cube: EchoCube) -> Result<EchoCube> {
    if cube.kind != CubeKind::Eec {
        return Err(Error::Config(
            "clutter filtering expects an equivalent-echo-channel cube".into(),
        ));
    }
    if cube.n_sym < 2 {
        return Err(Error::Config(
            "clutter filtering needs at least 2 symbols".into(),
        ));
    }
    let inv_n = 1.0 / cube.n_sym as f64;
    for z in 0..cube.n_r_z {
        for x in 0..cube.n_r_x {
            for m in 0..cube.m_sub {
                let mut mean = Complex64::new(0.0, 0.0);
                for n in 0..cube.n_sym {
                    mean += cube.at(z, x, n, m);
                }
                mean *= inv_n;
                for n in 0..cube.n_sym {
                    *cube.at_mut(z, x, n, m) -= mean;
                }
            }
        }
    }
    cube.kind = CubeKind::DtEec;
    Ok(cube)
}

/// Relabels a clutter-free equivalent echo channel as the dynamic-target
/// cube without touching the data: with no static component present the two
/// are identical by definition, and running the mean-subtraction filter
/// anyway would clip the targets' own spectral mean.
pub fn promote_clutter_free(mut cube: EchoCube) -> Result<EchoCube> {
    if cube.kind != CubeKind::Eec {
        return Err(Error::Config(
            "promotion expects an equivalent-echo-channel cube".into(),
        ));
    }
    cube.kind = CubeKind::DtEec;
    Ok(cube)
}

/// Re-applies mean subtraction to an already filtered cube; used by the
/// idempotence property test.
pub fn refilter(mut cube: EchoCube) -> Result<EchoCube> {
    if cube.kind != CubeKind::DtEec {
        return Err(Error::Config("refilter expects a filtered cube".into()));
    }
    cube.kind = CubeKind::Eec;
    filter_static_clutter(cube)
}
