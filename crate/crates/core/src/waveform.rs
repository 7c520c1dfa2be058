//! OTFS modulation with a reduced cyclic prefix, pilot frames and QAM mapping.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dd::{DdTransform, Direction};
use crate::error::{check_len, Error, Result};
use crate::geometry::FrameGeometry;

/// M×N delay-Doppler symbol grid stored as vec(X): bin (m, n) at `m + n*M`.
#[derive(Debug, Clone, PartialEq)]
pub struct DdGrid {
    geometry: FrameGeometry,
    symbols: Vec<Complex64>,
}

impl DdGrid {
    pub fn zeros(geometry: FrameGeometry) -> Self {
        Self { geometry, symbols: vec![Complex64::default(); geometry.mn()] }
    }

    pub fn from_vec(geometry: FrameGeometry, symbols: Vec<Complex64>) -> Result<Self> {
        check_len(geometry.mn(), symbols.len())?;
        Ok(Self { geometry, symbols })
    }

    pub fn geometry(&self) -> &FrameGeometry {
        &self.geometry
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.symbols[m + n * self.geometry.m]
    }

    pub fn set(&mut self, m: usize, n: usize, value: Complex64) {
        let idx = m + n * self.geometry.m;
        self.symbols[idx] = value;
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.symbols
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.symbols
    }

    pub fn energy(&self) -> f64 {
        self.symbols.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Index of bin (m, n) in a vectorized grid, with both indices wrapped.
pub fn wrapped_index(geom: &FrameGeometry, m: i64, n: i64) -> usize {
    let mm = m.rem_euclid(geom.m as i64) as usize;
    let nn = n.rem_euclid(geom.n as i64) as usize;
    mm + nn * geom.m
}

/// Transmit/receive transforms with rectangular pulses.
#[derive(Debug, Clone)]
pub struct Modem {
    transform: DdTransform,
}

impl Modem {
    pub fn new(geom: FrameGeometry) -> Result<Self> {
        Ok(Self { transform: DdTransform::new(geom)? })
    }

    pub fn from_transform(transform: DdTransform) -> Self {
        Self { transform }
    }

    pub fn geometry(&self) -> &FrameGeometry {
        self.transform.geometry()
    }

    /// s = (F_N^H ⊗ I_M)·x
    pub fn modulate(&self, grid: &DdGrid) -> Result<Vec<Complex64>> {
        check_len(self.transform.mn(), grid.as_slice().len())?;
        let mut s = grid.as_slice().to_vec();
        self.transform.doppler_dft(&mut s, Direction::Inverse);
        Ok(s)
    }

    /// y = (F_N ⊗ I_M)·r
    pub fn demodulate(&self, r: &[Complex64]) -> Result<Vec<Complex64>> {
        self.transform.check(r)?;
        let mut y = r.to_vec();
        self.transform.doppler_dft(&mut y, Direction::Forward);
        Ok(y)
    }
}

/// Prepends the last `cp_len` samples.
pub fn add_rcp(s: &[Complex64], cp_len: usize) -> Result<Vec<Complex64>> {
    if cp_len >= s.len() {
        return Err(Error::CyclicPrefix { cp_len, len: s.len() });
    }
    let mut out = Vec::with_capacity(s.len() + cp_len);
    out.extend_from_slice(&s[s.len() - cp_len..]);
    out.extend_from_slice(s);
    Ok(out)
}

pub fn remove_rcp(r: &[Complex64], cp_len: usize) -> Result<Vec<Complex64>> {
    if 2 * cp_len >= r.len() {
        return Err(Error::CyclicPrefix { cp_len, len: r.len().saturating_sub(cp_len) });
    }
    Ok(r[cp_len..].to_vec())
}

/// Single pilot of energy `energy` at DD bin (m_p, n_p).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PilotSpec {
    pub m_p: usize,
    pub n_p: usize,
    pub energy: f64,
}

impl PilotSpec {
    /// Pilot at (⌈M/2⌉, ⌈N/2⌉), clamped into the grid.
    pub fn centered(geom: &FrameGeometry, energy: f64) -> Self {
        Self { m_p: geom.m.div_ceil(2).min(geom.m - 1), n_p: geom.n.div_ceil(2).min(geom.n - 1), energy }
    }

    /// E_p such that SNR_p = E_p/(MN·N₀).
    pub fn energy_for_snr(geom: &FrameGeometry, snr_p_db: f64, n0: f64) -> f64 {
        geom.mn() as f64 * crate::geometry::db_to_linear(snr_p_db) * n0
    }

    pub fn index(&self, geom: &FrameGeometry) -> usize {
        self.m_p + self.n_p * geom.m
    }

    pub fn validate(&self, geom: &FrameGeometry) -> Result<()> {
        if self.m_p >= geom.m || self.n_p >= geom.n {
            return Err(Error::PilotOutOfGrid { m: self.m_p, n: self.n_p, rows: geom.m, cols: geom.n });
        }
        if !(self.energy.is_finite() && self.energy > 0.0) {
            return Err(Error::InvalidArgument(format!("pilot energy {} must be positive", self.energy)));
        }
        Ok(())
    }
}

pub fn make_pilot_frame(spec: &PilotSpec, geom: &FrameGeometry) -> Result<DdGrid> {
    spec.validate(geom)?;
    let mut g = DdGrid::zeros(*geom);
    g.set(spec.m_p, spec.n_p, Complex64::new(spec.energy.sqrt(), 0.0));
    Ok(g)
}

/// Gray-labeled square QAM with unit average energy.
///
/// A label's first half of bits selects the in-phase level and the second
/// half the quadrature level. Along each axis, bits are Gray-decoded to a
/// level index i and mapped to amplitude (√Q − 1) − 2i, so the all-zero
/// label is the corner with both components positive.
///
/// 4-QAM table (label: point):
///
/// | bits | point |
/// |------|-------|
/// | 00 | (+1 + j)/√2 |
/// | 01 | (+1 − j)/√2 |
/// | 10 | (−1 + j)/√2 |
/// | 11 | (−1 − j)/√2 |
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: usize,
    bits_per_symbol: usize,
    points: Vec<Complex64>,
}

fn gray_decode(mut g: usize) -> usize {
    let mut b = g;
    while g > 0 {
        g >>= 1;
        b ^= g;
    }
    b
}

impl Constellation {
    pub fn qam(order: usize) -> Result<Self> {
        if order < 4 || !order.is_power_of_two() || order.trailing_zeros() % 2 != 0 {
            return Err(Error::InvalidArgument(format!("QAM order {order} is not a square power of two")));
        }
        let bits = order.trailing_zeros() as usize;
        let half = bits / 2;
        let side = 1usize << half;
        let norm = (2.0 * (order as f64 - 1.0) / 3.0).sqrt();
        let level = |g: usize| ((side - 1) as f64 - 2.0 * gray_decode(g) as f64) / norm;
        let points = (0..order)
            .map(|label| {
                let i_bits = label >> half;
                let q_bits = label & (side - 1);
                Complex64::new(level(i_bits), level(q_bits))
            })
            .collect();
        Ok(Self { order, bits_per_symbol: bits, points })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Points indexed by label.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Maps bits (one `u8` per bit, MSB first per symbol) to symbols.
    pub fn map(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        let b = self.bits_per_symbol;
        if bits.len() % b != 0 {
            return Err(Error::InvalidArgument(format!("{} bits is not a multiple of {b}", bits.len())));
        }
        Ok(bits.chunks(b).map(|c| self.points[c.iter().fold(0usize, |acc, &x| (acc << 1) | (x & 1) as usize)]).collect())
    }

    pub fn label_bits(&self, label: usize, out: &mut Vec<u8>) {
        for i in (0..self.bits_per_symbol).rev() {
            out.push(((label >> i) & 1) as u8);
        }
    }
}

/// Maps exactly MN·log2(Q) bits onto a DD grid.
pub fn qam_map(bits: &[u8], constellation: &Constellation, geom: &FrameGeometry) -> Result<DdGrid> {
    let expected = geom.mn() * constellation.bits_per_symbol();
    check_len(expected, bits.len())?;
    DdGrid::from_vec(*geom, constellation.map(bits)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn geom() -> FrameGeometry {
        FrameGeometry::new(8, 4, 15e3, 5e9).unwrap()
    }

    fn grid(g: FrameGeometry) -> DdGrid {
        let v = (0..g.mn()).map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.1).cos())).collect();
        DdGrid::from_vec(g, v).unwrap()
    }

    #[test]
    fn rcp_examples() {
        let s: Vec<Complex64> = [1.0, 2.0, 3.0, 4.0].iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let cp = add_rcp(&s, 2).unwrap();
        let re: Vec<f64> = cp.iter().map(|z| z.re).collect();
        assert_eq!(re, vec![3.0, 4.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(remove_rcp(&cp, 2).unwrap(), s);
        assert_eq!(add_rcp(&s, 0).unwrap(), s);
        assert!(add_rcp(&s, 4).is_err());
    }

    #[test]
    fn end_to_end_identity() {
        let g = geom();
        let modem = Modem::new(g).unwrap();
        let x = grid(g);
        let s = modem.modulate(&x).unwrap();
        let e_s: f64 = s.iter().map(|z| z.norm_sqr()).sum();
        assert!((e_s - x.energy()).abs() < 1e-12 * x.energy());
        let y = modem.demodulate(&remove_rcp(&add_rcp(&s, 5).unwrap(), 5).unwrap()).unwrap();
        for (a, b) in y.iter().zip(x.as_slice()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!(modem.modulate(&DdGrid::zeros(g)).unwrap().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn pilot_frame() {
        let g = FrameGeometry::new(64, 16, 15e3, 5e9).unwrap();
        let e = PilotSpec::energy_for_snr(&g, 15.0, 1.0);
        assert!((e - 32381.72).abs() < 0.01);
        let spec = PilotSpec::centered(&g, e);
        assert_eq!((spec.m_p, spec.n_p), (32, 8));
        let f = make_pilot_frame(&spec, &g).unwrap();
        assert!((f.energy() - e).abs() < 1e-9);
        assert_eq!(f.as_slice().iter().filter(|z| z.norm() > 0.0).count(), 1);
        let unit = make_pilot_frame(&PilotSpec { m_p: 0, n_p: 0, energy: 1.0 }, &g).unwrap();
        assert_eq!(unit.get(0, 0), Complex64::new(1.0, 0.0));
        assert!(make_pilot_frame(&PilotSpec { m_p: 64, n_p: 0, energy: 1.0 }, &g).is_err());
    }

    #[test]
    fn qam_labeling_and_energy() {
        let c = Constellation::qam(4).unwrap();
        let p = c.points();
        let s = FRAC_1_SQRT_2;
        assert!((p[0] - Complex64::new(s, s)).norm() < 1e-15);
        assert!((p[1] - Complex64::new(s, -s)).norm() < 1e-15);
        assert!((p[2] - Complex64::new(-s, s)).norm() < 1e-15);
        assert!((p[3] - Complex64::new(-s, -s)).norm() < 1e-15);
        for q in [4, 16, 64] {
            let c = Constellation::qam(q).unwrap();
            let e: f64 = c.points().iter().map(|z| z.norm_sqr()).sum::<f64>() / q as f64;
            assert!((e - 1.0).abs() < 1e-12);
        }
        assert!(Constellation::qam(8).is_err());
    }

    #[test]
    fn gray_neighbours_differ_by_one_bit() {
        let c = Constellation::qam(16).unwrap();
        let d_min = 2.0 / (10.0f64).sqrt();
        for a in 0..16usize {
            for b in 0..16usize {
                if ((c.points()[a] - c.points()[b]).norm() - d_min).abs() < 1e-9 {
                    assert_eq!((a ^ b).count_ones(), 1, "labels {a} {b}");
                }
            }
        }
    }

    #[test]
    fn qam_map_checks_length() {
        let g = geom();
        let c = Constellation::qam(4).unwrap();
        assert!(qam_map(&[0u8; 63], &c, &g).is_err());
        let grid = qam_map(&[0u8; 64], &c, &g).unwrap();
        assert_eq!(grid.as_slice().len(), 32);
    }
}
