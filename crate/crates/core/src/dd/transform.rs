use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_len, Result};
use crate::geometry::FrameGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// FFT plans for the two unitary transforms every DD operator is built from:
/// F_MN over the whole frame and F_N ⊗ I_M along the Doppler axis.
///
/// Vectors are `vec(X)` of an M×N grid, so bin (m, n) sits at `m + n*M`.
#[derive(Clone)]
pub struct DdTransform {
    geom: FrameGeometry,
    fft_mn: Arc<dyn Fft<f64>>,
    ifft_mn: Arc<dyn Fft<f64>>,
    fft_n: Arc<dyn Fft<f64>>,
    ifft_n: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for DdTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DdTransform").field("geom", &self.geom).finish()
    }
}

impl DdTransform {
    pub fn new(geom: FrameGeometry) -> Result<Self> {
        geom.validate()?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            geom,
            fft_mn: planner.plan_fft_forward(geom.mn()),
            ifft_mn: planner.plan_fft_inverse(geom.mn()),
            fft_n: planner.plan_fft_forward(geom.n),
            ifft_n: planner.plan_fft_inverse(geom.n),
        })
    }

    pub fn geometry(&self) -> &FrameGeometry {
        &self.geom
    }

    pub fn mn(&self) -> usize {
        self.geom.mn()
    }

    pub fn check(&self, v: &[Complex64]) -> Result<()> {
        check_len(self.mn(), v.len())
    }

    /// Unitary F_MN (forward) or F_MN^H (inverse), in place.
    pub fn frame_dft(&self, v: &mut [Complex64], dir: Direction) {
        debug_assert_eq!(v.len(), self.mn());
        match dir {
            Direction::Forward => self.fft_mn.process(v),
            Direction::Inverse => self.ifft_mn.process(v),
        }
        let s = (self.mn() as f64).sqrt().recip();
        v.iter_mut().for_each(|x| *x *= s);
    }

    /// F_N ⊗ I_M (forward) or its adjoint, in place: a unitary length-N DFT
    /// along the Doppler axis of every delay row.
    pub fn doppler_dft(&self, v: &mut [Complex64], dir: Direction) {
        let (m, n) = (self.geom.m, self.geom.n);
        debug_assert_eq!(v.len(), m * n);
        if n == 1 {
            return;
        }
        let mut rows = vec![Complex64::default(); m * n];
        for col in 0..n {
            for row in 0..m {
                rows[row * n + col] = v[row + col * m];
            }
        }
        match dir {
            Direction::Forward => self.fft_n.process(&mut rows),
            Direction::Inverse => self.ifft_n.process(&mut rows),
        }
        let s = (n as f64).sqrt().recip();
        for col in 0..n {
            for row in 0..m {
                v[row + col * m] = rows[row * n + col] * s;
            }
        }
    }

    /// Multiplies by Dᵃ, i.e. `v[q] *= exp(j2π·q·a/MN)`.
    pub fn phase_ramp(&self, v: &mut [Complex64], a: f64) {
        let mut ramp = vec![Complex64::default(); v.len()];
        fill_ramp(&mut ramp, a, self.mn());
        v.iter_mut().zip(&ramp).for_each(|(x, r)| *x *= r);
    }
}

/// exp(j2π·x) with the integer part of x removed first.
pub(crate) fn cis_turns(x: f64) -> Complex64 {
    let f = x - x.floor();
    Complex64::from_polar(1.0, TAU * f)
}

const RAMP_BLOCK: usize = 64;

/// `out[q] = exp(j2π·q·a/mn)` for q = 0..out.len().
///
/// Each entry is the product of two directly evaluated exponentials
/// (block offset and in-block offset), so errors do not accumulate along q.
pub(crate) fn fill_ramp(out: &mut [Complex64], a: f64, mn: usize) {
    let step = a / mn as f64;
    let fine: Vec<Complex64> = (0..RAMP_BLOCK).map(|q| cis_turns(step * q as f64)).collect();
    for (b, chunk) in out.chunks_mut(RAMP_BLOCK).enumerate() {
        let base = cis_turns(a * (b * RAMP_BLOCK) as f64 / mn as f64);
        for (o, f) in chunk.iter_mut().zip(&fine) {
            *o = base * f;
        }
    }
}

pub(crate) fn ramp(a: f64, mn: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); mn];
    fill_ramp(&mut out, a, mn);
    out
}
