use num_complex::Complex64;

use crate::dd::{fill_ramp, DdTransform, Direction};
use crate::error::{Error, Result};

/// Known transmitted frame (a pilot or a data frame) with its time samples
/// and their spectrum precomputed.
#[derive(Debug, Clone)]
pub struct Reference {
    x: Vec<Complex64>,
    energy: f64,
    /// F_MN·(F_N^H⊗I)·x
    spectrum: Vec<Complex64>,
}

impl Reference {
    pub fn new(t: &DdTransform, x: &[Complex64]) -> Result<Self> {
        t.check(x)?;
        let energy: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        if !(energy > 0.0) {
            return Err(Error::InvalidArgument("reference frame has zero energy".into()));
        }
        let mut time = x.to_vec();
        t.doppler_dft(&mut time, Direction::Inverse);
        let mut spectrum = time;
        t.frame_dft(&mut spectrum, Direction::Forward);
        Ok(Self { x: x.to_vec(), energy, spectrum })
    }

    pub fn frame(&self) -> &[Complex64] {
        &self.x
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// F^H·D⁻ˡ·F·s, the time samples delayed by l.
    pub fn delayed(&self, t: &DdTransform, l: f64) -> Vec<Complex64> {
        let mut b = self.spectrum.clone();
        t.phase_ramp(&mut b, -l);
        t.frame_dft(&mut b, Direction::Inverse);
        b
    }
}

/// |Σ_q d_q·exp(j2π·q·x/MN)|
pub(crate) fn dtft_abs(d: &[Complex64], x: f64, scratch: &mut Vec<Complex64>) -> f64 {
    scratch.resize(d.len(), Complex64::default());
    fill_ramp(scratch, x, d.len());
    d.iter().zip(scratch.iter()).map(|(a, b)| a * b).sum::<Complex64>().norm()
}

/// Doppler filterbank for a fixed integer delay.
///
/// |x^H Q^T(L)·Q^H(k)·y| = |Σ_q conj(b_q)·a_q·exp(−j2πqk/MN)| with
/// a = (F_N^H⊗I)·y and b the reference delayed by L.
pub(crate) struct DopplerBank {
    d: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl DopplerBank {
    pub fn new(t: &DdTransform, r: &Reference, y: &[Complex64], delay: f64) -> Self {
        let mut a = y.to_vec();
        t.doppler_dft(&mut a, Direction::Inverse);
        Self::from_time(&a, &r.delayed(t, delay))
    }

    pub fn from_time(a: &[Complex64], b: &[Complex64]) -> Self {
        let d = a.iter().zip(b).map(|(a, b)| b.conj() * a).collect();
        Self { d, scratch: Vec::new() }
    }

    pub fn eval(&mut self, k: f64) -> f64 {
        dtft_abs(&self.d, -k, &mut self.scratch)
    }
}

/// Delay filterbank on a Doppler-compensated observation y_d.
///
/// |x^H Q^T(l)·y_d| = |Σ_q conj(S_q)·V_q·exp(j2πql/MN)| with S = F·s and
/// V = (F_N⊗I)·y_d.
pub(crate) struct DelayBank {
    d: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl DelayBank {
    pub fn new(t: &DdTransform, r: &Reference, y_d: &[Complex64]) -> Self {
        let mut v = y_d.to_vec();
        t.doppler_dft(&mut v, Direction::Forward);
        let d = r.spectrum.iter().zip(&v).map(|(s, v)| s.conj() * v).collect();
        Self { d, scratch: Vec::new() }
    }

    pub fn eval(&mut self, l: f64) -> f64 {
        dtft_abs(&self.d, l, &mut self.scratch)
    }
}

/// Hierarchical grid search: at level h the grid is
/// `center + κ·(2·half)^(−h)`, κ ∈ [−half, half], recentred on the previous
/// winner. With `non_negative`, candidates below zero are skipped.
/// Ties keep the first (smallest κ) candidate. Returns the winner of every level.
pub(crate) fn hierarchical_search(
    start: f64,
    half: usize,
    levels: usize,
    non_negative: bool,
    mut objective: impl FnMut(f64) -> f64,
) -> Vec<f64> {
    let mut center = start;
    let mut trace = Vec::with_capacity(levels);
    let width = (2 * half) as f64;
    for h in 1..=levels {
        let step = width.powi(-(h as i32));
        let mut best: Option<(f64, f64)> = None;
        for kappa in -(half as i64)..=(half as i64) {
            let cand = center + kappa as f64 * step;
            if non_negative && cand < 0.0 {
                continue;
            }
            let v = objective(cand);
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((cand, v));
            }
        }
        if let Some((c, _)) = best {
            center = c;
        }
        trace.push(center);
    }
    trace
}
