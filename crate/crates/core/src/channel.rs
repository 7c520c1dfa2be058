//! Random doubly-dispersive channels and AWGN.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dd::{DdOperator, DdTransform, PathParams, PathSet};
use crate::error::{Error, Result};
use crate::geometry::{db_to_linear, kmh_to_mps, FrameGeometry, SPEED_OF_LIGHT};

/// Power-delay profile plus mobility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelProfile {
    pub delays_us: Vec<f64>,
    pub powers_db: Vec<f64>,
    pub v_max_kmh: f64,
    #[serde(default = "default_true")]
    pub rayleigh: bool,
    /// Uniform jitter in ±`delay_jitter_us` added to every delay except a zero one.
    #[serde(default)]
    pub delay_jitter_us: f64,
}

fn default_true() -> bool {
    true
}

impl ChannelProfile {
    /// Four-tap vehicular profile at up to 500 km/h.
    pub fn vehicular() -> Self {
        Self {
            delays_us: vec![0.0, 2.4, 5.0, 7.0],
            powers_db: vec![0.0, -1.0, -5.0, -7.0],
            v_max_kmh: 500.0,
            rayleigh: true,
            delay_jitter_us: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.delays_us.is_empty() || self.delays_us.len() != self.powers_db.len() {
            return Err(Error::InvalidArgument(format!("profile has {} delays and {} powers", self.delays_us.len(), self.powers_db.len())));
        }
        if self.delays_us.iter().chain(&self.powers_db).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite profile entry".into()));
        }
        if self.delays_us[0] < 0.0 || self.delays_us.iter().any(|&d| d < 0.0) {
            return Err(Error::InvalidArgument("profile delays must be non-negative".into()));
        }
        if !(self.v_max_kmh >= 0.0 && self.v_max_kmh.is_finite()) || self.delay_jitter_us < 0.0 {
            return Err(Error::InvalidArgument("v_max_kmh and delay_jitter_us must be non-negative".into()));
        }
        Ok(())
    }

    /// ν_max = v_max·f_c/c in Hz.
    pub fn max_doppler_hz(&self, f_c: f64) -> f64 {
        kmh_to_mps(self.v_max_kmh) * f_c / SPEED_OF_LIGHT
    }

    /// Largest delay in seconds (σ_τ), jitter included.
    pub fn max_delay_s(&self) -> f64 {
        let d = self.delays_us.iter().cloned().fold(0.0, f64::max);
        (d + self.delay_jitter_us) * 1e-6
    }

    /// Normalized PDP weights summing to one.
    pub fn weights(&self) -> Vec<f64> {
        let w: Vec<f64> = self.powers_db.iter().map(|&p| db_to_linear(p)).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    }

    /// Default search limits (⌈σ_τ/Δτ⌉, ⌈ν_max/Δν⌉).
    pub fn search_limits(&self, geom: &FrameGeometry) -> (usize, usize) {
        let l = (self.max_delay_s() / geom.delay_resolution() - 1e-9).ceil().max(0.0) as usize;
        let k = (self.max_doppler_hz(geom.f_c) / geom.doppler_resolution() - 1e-9).ceil().max(0.0) as usize;
        (l, k)
    }
}

/// White noise with per-entry variance σ² = N₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub n0: f64,
}

impl NoiseSpec {
    pub fn new(n0: f64) -> Result<Self> {
        if !(n0 > 0.0 && n0.is_finite()) {
            return Err(Error::InvalidArgument(format!("N0 = {n0} must be positive")));
        }
        Ok(Self { n0 })
    }

    pub fn sigma(&self) -> f64 {
        self.n0.sqrt()
    }
}

/// Circularly-symmetric CN(0, 1) sample.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws gains, Jakes Dopplers ν = ν_max·cos θ and (optionally jittered)
/// delays, then normalizes Σ|g_i|² = 1.
///
/// Delays must stay below one block (M·Δτ) so that the delay axis does not alias.
pub fn draw_channel<R: Rng + ?Sized>(profile: &ChannelProfile, geom: &FrameGeometry, rng: &mut R) -> Result<PathSet> {
    PathSet::normalized(draw_channel_raw(profile, geom, rng)?.iter().copied().collect())
}

/// [`draw_channel`] before the power normalization: g_i ~ CN(0, w_i) with
/// w the normalized PDP weights (or |g_i|² = w_i without Rayleigh fading).
pub fn draw_channel_raw<R: Rng + ?Sized>(profile: &ChannelProfile, geom: &FrameGeometry, rng: &mut R) -> Result<PathSet> {
    profile.validate()?;
    let guard_us = geom.block_duration() * 1e6;
    let d_max = profile.max_delay_s() * 1e6;
    if d_max >= guard_us {
        return Err(Error::DelayExceedsGuard { delay_us: d_max, guard_us });
    }
    let nu_max = profile.max_doppler_hz(geom.f_c);
    let weights = profile.weights();
    let mut paths = Vec::with_capacity(weights.len());
    for (&tau_us, &w) in profile.delays_us.iter().zip(&weights) {
        let gain =
            if profile.rayleigh { complex_normal(rng) * w.sqrt() } else { Complex64::from_polar(w.sqrt(), TAU * rng.random::<f64>()) };
        let theta = TAU * rng.random::<f64>();
        let nu = nu_max * theta.cos();
        let mut tau = tau_us;
        if profile.delay_jitter_us > 0.0 && tau_us > 0.0 {
            tau = (tau + profile.delay_jitter_us * (2.0 * rng.random::<f64>() - 1.0)).max(0.0);
        }
        paths.push(PathParams::new(gain, tau * 1e-6 / geom.delay_resolution(), nu / geom.doppler_resolution()));
    }
    Ok(PathSet::new(paths))
}

/// Noiseless y = Σ g_i T(l_i, k_i)·x.
pub fn apply_channel(transform: &DdTransform, paths: &PathSet, x: &[Complex64]) -> Result<Vec<Complex64>> {
    transform.check(x)?;
    DdOperator::channel(transform.clone(), paths)?.forward(x)
}

/// Returns y + w with w ~ CN(0, N₀·I).
pub fn add_awgn<R: Rng + ?Sized>(y: &[Complex64], spec: &NoiseSpec, rng: &mut R) -> Vec<Complex64> {
    let s = spec.sigma();
    y.iter().map(|v| v + complex_normal(rng) * s).collect()
}

/// Conversions between SNR definitions. All SNRs are linear here.
pub mod snr {
    /// N₀ for a data SNR with E_s = 1.
    pub fn noise_for_data_snr(snr_d: f64) -> f64 {
        1.0 / snr_d
    }

    /// SNR_d = log2(Q)·E_b/N₀.
    pub fn data_snr_from_ebn0(ebn0: f64, bits_per_symbol: usize) -> f64 {
        ebn0 * bits_per_symbol as f64
    }

    /// SNR_rad = |g|²/N₀.
    pub fn radar_snr(gain_power: f64, n0: f64) -> f64 {
        gain_power / n0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{child_rng, Stream};

    fn geom() -> FrameGeometry {
        FrameGeometry::new(64, 16, 15e3, 5e9).unwrap()
    }

    #[test]
    fn vehicular_numbers() {
        let p = ChannelProfile::vehicular();
        assert!((p.max_doppler_hz(5e9) - 2316.4).abs() < 0.05);
        let mut rng = child_rng(1, Stream::Channel, 0);
        let ps = draw_channel(&p, &geom(), &mut rng).unwrap();
        let l: Vec<f64> = ps.iter().map(|x| x.delay).collect();
        for (a, b) in l.iter().zip([0.0, 2.304, 4.8, 6.72]) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!((ps.total_power() - 1.0).abs() < 1e-12);
        assert_eq!(p.search_limits(&geom()), (7, 3));
    }

    #[test]
    fn doppler_support_respected() {
        let p = ChannelProfile::vehicular();
        let g = geom();
        let k_max = p.max_doppler_hz(g.f_c) / g.doppler_resolution();
        for i in 0..500 {
            let ps = draw_channel(&p, &g, &mut child_rng(3, Stream::Channel, i)).unwrap();
            assert!(ps.iter().all(|x| x.doppler.abs() <= k_max + 1e-12));
        }
    }

    #[test]
    fn delay_guard_enforced() {
        let mut p = ChannelProfile::vehicular();
        p.delays_us = vec![0.0, 80.0];
        p.powers_db = vec![0.0, 0.0];
        assert!(matches!(draw_channel(&p, &geom(), &mut child_rng(0, Stream::Channel, 0)), Err(Error::DelayExceedsGuard { .. })));
    }

    #[test]
    fn awgn_is_seeded() {
        let y = vec![Complex64::new(1.0, -1.0); 16];
        let spec = NoiseSpec::new(0.3).unwrap();
        let a = add_awgn(&y, &spec, &mut child_rng(9, Stream::Noise, 1));
        let b = add_awgn(&y, &spec, &mut child_rng(9, Stream::Noise, 1));
        assert_eq!(a, b);
        assert!(NoiseSpec::new(0.0).is_err());
    }
}
