use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// OTFS frame dimensions and numerology.
///
/// `m` subcarriers (delay bins) and `n` time slots (Doppler bins).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameGeometry {
    pub m: usize,
    pub n: usize,
    /// Subcarrier spacing in Hz.
    pub delta_f: f64,
    /// Carrier frequency in Hz.
    pub f_c: f64,
}

impl FrameGeometry {
    pub fn new(m: usize, n: usize, delta_f: f64, f_c: f64) -> Result<Self> {
        let g = Self { m, n, delta_f, f_c };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::Geometry(format!("M = {}, N = {} must be positive", self.m, self.n)));
        }
        if !(self.delta_f.is_finite() && self.delta_f > 0.0) {
            return Err(Error::Geometry(format!("delta_f = {} must be positive", self.delta_f)));
        }
        if !(self.f_c.is_finite() && self.f_c > 0.0) {
            return Err(Error::Geometry(format!("f_c = {} must be positive", self.f_c)));
        }
        Ok(())
    }

    /// Number of DD bins, MN.
    pub fn mn(&self) -> usize {
        self.m * self.n
    }

    /// Block duration T = 1/Δf.
    pub fn block_duration(&self) -> f64 {
        1.0 / self.delta_f
    }

    /// Δτ = 1/(MΔf), also the time-sample spacing.
    pub fn delay_resolution(&self) -> f64 {
        1.0 / (self.m as f64 * self.delta_f)
    }

    /// Δν = 1/(NT).
    pub fn doppler_resolution(&self) -> f64 {
        self.delta_f / self.n as f64
    }

    pub fn range_per_delay_bin(&self) -> f64 {
        self.delay_resolution() * SPEED_OF_LIGHT / 2.0
    }

    pub fn velocity_per_doppler_bin(&self) -> f64 {
        self.doppler_resolution() * SPEED_OF_LIGHT / (2.0 * self.f_c)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn kmh_to_mps(v: f64) -> f64 {
    v / 3.6
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolutions_are_consistent() {
        let g = FrameGeometry::new(64, 16, 15e3, 5e9).unwrap();
        let prod = g.delay_resolution() * g.doppler_resolution() * (g.mn() as f64);
        assert!((prod - 1.0).abs() < 1e-12);
        assert!((g.delay_resolution() - 1.0416666666666667e-6).abs() < 1e-18);
        assert!((g.doppler_resolution() - 937.5).abs() < 1e-9);
    }

    #[test]
    fn rejects_degenerate_geometry() {
        assert!(FrameGeometry::new(0, 4, 15e3, 5e9).is_err());
        assert!(FrameGeometry::new(4, 4, 0.0, 5e9).is_err());
        assert!(FrameGeometry::new(4, 4, 15e3, f64::NAN).is_err());
    }

    #[test]
    fn db_round_trip() {
        for db in [-20.0, -3.0, 0.0, 0.1, 12.5, 20.0, 45.0] {
            assert!((linear_to_db(db_to_linear(db)) - db).abs() < 1e-12);
        }
    }
}
