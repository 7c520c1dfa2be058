use num_complex::Complex64;

use crate::error::{check_finite, Error, Result};
use crate::geometry::FrameGeometry;

/// One propagation path with normalized delay `l` (units of Δτ) and
/// normalized Doppler `k` (units of Δν).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathParams {
    pub gain: Complex64,
    pub delay: f64,
    pub doppler: f64,
}

/// Nearest integer, ties away from zero.
pub fn nearest_bin(x: f64) -> i64 {
    x.round() as i64
}

impl PathParams {
    pub fn new(gain: Complex64, delay: f64, doppler: f64) -> Self {
        Self { gain, delay, doppler }
    }

    pub fn validate(&self) -> Result<()> {
        check_finite("gain.re", self.gain.re)?;
        check_finite("gain.im", self.gain.im)?;
        check_finite("delay", self.delay)?;
        check_finite("doppler", self.doppler)?;
        if self.delay < 0.0 {
            return Err(Error::InvalidArgument(format!("negative path delay {}", self.delay)));
        }
        Ok(())
    }

    pub fn integer_delay(&self) -> i64 {
        nearest_bin(self.delay)
    }

    pub fn fractional_delay(&self) -> f64 {
        self.delay - self.integer_delay() as f64
    }

    pub fn integer_doppler(&self) -> i64 {
        nearest_bin(self.doppler)
    }

    pub fn fractional_doppler(&self) -> f64 {
        self.doppler - self.integer_doppler() as f64
    }

    pub fn delay_seconds(&self, geom: &FrameGeometry) -> f64 {
        self.delay * geom.delay_resolution()
    }

    pub fn doppler_hz(&self, geom: &FrameGeometry) -> f64 {
        self.doppler * geom.doppler_resolution()
    }
}

/// Ordered list of paths. `normalized` records that Σ|g_i|² was rescaled to 1.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathSet {
    pub paths: Vec<PathParams>,
    normalized: bool,
}

impl PathSet {
    pub fn new(paths: Vec<PathParams>) -> Self {
        Self { paths, normalized: false }
    }

    /// Rescales gains so that the total power is one.
    pub fn normalized(mut paths: Vec<PathParams>) -> Result<Self> {
        let power: f64 = paths.iter().map(|p| p.gain.norm_sqr()).sum();
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::InvalidArgument(format!("cannot normalize path power {power}")));
        }
        let s = power.sqrt().recip();
        for p in &mut paths {
            p.gain *= s;
        }
        Ok(Self { paths, normalized: true })
    }

    pub fn single(gain: Complex64, delay: f64, doppler: f64) -> Self {
        Self::new(vec![PathParams::new(gain, delay, doppler)])
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, PathParams> {
        self.paths.iter()
    }

    pub fn push(&mut self, p: PathParams) {
        self.normalized = false;
        self.paths.push(p);
    }

    pub fn total_power(&self) -> f64 {
        self.paths.iter().map(|p| p.gain.norm_sqr()).sum()
    }

    pub fn is_flagged_normalized(&self) -> bool {
        self.normalized
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths.is_empty() {
            return Err(Error::EmptyPathSet);
        }
        for p in &self.paths {
            p.validate()?;
        }
        if self.normalized && (self.total_power() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("normalized path set has total power {}", self.total_power())));
        }
        Ok(())
    }
}

impl<'a> IntoIterator for &'a PathSet {
    type Item = &'a PathParams;
    type IntoIter = std::slice::Iter<'a, PathParams>;

    fn into_iter(self) -> Self::IntoIter {
        self.paths.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_fraction_split() {
        let p = PathParams::new(Complex64::new(1.0, 0.0), 2.304, -1.4);
        assert_eq!(p.integer_delay(), 2);
        assert!((p.fractional_delay() - 0.304).abs() < 1e-12);
        assert_eq!(p.integer_doppler(), -1);
        assert!((p.fractional_doppler() + 0.4).abs() < 1e-12);
        assert_eq!(nearest_bin(2.5), 3);
        assert_eq!(nearest_bin(-2.5), -3);
    }

    #[test]
    fn normalization_sets_unit_power() {
        let ps = PathSet::normalized(vec![
            PathParams::new(Complex64::new(3.0, 1.0), 0.0, 0.0),
            PathParams::new(Complex64::new(-0.2, 2.0), 1.5, 0.3),
        ])
        .unwrap();
        assert!((ps.total_power() - 1.0).abs() < 1e-12);
        ps.validate().unwrap();
    }

    #[test]
    fn rejects_negative_delay() {
        assert!(PathSet::single(Complex64::new(1.0, 0.0), -0.1, 0.0).validate().is_err());
        assert!(PathSet::new(vec![]).validate().is_err());
    }
}
