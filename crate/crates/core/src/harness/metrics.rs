use std::f64::consts::TAU;

use faer::Mat;
use num_complex::Complex64;

use crate::dd::{frobenius_sq, PathParams};
use crate::error::{check_len, Error, Result};
use crate::geometry::linear_to_db;

/// Reported in place of −∞ when the estimate is exact.
pub const NMSE_FLOOR_DB: f64 = -300.0;

/// One aggregated output line.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub sweep_name: String,
    pub sweep_value: f64,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

impl MetricRow {
    pub fn new(sweep_name: &str, sweep_value: f64, metric: impl Into<String>, mean: f64, stderr: f64, trials: usize) -> Result<Self> {
        let metric = metric.into();
        if !mean.is_finite() || !stderr.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "non-finite {metric} at {sweep_name} = {sweep_value}: mean {mean}, stderr {stderr}"
            )));
        }
        Ok(Self { sweep_name: sweep_name.to_string(), sweep_value, metric, mean, stderr, trials })
    }
}

/// Running sample mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulator {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero below two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for Accumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut a = Self::new();
        iter.into_iter().for_each(|x| a.push(x));
        a
    }
}

/// Averaged in the linear domain, then converted to dB. The standard error
/// is carried through the logarithm to first order.
pub fn nmse_db_summary(ratios: &Accumulator) -> (f64, f64) {
    let m = ratios.mean();
    if m <= 0.0 {
        return (NMSE_FLOOR_DB, 0.0);
    }
    let db = linear_to_db(m).max(NMSE_FLOOR_DB);
    (db, 10.0 / std::f64::consts::LN_10 * ratios.stderr() / m)
}

/// Square root of the mean squared error, standard error by the delta method.
pub fn rmse_summary(squared: &Accumulator) -> (f64, f64) {
    let r = squared.mean().sqrt();
    if r == 0.0 {
        return (0.0, 0.0);
    }
    (r, squared.stderr() / (2.0 * r))
}

fn db_floor(ratio: f64) -> f64 {
    if ratio <= 0.0 {
        NMSE_FLOOR_DB
    } else {
        linear_to_db(ratio).max(NMSE_FLOOR_DB)
    }
}

/// ‖H_true − H_est‖²_F / ‖H_true‖²_F on explicit matrices, in dB.
pub fn nmse(h_true: &Mat<Complex64>, h_est: &Mat<Complex64>) -> Result<f64> {
    Ok(db_floor(nmse_ratio(h_true, h_est)?))
}

pub fn nmse_ratio(h_true: &Mat<Complex64>, h_est: &Mat<Complex64>) -> Result<f64> {
    check_len(h_true.nrows(), h_est.nrows())?;
    check_len(h_true.ncols(), h_est.ncols())?;
    let den = frobenius_sq(h_true);
    if !(den > 0.0) {
        return Err(Error::InvalidArgument("true channel has zero Frobenius norm".into()));
    }
    Ok(frobenius_sq(&(h_true - h_est)) / den)
}

/// Σ_{p=0}^{MN−1} e^{j2π·a·p/MN}
fn geometric(a: f64, mn: usize) -> Complex64 {
    let d = Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, TAU * a / mn as f64);
    if d.norm() < 1e-9 {
        return (0..mn).map(|p| Complex64::from_polar(1.0, TAU * a * p as f64 / mn as f64)).sum();
    }
    (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, TAU * a)) / d
}

/// tr(T(l_a, k_a)^H·T(l_b, k_b)) for frames of MN samples.
pub fn t_inner(a: &PathParams, b: &PathParams, mn: usize) -> Complex64 {
    geometric(a.delay - b.delay, mn) * geometric(b.doppler - a.doppler, mn) / mn as f64
}

/// ‖Σ g_i·T(l_i, k_i)‖²_F without forming the matrix.
pub fn channel_frobenius_sq(paths: &[PathParams], mn: usize) -> f64 {
    let mut s = 0.0;
    for (i, a) in paths.iter().enumerate() {
        s += a.gain.norm_sqr() * mn as f64;
        for b in &paths[i + 1..] {
            s += 2.0 * (a.gain.conj() * b.gain * t_inner(a, b, mn)).re;
        }
    }
    s
}

/// Same ratio as [`nmse_ratio`] computed from path lists through the Gram
/// entries of the T operators. Cost O((P + P̂)²) instead of O((MN)²).
pub fn nmse_ratio_paths(truth: &[PathParams], estimate: &[PathParams], mn: usize) -> Result<f64> {
    let den = channel_frobenius_sq(truth, mn);
    if !(den > 0.0) {
        return Err(Error::InvalidArgument("true channel has zero Frobenius norm".into()));
    }
    let mut diff: Vec<PathParams> = truth.to_vec();
    diff.extend(estimate.iter().map(|p| PathParams { gain: -p.gain, ..*p }));
    Ok((channel_frobenius_sq(&diff, mn) / den).max(0.0))
}

pub fn nmse_db_paths(truth: &[PathParams], estimate: &[PathParams], mn: usize) -> Result<f64> {
    Ok(db_floor(nmse_ratio_paths(truth, estimate, mn)?))
}

/// CRLB values read off the published range/velocity curves, indexed by
/// SNR_rad in dB. Reference data only; nothing here is computed.
pub mod crlb_reference {
    pub const LABEL: &str = "published reference, not computed";
    pub const SNR_RAD_DB: [f64; 9] = [-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0];
    pub const RANGE_M: [f64; 9] = [
        20.3098327796734,
        11.3877838586348,
        6.40278866554551,
        3.63674856166898,
        2.03565073990067,
        1.14644942341252,
        0.642741110556078,
        0.362448006332245,
        0.204338722886295,
    ];
    pub const VELOCITY_MPS: [f64; 9] = [
        0.914278165245258,
        0.514288836353744,
        0.288686650397794,
        0.162756021280667,
        0.0916496608676246,
        0.0515558960163395,
        0.0288712360318711,
        0.0162747944520075,
        0.00916766949039323,
    ];

    /// (range, velocity) when `snr_db` is one of the tabulated points.
    pub fn lookup(snr_db: f64) -> Option<(f64, f64)> {
        SNR_RAD_DB.iter().position(|&s| (s - snr_db).abs() < 1e-9).map(|i| (RANGE_M[i], VELOCITY_MPS[i]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dd::{dense_channel_matrix, Domain, PathSet};
    use crate::geometry::FrameGeometry;

    fn paths() -> Vec<PathParams> {
        vec![
            PathParams::new(Complex64::new(0.8, 0.1), 0.0, 0.3),
            PathParams::new(Complex64::new(-0.2, 0.5), 2.4, -1.7),
            PathParams::new(Complex64::new(0.1, -0.3), 3.0, 2.0),
        ]
    }

    #[test]
    fn trivial_ratios() {
        let g = FrameGeometry::new(8, 4, 15e3, 5e9).unwrap();
        let h = dense_channel_matrix(&PathSet::new(paths()), &g, Domain::DelayDoppler).unwrap();
        assert_eq!(nmse(&h, &h).unwrap(), NMSE_FLOOR_DB);
        assert!(nmse(&h, &Mat::zeros(32, 32)).unwrap().abs() < 1e-12);
        let half = Mat::from_fn(32, 32, |i, j| h[(i, j)] * 0.5);
        assert!((nmse(&h, &half).unwrap() - 10.0 * 0.25f64.log10()).abs() < 1e-12);
        assert!(nmse(&Mat::zeros(32, 32), &h).is_err());
    }

    #[test]
    fn gram_form_matches_dense() {
        let g = FrameGeometry::new(8, 4, 15e3, 5e9).unwrap();
        let truth = paths();
        let est = vec![PathParams::new(Complex64::new(0.75, 0.12), 0.1, 0.25), PathParams::new(Complex64::new(-0.2, 0.45), 2.5, -1.6)];
        let ht = dense_channel_matrix(&PathSet::new(truth.clone()), &g, Domain::DelayDoppler).unwrap();
        let he = dense_channel_matrix(&PathSet::new(est.clone()), &g, Domain::DelayDoppler).unwrap();
        let dense = nmse_ratio(&ht, &he).unwrap();
        let gram = nmse_ratio_paths(&truth, &est, 32).unwrap();
        assert!((dense - gram).abs() < 1e-10 * dense.max(1.0), "{dense} vs {gram}");
        assert!((channel_frobenius_sq(&truth, 32) - frobenius_sq(&ht)).abs() < 1e-9);
    }

    #[test]
    fn accumulator_statistics() {
        let a: Accumulator = [1.0, 2.0, 3.0, 4.0].into_iter().collect();
        assert_eq!(a.mean(), 2.5);
        assert!((a.variance() - 5.0 / 3.0).abs() < 1e-12);
        assert!((a.stderr() - (5.0 / 12.0f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn crlb_lookup() {
        assert_eq!(crlb_reference::lookup(20.0).unwrap().0, 0.204338722886295);
        assert!(crlb_reference::lookup(7.0).is_none());
    }
}
