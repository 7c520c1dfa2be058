use num_complex::Complex64;

use super::correlator::{DopplerBank, Reference};
use super::{extraction_loop, sc_should_stop, CountOrigin, EstimationReport, EstimatorConfig, InitRule, PathCountSource};
use crate::dd::{DdTransform, Direction, PathSet};
use crate::error::{Error, Result};
use crate::geometry::SPEED_OF_LIGHT;

/// Range and radial velocity of one detected target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub range_m: f64,
    pub velocity_mps: f64,
    pub gain: Complex64,
}

#[derive(Debug, Clone)]
pub struct SensingReport {
    pub estimation: EstimationReport,
    pub targets: Vec<Target>,
}

/// argmax over L ∈ [0, L_max], K ∈ [−K_max, K_max] of |x^H Q^T(L)·Q^H(K)·y|.
/// Ties keep the smallest L, then K.
pub(crate) fn integer_correlation_init(t: &DdTransform, r: &Reference, y: &[Complex64], l_max: usize, k_max: usize) -> (i64, i64) {
    let mut a = y.to_vec();
    t.doppler_dft(&mut a, Direction::Inverse);
    let mut best = (0i64, -(k_max as i64));
    let mut best_v = f64::NEG_INFINITY;
    for l in 0..=l_max as i64 {
        let mut bank = DopplerBank::from_time(&a, &r.delayed(t, l as f64));
        for k in -(k_max as i64)..=(k_max as i64) {
            let v = bank.eval(k as f64);
            if v > best_v {
                best_v = v;
                best = (l, k);
            }
        }
    }
    best
}

/// Radar processing of a backscattered data frame whose symbols `x_known`
/// are known at the sensing receiver. Delays and Dopplers are round-trip
/// quantities: d = l·Δτ·c/2 and v = k·Δν·c/(2f_c).
pub fn sense_targets(t: &DdTransform, y: &[Complex64], x_known: &[Complex64], cfg: &EstimatorConfig) -> Result<SensingReport> {
    let geom = *t.geometry();
    cfg.validate(&geom)?;
    t.check(y)?;
    let reference = Reference::new(t, x_known)?;
    let (limit, origin, sc) = match cfg.path_count {
        PathCountSource::Known(p) => (p, CountOrigin::Known, false),
        PathCountSource::Sc => (cfg.stopping.max_paths, CountOrigin::Sc, true),
        PathCountSource::Fnn => return Err(Error::InvalidArgument("the path-count classifier is trained on pilot frames only".into())),
    };
    let rule = cfg.stopping;
    let out = extraction_loop(t, &reference, y, cfg, InitRule::Correlation, limit, |i, res, en| {
        sc && sc_should_stop(i, res, en, &rule, |r| {
            let (l, k) = integer_correlation_init(t, &reference, r, cfg.l_max, cfg.k_max);
            let mut a = r.to_vec();
            t.doppler_dft(&mut a, Direction::Inverse);
            let v = DopplerBank::from_time(&a, &reference.delayed(t, l as f64)).eval(k as f64);
            // Matched-filter output normalized to the per-bin noise scale.
            v * v / reference.energy()
        })
    })?;
    let targets = out
        .paths
        .iter()
        .map(|p| Target {
            range_m: p.delay * geom.delay_resolution() * SPEED_OF_LIGHT / 2.0,
            velocity_mps: p.doppler * geom.doppler_resolution() * SPEED_OF_LIGHT / (2.0 * geom.f_c),
            gain: p.gain,
        })
        .collect();
    let path_count = out.paths.len();
    Ok(SensingReport {
        estimation: EstimationReport {
            paths: PathSet::new(out.paths),
            residual_energies: out.energies,
            traces: out.traces,
            path_count,
            origin,
        },
        targets,
    })
}
