use num_complex::Complex64;

use super::{energy, CountOrigin, EstimationReport, PathTrace, ThresholdConfig};
use crate::dd::{DdTransform, PathParams, PathSet};
use crate::error::{Error, Result};
use crate::waveform::{make_pilot_frame, wrapped_index, PilotSpec};

/// Integer-grid baseline: every bin (m_p+L, n_p+K) of the window whose
/// magnitude exceeds the threshold becomes a path with (l, k) = (L, K).
///
/// The gain divides the received bin by the noiseless response of a
/// unit-gain path at that bin, so an on-grid path is recovered exactly.
pub fn threshold_estimate(t: &DdTransform, y: &[Complex64], pilot: &PilotSpec, cfg: &ThresholdConfig) -> Result<EstimationReport> {
    let geom = *t.geometry();
    t.check(y)?;
    if !(cfg.threshold > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold {} must be positive", cfg.threshold)));
    }
    if cfg.l_max >= geom.m || 2 * cfg.k_max >= geom.n {
        return Err(Error::InvalidArgument(format!(
            "threshold window L <= {}, |K| <= {} does not fit a {}x{} grid",
            cfg.l_max, cfg.k_max, geom.m, geom.n
        )));
    }
    let x_p = make_pilot_frame(pilot, &geom)?;
    let mut paths = Vec::new();
    let mut traces = Vec::new();
    for l in 0..=cfg.l_max as i64 {
        for k in -(cfg.k_max as i64)..=(cfg.k_max as i64) {
            let bin = wrapped_index(&geom, pilot.m_p as i64 + l, pilot.n_p as i64 + k);
            if y[bin].norm() > cfg.threshold {
                let response = t.apply_t(l as f64, k as f64, x_p.as_slice(), false)?[bin];
                paths.push(PathParams::new(y[bin] / response, l as f64, k as f64));
                traces.push(PathTrace { integer: (l, k), doppler_levels: vec![], delay_levels: vec![] });
            }
        }
    }
    let path_count = paths.len();
    Ok(EstimationReport {
        paths: PathSet::new(paths),
        residual_energies: vec![energy(y)],
        traces,
        path_count,
        origin: CountOrigin::Threshold,
    })
}
