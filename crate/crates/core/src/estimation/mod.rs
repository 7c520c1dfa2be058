//! Pilot-based delay-Doppler channel estimation and radar sensing.
//!
//! Each iteration of [`estimate_channel`] takes the strongest integer bin,
//! refines Doppler with the delay fixed to its integer part, compensates
//! the Doppler, refines the delay, projects out the gain and cancels the
//! reconstructed path from the residual.

mod config;
mod correlator;
mod sensing;
mod threshold;

use num_complex::Complex64;

pub use config::{EstimatorConfig, PathCountSource, StoppingRule, ThresholdConfig, DEFAULT_NOISE_MARGIN};
pub use correlator::Reference;
pub use sensing::{sense_targets, SensingReport, Target};
pub use threshold::threshold_estimate;

use correlator::{hierarchical_search, DelayBank, DopplerBank};

use crate::dd::{DdOperator, DdTransform, PathParams, PathSet, QMode};
use crate::error::{Error, Result};
use crate::fnn::FnnModel;
use crate::geometry::FrameGeometry;
use crate::waveform::{make_pilot_frame, wrapped_index, PilotSpec};

/// How the reported path count was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountOrigin {
    Known,
    Fnn,
    Sc,
    Threshold,
}

/// Refinement history of one extracted path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTrace {
    pub integer: (i64, i64),
    /// Doppler estimate after each hierarchical level.
    pub doppler_levels: Vec<f64>,
    /// Delay estimate after each hierarchical level.
    pub delay_levels: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct EstimationReport {
    pub paths: PathSet,
    /// ‖y⁽ⁱ⁾‖² for i = 0..=P̂.
    pub residual_energies: Vec<f64>,
    pub traces: Vec<PathTrace>,
    pub path_count: usize,
    pub origin: CountOrigin,
}

impl EstimationReport {
    /// Ĥ_DD = Σ ĝ_i T(l̂_i, k̂_i), or `None` when no path was found.
    pub fn operator(&self, t: &DdTransform) -> Result<Option<DdOperator>> {
        if self.paths.is_empty() {
            return Ok(None);
        }
        DdOperator::channel(t.clone(), &self.paths).map(Some)
    }
}

/// Result of one hierarchical refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub estimate: f64,
    pub levels: Vec<f64>,
}

/// Strongest residual bin |Y[m_p+L, n_p+K]|² over L ∈ [0, L_max],
/// K ∈ [−K_max, K_max], read with wrap-around. Ties keep the smallest L, then K.
pub fn integer_dd_init(y_res: &[Complex64], pilot: &PilotSpec, geom: &FrameGeometry, l_max: usize, k_max: usize) -> (i64, i64) {
    let mut best = (0i64, -(k_max as i64));
    let mut best_v = f64::NEG_INFINITY;
    for l in 0..=l_max as i64 {
        for k in -(k_max as i64)..=(k_max as i64) {
            let v = y_res[wrapped_index(geom, pilot.m_p as i64 + l, pilot.n_p as i64 + k)].norm_sqr();
            if v > best_v {
                best_v = v;
                best = (l, k);
            }
        }
    }
    best
}

fn window_peak(y_res: &[Complex64], pilot: &PilotSpec, geom: &FrameGeometry, l_max: usize, k_max: usize) -> f64 {
    let (l, k) = integer_dd_init(y_res, pilot, geom, l_max, k_max);
    y_res[wrapped_index(geom, pilot.m_p as i64 + l, pilot.n_p as i64 + k)].norm_sqr()
}

/// Doppler refinement around K̂ with the delay fixed at L̂.
pub fn refine_doppler(
    t: &DdTransform,
    reference: &Reference,
    y_res: &[Complex64],
    l_int: i64,
    k_int: i64,
    cfg: &EstimatorConfig,
) -> Result<Refinement> {
    t.check(y_res)?;
    let mut bank = DopplerBank::new(t, reference, y_res, l_int as f64);
    let levels = hierarchical_search(k_int as f64, cfg.n_k, cfg.levels, false, |k| bank.eval(k));
    Ok(Refinement { estimate: *levels.last().unwrap_or(&(k_int as f64)), levels })
}

/// y_d = Q^H(k̂)·y_res
pub fn doppler_compensate(t: &DdTransform, y_res: &[Complex64], k_hat: f64) -> Result<Vec<Complex64>> {
    t.apply_q(k_hat, y_res, QMode::Adjoint)
}

/// Delay refinement around L̂ on a Doppler-compensated observation.
/// Never proposes a negative delay.
pub fn refine_delay(t: &DdTransform, reference: &Reference, y_d: &[Complex64], l_int: i64, cfg: &EstimatorConfig) -> Result<Refinement> {
    t.check(y_d)?;
    let mut bank = DelayBank::new(t, reference, y_d);
    let levels = hierarchical_search(l_int as f64, cfg.n_l, cfg.levels, true, |l| bank.eval(l));
    Ok(Refinement { estimate: *levels.last().unwrap_or(&(l_int as f64)), levels })
}

/// ĝ = (T(l̂,k̂)·x)^H·y_res / ‖x‖²
pub fn estimate_gain(t: &DdTransform, reference: &Reference, y_res: &[Complex64], l_hat: f64, k_hat: f64) -> Result<Complex64> {
    t.check(y_res)?;
    let tx = t.apply_t(l_hat, k_hat, reference.frame(), false)?;
    Ok(inner(&tx, y_res) / reference.energy())
}

/// y_res − ĝ·T(l̂,k̂)·x
pub fn cancel_ipi(
    t: &DdTransform,
    reference: &Reference,
    y_res: &[Complex64],
    gain: Complex64,
    l_hat: f64,
    k_hat: f64,
) -> Result<Vec<Complex64>> {
    t.check(y_res)?;
    let tx = t.apply_t(l_hat, k_hat, reference.frame(), false)?;
    Ok(y_res.iter().zip(&tx).map(|(y, r)| y - gain * r).collect())
}

pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn energy(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Integer initialisation used for one iteration of the shared loop.
pub(crate) enum InitRule<'a> {
    PilotBin(&'a PilotSpec),
    Correlation,
}

pub(crate) struct LoopOutcome {
    pub paths: Vec<PathParams>,
    pub energies: Vec<f64>,
    pub traces: Vec<PathTrace>,
}

/// Shared extract-refine-cancel loop. `stop` is consulted before each
/// iteration with the iteration index (0-based) and the current residual.
pub(crate) fn extraction_loop(
    t: &DdTransform,
    reference: &Reference,
    y: &[Complex64],
    cfg: &EstimatorConfig,
    init: InitRule<'_>,
    max_paths: usize,
    mut stop: impl FnMut(usize, &[Complex64], &[f64]) -> bool,
) -> Result<LoopOutcome> {
    let geom = *t.geometry();
    let mut y_res = y.to_vec();
    let mut energies = vec![energy(&y_res)];
    let mut paths = Vec::new();
    let mut traces = Vec::new();
    for i in 0..max_paths {
        if stop(i, &y_res, &energies) {
            break;
        }
        let (l_int, k_int) = match init {
            InitRule::PilotBin(p) => integer_dd_init(&y_res, p, &geom, cfg.l_max, cfg.k_max),
            InitRule::Correlation => sensing::integer_correlation_init(t, reference, &y_res, cfg.l_max, cfg.k_max),
        };
        let dop = refine_doppler(t, reference, &y_res, l_int, k_int, cfg)?;
        let y_d = doppler_compensate(t, &y_res, dop.estimate)?;
        let del = refine_delay(t, reference, &y_d, l_int, cfg)?;
        let gain = estimate_gain(t, reference, &y_res, del.estimate, dop.estimate)?;
        y_res = cancel_ipi(t, reference, &y_res, gain, del.estimate, dop.estimate)?;
        energies.push(energy(&y_res));
        paths.push(PathParams::new(gain, del.estimate, dop.estimate));
        traces.push(PathTrace { integer: (l_int, k_int), doppler_levels: dop.levels, delay_levels: del.levels });
    }
    Ok(LoopOutcome { paths, energies, traces })
}

pub(crate) fn sc_should_stop(
    i: usize,
    y_res: &[Complex64],
    energies: &[f64],
    rule: &StoppingRule,
    peak: impl Fn(&[Complex64]) -> f64,
) -> bool {
    let current = *energies.last().unwrap_or(&0.0);
    if peak(y_res) < 9.0 * rule.noise_var {
        return true;
    }
    if i > 0 && current < rule.gamma * energies[0] {
        return true;
    }
    if let Some(margin) = rule.noise_margin {
        if current < (1.0 + margin) * y_res.len() as f64 * rule.noise_var {
            return true;
        }
    }
    current == 0.0
}

/// Full correlation-method estimate from a received pilot frame.
pub fn estimate_channel(
    t: &DdTransform,
    y: &[Complex64],
    pilot: &PilotSpec,
    cfg: &EstimatorConfig,
    model: Option<&FnnModel>,
) -> Result<EstimationReport> {
    let geom = *t.geometry();
    cfg.validate(&geom)?;
    t.check(y)?;
    let reference = Reference::new(t, make_pilot_frame(pilot, &geom)?.as_slice())?;
    let (limit, origin, sc) = match cfg.path_count {
        PathCountSource::Known(p) => (p, CountOrigin::Known, false),
        PathCountSource::Fnn => {
            let model = model.ok_or(Error::MissingModel)?;
            let features: Vec<f64> = y.iter().map(|z| z.norm()).collect();
            (model.predict_path_count(&features)?, CountOrigin::Fnn, false)
        }
        PathCountSource::Sc => (cfg.stopping.max_paths, CountOrigin::Sc, true),
    };
    let rule = cfg.stopping;
    let out = extraction_loop(t, &reference, y, cfg, InitRule::PilotBin(pilot), limit, |i, res, en| {
        sc && sc_should_stop(i, res, en, &rule, |r| window_peak(r, pilot, &geom, cfg.l_max, cfg.k_max))
    })?;
    let path_count = out.paths.len();
    Ok(EstimationReport { paths: PathSet::new(out.paths), residual_energies: out.energies, traces: out.traces, path_count, origin })
}

/// Path count chosen by the stopping rule.
pub fn sc_estimate_p(t: &DdTransform, y: &[Complex64], pilot: &PilotSpec, cfg: &EstimatorConfig) -> Result<usize> {
    let cfg = EstimatorConfig { path_count: PathCountSource::Sc, ..*cfg };
    Ok(estimate_channel(t, y, pilot, &cfg, None)?.path_count)
}
