use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::config::{CsiMode, EqualizerKind, PathCountMode, SimConfig, StepKind, SweepAxis};
use super::metrics::{crlb_reference, nmse_db_summary, nmse_ratio_paths, rmse_summary, Accumulator, MetricRow};
use crate::channel::{add_awgn, complex_normal, draw_channel, snr, NoiseSpec};
use crate::dd::{dense_channel_matrix_with, DdOperator, DdTransform, Domain, LinearOperator, PathSet};
use crate::equalize::{bit_errors, imfc_equalize, ml_detect, spectral_radius, EqualizerConfig, LmmseEqualizer, StepMode};
use crate::error::{Error, Result};
use crate::estimation::{
    estimate_channel, sc_estimate_p, sense_targets, threshold_estimate, EstimatorConfig, PathCountSource, ThresholdConfig,
};
use crate::fnn::{fnn_train, generate_dataset, FnnModel, TrainOutcome};
use crate::geometry::{db_to_linear, kmh_to_mps, FrameGeometry, SPEED_OF_LIGHT};
use crate::rng::{child_rng, Stream};
use crate::waveform::{make_pilot_frame, qam_map, Constellation, PilotSpec};

/// Runs `f` for every trial index on the current rayon pool and returns the
/// results in trial order.
pub fn run_trials<T: Send>(trials: usize, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..trials as u64).into_par_iter().map(f).collect()
}

fn require_axis(cfg: &SimConfig, allowed: &[SweepAxis], experiment: &str) -> Result<()> {
    let axis = cfg.sweep()?.axis;
    if allowed.contains(&axis) {
        Ok(())
    } else {
        Err(Error::Config(format!("sweep.axis: {experiment} cannot sweep {}", axis.name())))
    }
}

pub fn pilot_spec(cfg: &SimConfig, geom: &FrameGeometry, snr_db: f64) -> Result<PilotSpec> {
    let mut p = PilotSpec::centered(geom, PilotSpec::energy_for_snr(geom, snr_db, 1.0));
    if let Some(m) = cfg.pilot.m_p {
        p.m_p = m;
    }
    if let Some(n) = cfg.pilot.n_p {
        p.n_p = n;
    }
    p.validate(geom)?;
    Ok(p)
}

/// Correlation-method settings at `levels` with the configured path-count source.
pub fn estimator_config(cfg: &SimConfig, geom: &FrameGeometry, levels: usize, noise_var: f64) -> EstimatorConfig {
    let source = match cfg.estimation.path_count {
        PathCountMode::Known => PathCountSource::Known(cfg.channel.delays_us.len()),
        PathCountMode::Fnn => PathCountSource::Fnn,
        PathCountMode::Sc => PathCountSource::Sc,
    };
    let mut e = EstimatorConfig::for_profile(geom, &cfg.channel, source, noise_var);
    e.levels = levels;
    e.n_l = cfg.estimation.n_l;
    e.n_k = cfg.estimation.n_k;
    if let Some(l) = cfg.estimation.l_max {
        e.l_max = l;
    }
    if let Some(k) = cfg.estimation.k_max {
        e.k_max = k;
    }
    e.stopping.gamma = cfg.estimation.gamma;
    e.stopping.noise_margin = cfg.estimation.noise_margin;
    e
}

fn threshold_config(cfg: &SimConfig, geom: &FrameGeometry, est: &EstimatorConfig, noise_var: f64) -> ThresholdConfig {
    let mut t = ThresholdConfig::wide(geom, est.l_max, noise_var);
    t.threshold = cfg.estimation.threshold_factor * noise_var.sqrt();
    t
}

fn check_model(model: &FnnModel, geom: &FrameGeometry) -> Result<()> {
    if model.input_dim() != geom.mn() {
        return Err(Error::Config(format!(
            "estimation.model: classifier expects {} inputs but the frame has MN = {}",
            model.input_dim(),
            geom.mn()
        )));
    }
    Ok(())
}

fn load_model(cfg: &SimConfig, geom: &FrameGeometry) -> Result<Option<FnnModel>> {
    if cfg.estimation.path_count != PathCountMode::Fnn {
        return Ok(None);
    }
    let path = cfg.estimation.model.as_ref().ok_or(Error::MissingModel)?;
    let model = FnnModel::load(path)?;
    check_model(&model, geom)?;
    Ok(Some(model))
}

fn received_pilot(t: &DdTransform, paths: &PathSet, pilot: &PilotSpec, seed: u64, trial: u64) -> Result<Vec<Complex64>> {
    let x = make_pilot_frame(pilot, t.geometry())?;
    let y = DdOperator::channel(t.clone(), paths)?.forward(x.as_slice())?;
    Ok(add_awgn(&y, &NoiseSpec::new(1.0)?, &mut child_rng(seed, Stream::PilotNoise, trial)))
}

fn row(cfg: &SimConfig, value: f64, metric: String, mean: f64, stderr: f64, trials: usize) -> Result<MetricRow> {
    MetricRow::new(cfg.sweep()?.axis.name(), value, metric, mean, stderr, trials)
}

/// Channel-estimation NMSE against SNR_p or N. Every trial estimates the
/// same received pilot frame with each configured variant.
pub fn chest_sweep(cfg: &SimConfig) -> Result<Vec<MetricRow>> {
    require_axis(cfg, &[SweepAxis::SnrP, SweepAxis::N], "chest-sweep")?;
    let sweep = cfg.sweep()?;
    let seed = cfg.run.seed;
    let mut rows = Vec::new();
    for &value in &sweep.points {
        let geom = cfg.geometry_at(value)?;
        let t = DdTransform::new(geom)?;
        let snr_p = if sweep.axis == SweepAxis::SnrP { value } else { cfg.pilot.snr_db };
        let pilot = pilot_spec(cfg, &geom, snr_p)?;
        let model = load_model(cfg, &geom)?;
        let variants: Vec<(String, EstimatorConfig)> =
            cfg.estimation.levels.iter().map(|&h| (format!("cm_lh{h}"), estimator_config(cfg, &geom, h, 1.0))).collect();
        let base = estimator_config(cfg, &geom, 1, 1.0);
        let tm = cfg.estimation.threshold_method.then(|| threshold_config(cfg, &geom, &base, 1.0));
        let results = run_trials(cfg.run.trials, |trial| {
            let truth = draw_channel(&cfg.channel, &geom, &mut child_rng(seed, Stream::Channel, trial))?;
            let y = received_pilot(&t, &truth, &pilot, seed, trial)?;
            let mut out = Vec::with_capacity(variants.len() + 1);
            for (_, e) in &variants {
                let r = estimate_channel(&t, &y, &pilot, e, model.as_ref())?;
                out.push((nmse_ratio_paths(&truth.paths, &r.paths.paths, geom.mn())?, r.path_count as f64));
            }
            if let Some(tc) = &tm {
                let r = threshold_estimate(&t, &y, &pilot, tc)?;
                out.push((nmse_ratio_paths(&truth.paths, &r.paths.paths, geom.mn())?, r.path_count as f64));
            }
            Ok(out)
        })?;
        let mut names: Vec<String> = variants.iter().map(|(n, _)| n.clone()).collect();
        if tm.is_some() {
            names.push("tm".into());
        }
        for (i, name) in names.iter().enumerate() {
            let ratios: Accumulator = results.iter().map(|r| r[i].0).collect();
            let (db, se) = nmse_db_summary(&ratios);
            rows.push(row(cfg, value, format!("nmse_db_{name}"), db, se, ratios.count())?);
            if name == "tm" || cfg.estimation.path_count != PathCountMode::Known {
                let p: Accumulator = results.iter().map(|r| r[i].1).collect();
                rows.push(row(cfg, value, format!("mean_p_hat_{name}"), p.mean(), p.stderr(), p.count())?);
            }
        }
    }
    Ok(rows)
}

fn csi_name(c: CsiMode) -> &'static str {
    match c {
        CsiMode::Perfect => "perfect",
        CsiMode::Correlation => "cm",
        CsiMode::Threshold => "tm",
    }
}

fn eq_name(e: EqualizerKind) -> &'static str {
    match e {
        EqualizerKind::Imfc => "imfc",
        EqualizerKind::Lmmse => "lmmse",
    }
}

/// Channel knowledge available to the receiver in one trial.
struct Csi {
    operator: Option<DdOperator>,
    lmmse: Option<LmmseEqualizer>,
    alpha0: f64,
}

struct BerTrialState {
    geom: FrameGeometry,
    truth: DdOperator,
    csi: Vec<Csi>,
}

fn prepare_ber_trial(cfg: &SimConfig, geom: FrameGeometry, model: Option<&FnnModel>, trial: u64) -> Result<BerTrialState> {
    let seed = cfg.run.seed;
    let eq = &cfg.equalizer;
    let t = DdTransform::new(geom)?;
    let truth_paths = draw_channel(&cfg.channel, &geom, &mut child_rng(seed, Stream::Channel, trial))?;
    let pilot = pilot_spec(cfg, &geom, eq.pilot_snr_db)?;
    let needs_pilot = eq.csi.iter().any(|c| *c != CsiMode::Perfect);
    let y_p = if needs_pilot { Some(received_pilot(&t, &truth_paths, &pilot, seed, trial)?) } else { None };
    let want_lmmse = eq.methods.contains(&EqualizerKind::Lmmse);
    let mut csi = Vec::with_capacity(eq.csi.len());
    for mode in &eq.csi {
        let paths = match mode {
            CsiMode::Perfect => truth_paths.clone(),
            CsiMode::Correlation => {
                let e = estimator_config(cfg, &geom, cfg.estimation.levels.first().copied().unwrap_or(2), 1.0);
                estimate_channel(&t, y_p.as_deref().unwrap_or_default(), &pilot, &e, model)?.paths
            }
            CsiMode::Threshold => {
                let base = estimator_config(cfg, &geom, 1, 1.0);
                threshold_estimate(&t, y_p.as_deref().unwrap_or_default(), &pilot, &threshold_config(cfg, &geom, &base, 1.0))?.paths
            }
        };
        if paths.is_empty() {
            csi.push(Csi { operator: None, lmmse: None, alpha0: eq.alpha0 });
            continue;
        }
        let operator = DdOperator::channel(t.clone(), &paths)?;
        let alpha0 = match eq.step {
            StepKind::Decaying => eq.alpha0,
            StepKind::Safe => 1.0 / spectral_radius(&operator, 100)?,
        };
        let lmmse =
            if want_lmmse { Some(LmmseEqualizer::new(dense_channel_matrix_with(&t, &paths, Domain::DelayDoppler)?)?) } else { None };
        csi.push(Csi { operator: Some(operator), lmmse, alpha0 });
    }
    Ok(BerTrialState { geom, truth: DdOperator::channel(t, &truth_paths)?, csi })
}

/// (bit errors, bits, IMFC iterations) for one (CSI, equalizer) pair.
#[derive(Debug, Clone, Copy, Default)]
struct BerCounts {
    errors: usize,
    bits: usize,
    iterations: usize,
    frames: usize,
}

/// Uncoded BER of the configured equalizers and CSI modes against E_b/N₀,
/// the IMFC threshold or N.
pub fn ber_sweep(cfg: &SimConfig) -> Result<Vec<MetricRow>> {
    require_axis(cfg, &[SweepAxis::Ebn0, SweepAxis::Epsilon, SweepAxis::N], "ber-sweep")?;
    let sweep = cfg.sweep()?;
    let eq = &cfg.equalizer;
    let seed = cfg.run.seed;
    let constellation = Constellation::qam(eq.modulation)?;
    let bps = constellation.bits_per_symbol();
    let combos: Vec<(usize, EqualizerKind)> = (0..eq.csi.len()).flat_map(|c| eq.methods.iter().map(move |&m| (c, m))).collect();
    let models: Vec<Option<FnnModel>> = sweep.points.iter().map(|&v| load_model(cfg, &cfg.geometry_at(v)?)).collect::<Result<_>>()?;
    let results = run_trials(cfg.run.trials, |trial| {
        let mut state: Option<BerTrialState> = None;
        let mut per_point = Vec::with_capacity(sweep.points.len());
        for (pi, &value) in sweep.points.iter().enumerate() {
            let geom = cfg.geometry_at(value)?;
            if state.as_ref().is_none_or(|s| s.geom != geom) {
                state = Some(prepare_ber_trial(cfg, geom, models[pi].as_ref(), trial)?);
            }
            let st = state.as_ref().expect("trial state");
            let ebn0_db = if sweep.axis == SweepAxis::Ebn0 { value } else { eq.ebn0_db };
            let eps_factor = if sweep.axis == SweepAxis::Epsilon { value } else { eq.epsilon_factor };
            let snr_d = snr::data_snr_from_ebn0(db_to_linear(ebn0_db), bps);
            let n0 = snr::noise_for_data_snr(snr_d);
            let mn = geom.mn();
            let solvers: Vec<Option<_>> =
                st.csi.iter().map(|c| c.lmmse.as_ref().map(|l| l.factor(snr_d)).transpose()).collect::<Result<_>>()?;
            let mut counts = vec![BerCounts::default(); combos.len()];
            for f in 0..eq.frames_per_trial {
                let idx = trial * eq.frames_per_trial as u64 + f as u64;
                let mut rng = child_rng(seed, Stream::Data, idx);
                let bits: Vec<u8> = (0..mn * bps).map(|_| rng.random::<bool>() as u8).collect();
                let x = qam_map(&bits, &constellation, &geom)?;
                let mut noise_rng = child_rng(seed, Stream::Noise, idx);
                let sigma = n0.sqrt();
                let y: Vec<Complex64> =
                    st.truth.forward(x.as_slice())?.into_iter().map(|v| v + complex_normal(&mut noise_rng) * sigma).collect();
                for (ci, &(c, method)) in combos.iter().enumerate() {
                    let csi = &st.csi[c];
                    let (x_hat, iterations) = match (method, &csi.operator) {
                        (_, None) => (vec![Complex64::default(); mn], 0),
                        (EqualizerKind::Imfc, Some(op)) => {
                            let ecfg = EqualizerConfig {
                                alpha0: csi.alpha0,
                                beta: eq.beta,
                                epsilon: eps_factor * (mn as f64 * n0).sqrt(),
                                n_max: eq.n_max,
                                step: StepMode::Decaying,
                            };
                            let r = imfc_equalize(&y, op as &dyn LinearOperator, &ecfg, None)?;
                            (r.x_hat, r.iterations)
                        }
                        (EqualizerKind::Lmmse, Some(_)) => (solvers[c].as_ref().expect("factored").equalize(&y)?, 0),
                    };
                    let hard = ml_detect(&x_hat, &constellation);
                    let k = &mut counts[ci];
                    k.errors += bit_errors(&bits, &hard.bits)?;
                    k.bits += bits.len();
                    k.iterations += iterations;
                    k.frames += 1;
                }
            }
            per_point.push(counts);
        }
        Ok(per_point)
    })?;
    let mut rows = Vec::new();
    for (pi, &value) in sweep.points.iter().enumerate() {
        for (ci, &(c, method)) in combos.iter().enumerate() {
            let label = format!("{}_{}", eq_name(method), csi_name(eq.csi[c]));
            let ber: Accumulator = results.iter().map(|r| r[pi][ci].errors as f64 / r[pi][ci].bits as f64).collect();
            rows.push(row(cfg, value, format!("ber_{label}"), ber.mean(), ber.stderr(), ber.count())?);
            if method == EqualizerKind::Imfc {
                let it: Accumulator = results.iter().map(|r| r[pi][ci].iterations as f64 / r[pi][ci].frames as f64).collect();
                rows.push(row(cfg, value, format!("iterations_{label}"), it.mean(), it.stderr(), it.count())?);
            }
        }
    }
    Ok(rows)
}

/// Normalized (delay, Doppler) of a point target at `range_m` moving with
/// radial velocity `velocity_mps`, both round-trip.
pub fn target_bins(geom: &FrameGeometry, range_m: f64, velocity_mps: f64) -> (f64, f64) {
    let tau = 2.0 * range_m / SPEED_OF_LIGHT;
    let nu = 2.0 * velocity_mps * geom.f_c / SPEED_OF_LIGHT;
    (tau / geom.delay_resolution(), nu / geom.doppler_resolution())
}

/// Range and velocity RMSE of a single unit-power target against SNR_rad.
pub fn sensing_sweep(cfg: &SimConfig) -> Result<Vec<MetricRow>> {
    require_axis(cfg, &[SweepAxis::SnrRad], "sensing-sweep")?;
    let sweep = cfg.sweep()?;
    let s = &cfg.sensing;
    let seed = cfg.run.seed;
    let geom = cfg.frame;
    let t = DdTransform::new(geom)?;
    let v_mps = kmh_to_mps(s.velocity_kmh);
    let (l, k) = target_bins(&geom, s.range_m, v_mps);
    let constellation = Constellation::qam(cfg.equalizer.modulation)?;
    let bps = constellation.bits_per_symbol();
    let variants: Vec<EstimatorConfig> = cfg
        .estimation
        .levels
        .iter()
        .map(|&h| {
            let mut e = estimator_config(cfg, &geom, h, 1.0);
            e.path_count = PathCountSource::Known(1);
            e.l_max = s.l_max;
            e.k_max = s.k_max;
            e
        })
        .collect();
    let results = run_trials(cfg.run.trials, |trial| {
        let mut rng = child_rng(seed, Stream::Target, trial);
        let gain = Complex64::from_polar(1.0, std::f64::consts::TAU * rng.random::<f64>());
        let mut data_rng = child_rng(seed, Stream::Data, trial);
        let bits: Vec<u8> = (0..geom.mn() * bps).map(|_| data_rng.random::<bool>() as u8).collect();
        let x = qam_map(&bits, &constellation, &geom)?;
        let echo = DdOperator::channel(t.clone(), &PathSet::single(gain, l, k))?.forward(x.as_slice())?;
        let mut noise_rng = child_rng(seed, Stream::Noise, trial);
        let w: Vec<Complex64> = (0..geom.mn()).map(|_| complex_normal(&mut noise_rng)).collect();
        let mut per_point = Vec::with_capacity(sweep.points.len());
        for &snr_db in &sweep.points {
            let sigma = (1.0 / db_to_linear(snr_db)).sqrt();
            let y: Vec<Complex64> = echo.iter().zip(&w).map(|(e, n)| e + n * sigma).collect();
            let mut errs = Vec::with_capacity(variants.len());
            for e in &variants {
                let r = sense_targets(&t, &y, x.as_slice(), e)?;
                let target = r.targets.first().ok_or(Error::EmptyPathSet)?;
                errs.push(((target.range_m - s.range_m).powi(2), (target.velocity_mps - v_mps).powi(2)));
            }
            per_point.push(errs);
        }
        Ok(per_point)
    })?;
    let mut rows = Vec::new();
    for (pi, &value) in sweep.points.iter().enumerate() {
        for (vi, &h) in cfg.estimation.levels.iter().enumerate() {
            let range: Accumulator = results.iter().map(|r| r[pi][vi].0).collect();
            let vel: Accumulator = results.iter().map(|r| r[pi][vi].1).collect();
            let (rm, rs) = rmse_summary(&range);
            let (vm, vs) = rmse_summary(&vel);
            rows.push(row(cfg, value, format!("rmse_range_m_lh{h}"), rm, rs, range.count())?);
            rows.push(row(cfg, value, format!("rmse_velocity_mps_lh{h}"), vm, vs, vel.count())?);
        }
        if let Some((cr, cv)) = crlb_reference::lookup(value) {
            rows.push(row(cfg, value, format!("crlb_range_m ({})", crlb_reference::LABEL), cr, 0.0, 0)?);
            rows.push(row(cfg, value, format!("crlb_velocity_mps ({})", crlb_reference::LABEL), cv, 0.0, 0)?);
        }
    }
    Ok(rows)
}

/// Path-count detection against SNR_p on channels drawn from the configured
/// profile: the classifier (when a model is given) and the stopping rule.
pub fn detect_eval(cfg: &SimConfig, model: Option<&FnnModel>) -> Result<Vec<MetricRow>> {
    require_axis(cfg, &[SweepAxis::SnrP], "detect-eval")?;
    let sweep = cfg.sweep()?;
    let geom = cfg.frame;
    if let Some(m) = model {
        check_model(m, &geom)?;
    }
    let t = DdTransform::new(geom)?;
    let seed = cfg.run.seed;
    let p_true = cfg.channel.delays_us.len() as f64;
    let mut rows = Vec::new();
    for &snr_p in &sweep.points {
        let pilot = pilot_spec(cfg, &geom, snr_p)?;
        let mut e = estimator_config(cfg, &geom, cfg.estimation.levels.first().copied().unwrap_or(2), 1.0);
        e.path_count = PathCountSource::Sc;
        let results = run_trials(cfg.run.trials, |trial| {
            let truth = draw_channel(&cfg.channel, &geom, &mut child_rng(seed, Stream::Channel, trial))?;
            let y = received_pilot(&t, &truth, &pilot, seed, trial)?;
            let fnn = match model {
                Some(m) => Some(m.predict_path_count(&y.iter().map(|z| z.norm()).collect::<Vec<_>>())? as f64),
                None => None,
            };
            Ok((fnn, sc_estimate_p(&t, &y, &pilot, &e)? as f64))
        })?;
        let mut emit = |name: &str, vals: Vec<f64>| -> Result<()> {
            let p: Accumulator = vals.iter().copied().collect();
            let hit: Accumulator = vals.iter().map(|&v| (v == p_true) as u8 as f64).collect();
            rows.push(row(cfg, snr_p, format!("mean_p_hat_{name}"), p.mean(), p.stderr(), p.count())?);
            rows.push(row(cfg, snr_p, format!("std_p_hat_{name}"), p.std_dev(), 0.0, p.count())?);
            rows.push(row(cfg, snr_p, format!("detection_rate_{name}"), hit.mean(), hit.stderr(), hit.count())?);
            Ok(())
        };
        if model.is_some() {
            emit("fnn", results.iter().filter_map(|r| r.0).collect())?;
        }
        emit("sc", results.iter().map(|r| r.1).collect())?;
    }
    Ok(rows)
}

/// Generates the training set, trains the classifier and reports the
/// per-epoch loss and validation accuracy.
pub fn train_classifier(cfg: &SimConfig) -> Result<(TrainOutcome, Vec<MetricRow>)> {
    let tc = cfg.fnn.train_config(cfg.run.seed);
    let ds = generate_dataset(&tc, &cfg.frame)?;
    let outcome = fnn_train(&ds, &tc)?;
    let n_train = ds.len() - outcome.validation_indices.len();
    let mut rows = Vec::with_capacity(2 * outcome.history.len());
    for h in &outcome.history {
        rows.push(MetricRow::new("epoch", h.epoch as f64, "train_loss", h.train_loss, 0.0, n_train)?);
        if let Some(acc) = h.validation_accuracy {
            rows.push(MetricRow::new("epoch", h.epoch as f64, "validation_accuracy", acc, 0.0, outcome.validation_indices.len())?);
        }
    }
    Ok((outcome, rows))
}

/// Accuracy of `model` on fresh samples from the training distribution at
/// each SNR_p of the sweep. Samples come from seed + 1 + point index, so
/// a model trained with the run seed is evaluated on unseen data.
pub fn evaluate_classifier(cfg: &SimConfig, model: &FnnModel) -> Result<Vec<MetricRow>> {
    require_axis(cfg, &[SweepAxis::SnrP], "fnn-eval")?;
    check_model(model, &cfg.frame)?;
    let mut rows = Vec::new();
    for (pi, &snr_p) in cfg.sweep()?.points.iter().enumerate() {
        let mut tc = cfg.fnn.train_config(cfg.run.seed.wrapping_add(1 + pi as u64));
        tc.snr_db = vec![snr_p];
        let ds = generate_dataset(&tc, &cfg.frame)?;
        let mut hit = Accumulator::new();
        let mut p_hat = Accumulator::new();
        for i in 0..ds.len() {
            let p = model.predict_path_count(ds.sample(i))?;
            hit.push((p == ds.labels()[i]) as u8 as f64);
            p_hat.push(p as f64);
        }
        let truth: Accumulator = ds.labels().iter().map(|&l| l as f64).collect();
        rows.push(row(cfg, snr_p, "accuracy".into(), hit.mean(), hit.stderr(), hit.count())?);
        rows.push(row(cfg, snr_p, "mean_p_hat".into(), p_hat.mean(), p_hat.stderr(), p_hat.count())?);
        rows.push(row(cfg, snr_p, "mean_p_true".into(), truth.mean(), truth.stderr(), truth.count())?);
    }
    Ok(rows)
}
