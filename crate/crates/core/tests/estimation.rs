use otfs_isac::channel::{add_awgn, apply_channel, draw_channel, ChannelProfile, NoiseSpec};
use otfs_isac::dd::{dense_channel_matrix, matvec, Domain};
use otfs_isac::estimation::{
    cancel_ipi, doppler_compensate, estimate_channel, estimate_gain, integer_dd_init, refine_delay, refine_doppler, sc_estimate_p,
    sense_targets, threshold_estimate, EstimatorConfig, PathCountSource, Reference, ThresholdConfig,
};
use otfs_isac::harness::{nmse_db_paths, target_bins};
use otfs_isac::rng::{child_rng, Stream};
use otfs_isac::waveform::{make_pilot_frame, qam_map, Constellation, PilotSpec};
use otfs_isac::{Complex64, DdTransform, FrameGeometry, PathParams, PathSet};
use rand::Rng;

struct Setup {
    t: DdTransform,
    pilot: PilotSpec,
    reference: Reference,
}

fn setup(m: usize, n: usize) -> Setup {
    let g = FrameGeometry::new(m, n, 15e3, 5e9).unwrap();
    let t = DdTransform::new(g).unwrap();
    let pilot = PilotSpec::centered(&g, PilotSpec::energy_for_snr(&g, 15.0, 1.0));
    let reference = Reference::new(&t, make_pilot_frame(&pilot, &g).unwrap().as_slice()).unwrap();
    Setup { t, pilot, reference }
}

fn cfg(s: &Setup, p: PathCountSource) -> EstimatorConfig {
    EstimatorConfig::for_profile(s.t.geometry(), &ChannelProfile::vehicular(), p, 1.0)
}

fn energy(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Received pilot through the explicit dense channel matrix.
fn dense_received(s: &Setup, paths: &PathSet) -> Vec<Complex64> {
    let h = dense_channel_matrix(paths, s.t.geometry(), Domain::DelayDoppler).unwrap();
    matvec(&h, s.reference.frame()).unwrap()
}

#[test]
fn integer_init_finds_the_path_bin() {
    let s = setup(32, 8);
    let g = *s.t.geometry();
    let y = dense_received(&s, &PathSet::single(Complex64::new(0.8, 0.3), 3.0, 2.0));
    assert_eq!(integer_dd_init(&y, &s.pilot, &g, 6, 3), (3, 2));
    let y = dense_received(&s, &PathSet::single(Complex64::new(0.8, 0.3), 2.3, -1.4));
    assert_eq!(integer_dd_init(&y, &s.pilot, &g, 6, 3), (2, -1));
}

#[test]
fn on_grid_doppler_and_delay_stay_put() {
    let s = setup(32, 8);
    let c = cfg(&s, PathCountSource::Known(1));
    let y = dense_received(&s, &PathSet::single(Complex64::new(1.0, 0.0), 2.0, -1.0));
    let k = refine_doppler(&s.t, &s.reference, &y, 2, -1, &c).unwrap();
    assert!((k.estimate + 1.0).abs() < 1e-12);
    let yd = doppler_compensate(&s.t, &y, k.estimate).unwrap();
    assert!((refine_delay(&s.t, &s.reference, &yd, 2, &c).unwrap().estimate - 2.0).abs() < 1e-12);
}

#[test]
fn fractional_refinement_within_half_step() {
    let s = setup(64, 16);
    let c = cfg(&s, PathCountSource::Known(1));
    let bound = 1.0 / (2.0 * 14.0f64.powi(2));
    let y = dense_received(&s, &PathSet::single(Complex64::new(0.6, -0.8), 2.0, 1.37));
    let k = refine_doppler(&s.t, &s.reference, &y, 2, 1, &c).unwrap();
    assert_eq!(k.levels.len(), 2);
    assert!((k.estimate - 1.37).abs() <= bound, "{k:?}");

    let y = dense_received(&s, &PathSet::single(Complex64::new(0.6, -0.8), 2.304, 0.0));
    let yd = doppler_compensate(&s.t, &y, 0.0).unwrap();
    let l = refine_delay(&s.t, &s.reference, &yd, 2, &c).unwrap();
    assert!((l.estimate - 2.304).abs() <= bound, "{l:?}");
}

#[test]
fn delay_search_stays_non_negative() {
    let s = setup(32, 8);
    let c = cfg(&s, PathCountSource::Known(1));
    let y = dense_received(&s, &PathSet::single(Complex64::new(1.0, 0.0), 0.0, 0.4));
    let yd = doppler_compensate(&s.t, &y, 0.4).unwrap();
    let l = refine_delay(&s.t, &s.reference, &yd, 0, &c).unwrap();
    assert!(l.levels.iter().all(|&v| v >= 0.0));
    assert!(l.estimate.abs() < 1e-12);
}

#[test]
fn compensated_delay_objective_peaks_at_truth() {
    let s = setup(32, 8);
    let c = EstimatorConfig { levels: 3, ..cfg(&s, PathCountSource::Known(1)) };
    let y = dense_received(&s, &PathSet::single(Complex64::new(0.4, 0.9), 3.25, -0.75));
    let yd = doppler_compensate(&s.t, &y, -0.75).unwrap();
    let l = refine_delay(&s.t, &s.reference, &yd, 3, &c).unwrap();
    assert!((l.estimate - 3.25).abs() < 1e-9, "{l:?}");
}

#[test]
fn gain_projection_matches_dense_computation() {
    let s = setup(32, 8);
    let g1 = Complex64::new(0.9, 0.1);
    let paths = PathSet::new(vec![PathParams::new(g1, 1.3, 0.6), PathParams::new(Complex64::new(-0.3, 0.4), 4.6, -1.2)]);
    let y = dense_received(&s, &paths);
    let g_hat = estimate_gain(&s.t, &s.reference, &y, 1.3, 0.6).unwrap();
    let tx = dense_received(&s, &PathSet::single(Complex64::new(1.0, 0.0), 1.3, 0.6));
    let dense: Complex64 = tx.iter().zip(&y).map(|(a, b)| a.conj() * b).sum::<Complex64>() / s.pilot.energy;
    assert!((g_hat - dense).norm() < 1e-12 * dense.norm());
    assert!((g_hat - g1).norm() > 1e-6, "cross term expected");

    let next = cancel_ipi(&s.t, &s.reference, &y, g_hat, 1.3, 0.6).unwrap();
    assert!(energy(&next) < energy(&y));
}

#[test]
fn four_tap_channel_is_mostly_explained() {
    let s = setup(64, 16);
    let paths = draw_channel(&ChannelProfile::vehicular(), s.t.geometry(), &mut child_rng(4, Stream::Channel, 0)).unwrap();
    let y = dense_received(&s, &paths);
    let r = estimate_channel(&s.t, &y, &s.pilot, &cfg(&s, PathCountSource::Known(4)), None).unwrap();
    assert_eq!(r.residual_energies.len(), 5);
    assert!(r.residual_energies[4] < 1e-2 * r.residual_energies[0], "{:?}", r.residual_energies);
}

#[test]
fn exact_single_path_recovery() {
    let s = setup(32, 8);
    let truth = PathSet::single(Complex64::new(0.5, -0.5), 3.0, 1.0);
    let y = dense_received(&s, &truth);
    let r = estimate_channel(&s.t, &y, &s.pilot, &cfg(&s, PathCountSource::Known(1)), None).unwrap();
    let nmse = nmse_db_paths(&truth.iter().copied().collect::<Vec<_>>(), &r.paths.iter().copied().collect::<Vec<_>>(), 256).unwrap();
    assert!(nmse < -100.0, "{nmse}");
}

#[test]
fn threshold_method_on_grid() {
    let s = setup(32, 8);
    let g = *s.t.geometry();
    let gain = Complex64::new(-0.4, 0.7);
    let y = dense_received(&s, &PathSet::single(gain, 2.0, -1.0));
    let r = threshold_estimate(&s.t, &y, &s.pilot, &ThresholdConfig { threshold: 3.0, l_max: 6, k_max: 3 }).unwrap();
    assert_eq!(r.path_count, 1);
    let p = r.paths.iter().next().unwrap();
    assert_eq!((p.delay, p.doppler), (2.0, -1.0));
    assert!((p.gain - gain).norm() < 1e-12);
    assert!(threshold_estimate(&s.t, &y, &s.pilot, &ThresholdConfig { threshold: 3.0, l_max: g.m, k_max: 1 }).is_err());
    assert!(threshold_estimate(&s.t, &y, &s.pilot, &ThresholdConfig { threshold: 0.0, l_max: 2, k_max: 1 }).is_err());
}

#[test]
fn threshold_false_alarms_on_noise() {
    let s = setup(32, 8);
    let g = *s.t.geometry();
    let cfg = ThresholdConfig::wide(&g, 6, 1.0);
    let bins = (cfg.l_max + 1) * (2 * cfg.k_max + 1);
    let zero = vec![Complex64::default(); g.mn()];
    let mut alarms = 0;
    for trial in 0..100 {
        let w = add_awgn(&zero, &NoiseSpec::new(1.0).unwrap(), &mut child_rng(9, Stream::PilotNoise, trial));
        alarms += threshold_estimate(&s.t, &w, &s.pilot, &cfg).unwrap().path_count;
    }
    // P(|w| > 3σ) = e^{-9} per bin.
    let rate = alarms as f64 / (100 * bins) as f64;
    assert!(rate < 0.01, "{rate}");
}

#[test]
fn stopping_rule_edge_cases() {
    let s = setup(32, 8);
    let c = cfg(&s, PathCountSource::Sc);
    let y = dense_received(&s, &PathSet::single(Complex64::new(1.0, 0.0), 1.0, 0.5));
    assert_eq!(sc_estimate_p(&s.t, &y, &s.pilot, &c).unwrap(), 1);
    let zero = vec![Complex64::default(); 256];
    let w = add_awgn(&zero, &NoiseSpec::new(1.0).unwrap(), &mut child_rng(2, Stream::PilotNoise, 0));
    assert_eq!(sc_estimate_p(&s.t, &w, &s.pilot, &c).unwrap(), 0);
}

#[test]
fn sensing_target_in_grid_units() {
    let g = FrameGeometry::new(32, 32, 15e3, 5e9).unwrap();
    let (l, k) = target_bins(&g, 300.0, 70.0 / 3.6);
    assert!((l - 0.96).abs() < 1e-3, "{l}");
    assert!((k - 1.3827).abs() < 1e-3, "{k}");
}

#[test]
fn noiseless_target_is_located() {
    let g = FrameGeometry::new(32, 32, 15e3, 5e9).unwrap();
    let t = DdTransform::new(g).unwrap();
    let (l, k) = target_bins(&g, 300.0, 70.0 / 3.6);
    let mut rng = child_rng(1, Stream::Data, 0);
    let c = Constellation::qam(4).unwrap();
    let bits: Vec<u8> = (0..2 * g.mn()).map(|_| rng.random_range(0..2u8)).collect();
    let x = qam_map(&bits, &c, &g).unwrap().into_vec();
    let y = apply_channel(&t, &PathSet::single(Complex64::from_polar(1.0, 0.4), l, k), &x).unwrap();
    let e = EstimatorConfig {
        l_max: 4,
        k_max: 4,
        levels: 3,
        ..EstimatorConfig::for_profile(&g, &ChannelProfile::vehicular(), PathCountSource::Known(1), 1.0)
    };
    let r = sense_targets(&t, &y, &x, &e).unwrap();
    let target = r.targets[0];
    assert!((target.range_m - 300.0).abs() < 1.5, "{target:?}");
    assert!((target.velocity_mps - 70.0 / 3.6).abs() < 0.1, "{target:?}");
    let noisy = add_awgn(&y, &NoiseSpec::new(0.01).unwrap(), &mut rng);
    assert!(sense_targets(&t, &noisy, &x, &EstimatorConfig { path_count: PathCountSource::Fnn, ..e }).is_err());
}
