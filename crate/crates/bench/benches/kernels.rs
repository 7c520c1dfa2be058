use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use otfs_isac::channel::{add_awgn, draw_channel, ChannelProfile, NoiseSpec};
use otfs_isac::dd::QMode;
use otfs_isac::equalize::{imfc_equalize, EqualizerConfig};
use otfs_isac::estimation::{estimate_channel, EstimatorConfig, PathCountSource};
use otfs_isac::rng::{child_rng, Stream};
use otfs_isac::waveform::{make_pilot_frame, qam_map, Constellation, PilotSpec};
use otfs_isac::{Complex64, DdOperator, DdTransform, FrameGeometry, LinearOperator, PathSet};
use rand::Rng;

const SIZES: [(usize, usize); 3] = [(16, 8), (64, 16), (128, 32)];

fn setup(m: usize, n: usize) -> (FrameGeometry, DdTransform, PathSet) {
    let g = FrameGeometry::new(m, n, 15e3, 5e9).unwrap();
    let t = DdTransform::new(g).unwrap();
    let paths = draw_channel(&ChannelProfile::vehicular(), &g, &mut child_rng(1, Stream::Channel, 0)).unwrap();
    (g, t, paths)
}

fn qam_frame(g: &FrameGeometry) -> Vec<Complex64> {
    let mut rng = child_rng(1, Stream::Data, 0);
    let bits: Vec<u8> = (0..2 * g.mn()).map(|_| rng.random_range(0..2u8)).collect();
    qam_map(&bits, &Constellation::qam(4).unwrap(), g).unwrap().into_vec()
}

fn operators(c: &mut Criterion) {
    let mut group = c.benchmark_group("operator");
    for (m, n) in SIZES {
        let (g, t, paths) = setup(m, n);
        let x = qam_frame(&g);
        let op = DdOperator::channel(t.clone(), &paths).unwrap();
        let id = format!("{m}x{n}");
        group.bench_with_input(BenchmarkId::new("q_forward", &id), &x, |b, x| {
            b.iter(|| t.apply_q(black_box(1.37), x, QMode::Forward).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("t", &id), &x, |b, x| b.iter(|| t.apply_t(black_box(2.3), 0.7, x, false).unwrap()));
        group.bench_with_input(BenchmarkId::new("channel", &id), &x, |b, x| b.iter(|| op.apply(black_box(x)).unwrap()));
        group.bench_with_input(BenchmarkId::new("channel_adjoint", &id), &x, |b, x| b.iter(|| op.apply_adjoint(black_box(x)).unwrap()));
    }
    group.finish();
}

fn estimation(c: &mut Criterion) {
    let mut group = c.benchmark_group("estimation");
    group.sample_size(10);
    for (m, n) in SIZES {
        let (g, t, paths) = setup(m, n);
        let pilot = PilotSpec::centered(&g, PilotSpec::energy_for_snr(&g, 15.0, 1.0));
        let frame = make_pilot_frame(&pilot, &g).unwrap();
        let op = DdOperator::channel(t.clone(), &paths).unwrap();
        let y = add_awgn(&op.apply(frame.as_slice()).unwrap(), &NoiseSpec::new(1.0).unwrap(), &mut child_rng(1, Stream::PilotNoise, 0));
        for levels in [1, 2] {
            let cfg = EstimatorConfig {
                levels,
                ..EstimatorConfig::for_profile(&g, &ChannelProfile::vehicular(), PathCountSource::Known(4), 1.0)
            };
            group.bench_with_input(BenchmarkId::new(format!("cm_lh{levels}"), format!("{m}x{n}")), &y, |b, y| {
                b.iter(|| estimate_channel(&t, black_box(y), &pilot, &cfg, None).unwrap())
            });
        }
    }
    group.finish();
}

fn equalization(c: &mut Criterion) {
    let mut group = c.benchmark_group("imfc");
    group.sample_size(10);
    for (m, n) in SIZES {
        let (g, t, paths) = setup(m, n);
        let op = DdOperator::channel(t, &paths).unwrap();
        let n0 = 0.05;
        let y = add_awgn(&op.apply(&qam_frame(&g)).unwrap(), &NoiseSpec::new(n0).unwrap(), &mut child_rng(1, Stream::Noise, 0));
        let cfg = EqualizerConfig::standard(g.mn(), n0);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{m}x{n}")), &y, |b, y| {
            b.iter(|| imfc_equalize(black_box(y), &op, &cfg, None).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, operators, estimation, equalization);
criterion_main!(benches);
