use faer::linalg::solvers::Solve;
use faer::{ColRef, Mat, Side};
use otfs_isac::channel::{add_awgn, complex_normal, draw_channel, ChannelProfile, NoiseSpec};
use otfs_isac::dd::{dense_channel_matrix, matvec, Domain};
use otfs_isac::equalize::{ber, imfc_equalize, lmmse_equalize, ml_detect, spectral_radius, CountingOperator, EqualizerConfig, StepMode};
use otfs_isac::rng::{child_rng, Stream};
use otfs_isac::waveform::{qam_map, Constellation};
use otfs_isac::{Complex64, DdOperator, DdTransform, FrameGeometry, LinearOperator, PathSet};
use rand::Rng;

fn desk() -> (FrameGeometry, DdTransform) {
    let g = FrameGeometry::new(16, 8, 15e3, 5e9).unwrap();
    (g, DdTransform::new(g).unwrap())
}

fn channel(g: &FrameGeometry, seed: u64, index: u64) -> PathSet {
    draw_channel(&ChannelProfile::vehicular(), g, &mut child_rng(seed, Stream::Channel, index)).unwrap()
}

/// Eigenvalues of H^H·H, ascending.
fn gram_eigenvalues(h: &Mat<Complex64>) -> Vec<f64> {
    (h.adjoint() * h).self_adjoint_eigenvalues(Side::Lower).unwrap()
}

fn dist(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn qam_frame(g: &FrameGeometry, seed: u64) -> (Vec<u8>, Vec<Complex64>) {
    let mut rng = child_rng(seed, Stream::Data, 0);
    let bits: Vec<u8> = (0..2 * g.mn()).map(|_| rng.random_range(0..2u8)).collect();
    let x = qam_map(&bits, &Constellation::qam(4).unwrap(), g).unwrap().into_vec();
    (bits, x)
}

#[test]
fn power_iteration_matches_dense_eigenvalue() {
    let (g, t) = desk();
    for i in 0..5 {
        let paths = channel(&g, 21, i);
        let op = DdOperator::channel(t.clone(), &paths).unwrap();
        let h = dense_channel_matrix(&paths, &g, Domain::DelayDoppler).unwrap();
        let e = gram_eigenvalues(&h);
        let exact = e[e.len() - 1];
        let rho = spectral_radius(&op, 200).unwrap();
        // Rayleigh quotients approach λ_max from below at rate (λ₂/λ₁)^2n.
        assert!(rho <= exact * (1.0 + 1e-12));
        let rel = (exact - rho) / exact;
        if i == 0 {
            assert!(rel < 1e-6, "{rho} vs {exact}");
        } else {
            assert!(rel < 1e-2, "draw {i}: {rel:e} with eigenvalue ratio {}", e[e.len() - 2] / exact);
        }
    }
}

#[test]
fn noisy_fixed_point_is_the_inverse_solution() {
    let (g, t) = desk();
    let (paths, h) = (0..)
        .map(|i| {
            let p = channel(&g, 22, i);
            let h = dense_channel_matrix(&p, &g, Domain::DelayDoppler).unwrap();
            (p, h)
        })
        .find(|(_, h)| {
            let e = gram_eigenvalues(h);
            e[e.len() - 1] / e[0] < 10.0
        })
        .unwrap();
    let op = DdOperator::channel(t, &paths).unwrap();
    let (_, x) = qam_frame(&g, 3);
    let w = add_awgn(&vec![Complex64::default(); g.mn()], &NoiseSpec::new(0.05).unwrap(), &mut child_rng(3, Stream::Noise, 0));
    let y: Vec<Complex64> = op.apply(&x).unwrap().iter().zip(&w).map(|(a, b)| a + b).collect();
    let cfg = EqualizerConfig { alpha0: 1.0, beta: 0.0, epsilon: 0.0, n_max: 2000, step: StepMode::Safe { power_iterations: 100 } };
    let r = imfc_equalize(&y, &op, &cfg, None).unwrap();
    let hinv_w = h.partial_piv_lu().solve(ColRef::from_slice(&w));
    let target: Vec<Complex64> = x.iter().zip(hinv_w.iter()).map(|(a, b)| a + b).collect();
    assert!(dist(&r.x_hat, &target) < 1e-6 * norm(&x), "{}", dist(&r.x_hat, &target));
}

#[test]
fn counter_matches_iterations_on_vehicular_channel() {
    let (g, t) = desk();
    let sigma2 = 0.02;
    for i in 0..5 {
        let op = CountingOperator::new(DdOperator::channel(t.clone(), &channel(&g, 23, i)).unwrap());
        let (_, x) = qam_frame(&g, i);
        let y = add_awgn(&op.apply(&x).unwrap(), &NoiseSpec::new(sigma2).unwrap(), &mut child_rng(23, Stream::Noise, i));
        op.reset();
        let r = imfc_equalize(&y, &op, &EqualizerConfig::standard(g.mn(), sigma2), None).unwrap();
        assert_eq!(op.forward_count(), r.iterations + 1);
        assert_eq!(op.adjoint_count(), r.iterations);
    }
}

#[test]
fn noiseless_frame_detects_without_errors() {
    let (g, t) = desk();
    let paths = channel(&g, 24, 0);
    let op = DdOperator::channel(t, &paths).unwrap();
    let (bits, x) = qam_frame(&g, 5);
    let y = op.apply(&x).unwrap();
    let c = Constellation::qam(4).unwrap();
    let cfg = EqualizerConfig { epsilon: 1e-6, n_max: 500, ..EqualizerConfig::standard(g.mn(), 0.0) };
    let imfc = imfc_equalize(&y, &op, &cfg, None).unwrap();
    assert_eq!(ber(&bits, &ml_detect(&imfc.x_hat, &c).bits).unwrap(), 0.0);
    let h = dense_channel_matrix(&paths, &g, Domain::DelayDoppler).unwrap();
    let lmmse = lmmse_equalize(&y, &h, 1e6).unwrap();
    assert_eq!(ber(&bits, &ml_detect(&lmmse, &c).bits).unwrap(), 0.0);
}

#[test]
fn lmmse_matches_explicit_formula() {
    let (g, _) = desk();
    let h = dense_channel_matrix(&channel(&g, 25, 0), &g, Domain::DelayDoppler).unwrap();
    let mut rng = child_rng(25, Stream::Probe, 0);
    let y: Vec<Complex64> = (0..g.mn()).map(|_| complex_normal(&mut rng)).collect();
    let snr = 7.0;
    let mut a = &h * h.adjoint();
    for i in 0..g.mn() {
        a[(i, i)] += 1.0 / snr;
    }
    let u = a.partial_piv_lu().solve(ColRef::from_slice(&y));
    let reference = matvec(&h.adjoint().to_owned(), &u.iter().copied().collect::<Vec<_>>()).unwrap();
    let x = lmmse_equalize(&y, &h, snr).unwrap();
    assert!(dist(&x, &reference) < 1e-10 * norm(&reference));
}
