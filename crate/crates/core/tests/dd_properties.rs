use otfs_isac::dd::{build_channel_operator, dense_channel_matrix, matvec, oracle, Domain, QMode};
use otfs_isac::selftest;
use otfs_isac::{Complex64, DdTransform, FrameGeometry, LinearOperator, PathParams, PathSet};
use proptest::prelude::*;

fn geometry(m: usize, n: usize) -> FrameGeometry {
    FrameGeometry::new(m, n, 15e3, 5e9).unwrap()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn vector(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im)), len)
}

fn grid() -> impl Strategy<Value = (usize, usize)> {
    prop::sample::select(vec![(4, 4), (8, 4), (16, 8), (5, 3)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn q_is_unitary((m, n) in grid(), a in -20.0f64..20.0, seed in vector(128), w in vector(128)) {
        let t = DdTransform::new(geometry(m, n)).unwrap();
        let v = &seed[..m * n];
        let w = &w[..m * n];
        let nv = norm(v).max(1e-12);
        for mode in [QMode::Forward, QMode::Conjugate, QMode::Adjoint, QMode::Transpose] {
            prop_assert!((norm(&t.apply_q(a, v, mode).unwrap()) - nv).abs() < 1e-10 * nv);
        }
        let qv = t.apply_q(a, v, QMode::Forward).unwrap();
        let back = t.apply_q(a, &qv, QMode::Adjoint).unwrap();
        prop_assert!(back.iter().zip(v).all(|(x, y)| (x - y).norm() < 1e-10 * nv));
        let lhs = inner(w, &qv);
        let rhs = inner(&t.apply_q(a, w, QMode::Adjoint).unwrap(), v);
        prop_assert!((lhs - rhs).norm() < 1e-10 * nv * norm(w).max(1e-12));
    }

    #[test]
    fn t_is_unitary((m, n) in grid(), l in 0.0f64..8.0, k in -4.0f64..4.0, seed in vector(128)) {
        let t = DdTransform::new(geometry(m, n)).unwrap();
        let v = &seed[..m * n];
        let nv = norm(v).max(1e-12);
        let tv = t.apply_t(l, k, v, false).unwrap();
        prop_assert!((norm(&tv) - nv).abs() < 1e-10 * nv);
        let back = t.apply_t(l, k, &tv, true).unwrap();
        prop_assert!(back.iter().zip(v).all(|(x, y)| (x - y).norm() < 1e-10 * nv));
    }

    #[test]
    fn channel_adjoint_identity(
        (m, n) in grid(),
        taps in prop::collection::vec((0.0f64..6.0, -3.0f64..3.0, -1.0f64..1.0, -1.0f64..1.0), 1..5),
        v in vector(128),
        w in vector(128),
    ) {
        let g = geometry(m, n);
        let paths = PathSet::new(taps.iter().map(|&(l, k, re, im)| PathParams::new(Complex64::new(re, im), l, k)).collect());
        let h = build_channel_operator(&paths, &g).unwrap();
        let (v, w) = (&v[..m * n], &w[..m * n]);
        let lhs = inner(w, &h.apply(v).unwrap());
        let rhs = inner(&h.apply_adjoint(w).unwrap(), v);
        prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()) * norm(v).max(1.0) * norm(w).max(1.0));
    }
}

#[test]
fn single_bin_frame_is_identity() {
    let t = DdTransform::new(geometry(1, 1)).unwrap();
    let v = [Complex64::new(0.3, -2.0)];
    for a in [0.0, 0.7, -13.2] {
        assert!((t.apply_q(a, &v, QMode::Forward).unwrap()[0] - v[0]).norm() < 1e-15);
    }
}

#[test]
fn zero_shift_t_is_identity() {
    let t = DdTransform::new(geometry(8, 4)).unwrap();
    let v: Vec<Complex64> = (0..32).map(|i| Complex64::new(i as f64, -(i as f64) / 3.0)).collect();
    let out = t.apply_t(0.0, 0.0, &v, false).unwrap();
    assert!(out.iter().zip(&v).all(|(a, b)| (a - b).norm() < 1e-12));
}

#[test]
fn q_first_column_for_2x2() {
    let g = geometry(2, 2);
    let t = DdTransform::new(g).unwrap();
    let mut e1 = vec![Complex64::default(); 4];
    e1[0] = Complex64::new(1.0, 0.0);
    let q = oracle::q_matrix(&g, 1.0);
    let col = t.apply_q(1.0, &e1, QMode::Forward).unwrap();
    for (i, c) in col.iter().enumerate() {
        assert!((c - q[(i, 0)]).norm() < 1e-12);
    }
}

#[test]
fn dense_channel_of_integer_paths() {
    let g = geometry(8, 4);
    let paths =
        PathSet::new(vec![PathParams::new(Complex64::new(0.5, 0.5), 1.0, 1.0), PathParams::new(Complex64::new(-0.2, 0.1), 3.0, -1.0)]);
    let h = dense_channel_matrix(&paths, &g, Domain::DelayDoppler).unwrap();
    let reference = oracle::channel_matrix(&g, &paths);
    let x: Vec<Complex64> = (0..32).map(|i| Complex64::from_polar(1.0, i as f64)).collect();
    let a = matvec(&h, &x).unwrap();
    let b = oracle::mat_vec(&reference, &x);
    assert!(a.iter().zip(&b).all(|(p, q)| (p - q).norm() < 1e-10));
}

#[test]
fn dimension_and_parameter_errors() {
    let t = DdTransform::new(geometry(4, 4)).unwrap();
    let short = vec![Complex64::default(); 15];
    assert!(t.apply_q(0.5, &short, QMode::Forward).is_err());
    assert!(t.apply_t(0.5, 0.1, &short, false).is_err());
    assert!(t.apply_q(f64::NAN, &[Complex64::default(); 16], QMode::Forward).is_err());
    assert!(build_channel_operator(&PathSet::new(vec![]), &geometry(4, 4)).is_err());
}

#[test]
fn operator_algebra_checks_pass() {
    let failed: Vec<String> = selftest::operator_algebra(17).unwrap().iter().filter(|c| !c.passed()).map(|c| c.to_string()).collect();
    assert!(failed.is_empty(), "{failed:#?}");
}
