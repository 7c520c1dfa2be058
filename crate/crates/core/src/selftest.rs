//! Oracle and property checks of the operator algebra, shared by the
//! `selftest` subcommand and the test suites.

use std::fmt;

use faer::Mat;
use num_complex::Complex64;
use rand::Rng;

use crate::channel::complex_normal;
use crate::dd::{
    dense_channel_matrix_with, frobenius_sq, max_abs_diff, operator_matrix, oracle, DdOperator, DdTransform, Direction, Domain,
    LinearOperator, PathParams, PathSet, QMode,
};
use crate::error::Result;
use crate::geometry::FrameGeometry;
use crate::rng::{child_rng, SimRng, Stream};

/// Frame sizes the algebra checks run on.
pub const ALGEBRA_GEOMETRIES: [(usize, usize); 3] = [(4, 4), (8, 4), (16, 8)];

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    /// Worst error observed.
    pub error: f64,
    pub tolerance: f64,
}

impl Check {
    fn new(name: impl Into<String>, error: f64, tolerance: f64) -> Self {
        Self { name: name.into(), error, tolerance }
    }

    pub fn passed(&self) -> bool {
        self.error.is_finite() && self.error <= self.tolerance
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<48} error {:.3e} (tolerance {:.0e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.error,
            self.tolerance
        )
    }
}

fn geometry(m: usize, n: usize) -> Result<FrameGeometry> {
    FrameGeometry::new(m, n, 15e3, 5e9)
}

fn random_vec(rng: &mut SimRng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| complex_normal(rng)).collect()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dist(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn rel_frobenius(a: &Mat<Complex64>, b: &Mat<Complex64>) -> f64 {
    (frobenius_sq(&(a - b)) / frobenius_sq(b)).sqrt()
}

/// Path with l ∈ [0, M), k ∈ [−N/2, N/2) and a CN(0, 1) gain.
pub fn random_path(rng: &mut SimRng, geom: &FrameGeometry) -> PathParams {
    let l = rng.random::<f64>() * geom.m as f64;
    let k = (rng.random::<f64>() - 0.5) * geom.n as f64;
    PathParams::new(complex_normal(rng), l, k)
}

pub fn random_path_set(rng: &mut SimRng, geom: &FrameGeometry, max_paths: usize) -> PathSet {
    let p = rng.random_range(1..=max_paths);
    PathSet::new((0..p).map(|_| random_path(rng, geom)).collect())
}

/// Unitarity, round trip and adjoint identities of Q and T, plus the
/// adjoint of a random multipath channel.
fn unitarity_and_adjoint(geom: &FrameGeometry, rng: &mut SimRng, draws: usize) -> Result<Vec<Check>> {
    let t = DdTransform::new(*geom)?;
    let mn = geom.mn();
    let (mut q_norm, mut t_norm, mut q_trip, mut t_trip) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut q_adj, mut t_adj, mut h_adj) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..draws {
        let a = (rng.random::<f64>() - 0.5) * 2.0 * geom.n as f64;
        let p = random_path(rng, geom);
        let v = random_vec(rng, mn);
        let w = random_vec(rng, mn);
        let nv = norm(&v);

        let qv = t.apply_q(a, &v, QMode::Forward)?;
        q_norm = q_norm.max((norm(&qv) - nv).abs() / nv);
        q_trip = q_trip.max(dist(&t.apply_q(a, &qv, QMode::Adjoint)?, &v) / nv);
        let lhs = inner(&w, &qv);
        let rhs = inner(&t.apply_q(a, &w, QMode::Adjoint)?, &v);
        q_adj = q_adj.max((lhs - rhs).norm() / (nv * norm(&w)));

        let tv = t.apply_t(p.delay, p.doppler, &v, false)?;
        t_norm = t_norm.max((norm(&tv) - nv).abs() / nv);
        t_trip = t_trip.max(dist(&t.apply_t(p.delay, p.doppler, &tv, true)?, &v) / nv);
        let lhs = inner(&w, &tv);
        let rhs = inner(&t.apply_t(p.delay, p.doppler, &w, true)?, &v);
        t_adj = t_adj.max((lhs - rhs).norm() / (nv * norm(&w)));

        let h = DdOperator::channel(t.clone(), &random_path_set(rng, geom, 4))?;
        let hv = h.apply(&v)?;
        let lhs = inner(&w, &hv);
        let rhs = inner(&h.apply_adjoint(&w)?, &v);
        h_adj = h_adj.max((lhs - rhs).norm() / (norm(&hv).max(nv) * norm(&w)));
    }
    let tag = format!("{}x{}", geom.m, geom.n);
    Ok(vec![
        Check::new(format!("Q norm preservation {tag}"), q_norm, 1e-10),
        Check::new(format!("T norm preservation {tag}"), t_norm, 1e-10),
        Check::new(format!("Q adjoint-forward round trip {tag}"), q_trip, 1e-10),
        Check::new(format!("T adjoint-forward round trip {tag}"), t_trip, 1e-10),
        Check::new(format!("Q inner-product adjoint {tag}"), q_adj, 1e-10),
        Check::new(format!("T inner-product adjoint {tag}"), t_adj, 1e-10),
        Check::new(format!("H inner-product adjoint {tag}"), h_adj, 1e-10),
    ])
}

/// Fast Q in all four modes and fast T against explicit matrix products.
fn fast_vs_explicit(geom: &FrameGeometry, rng: &mut SimRng, draws: usize) -> Result<Vec<Check>> {
    let t = DdTransform::new(*geom)?;
    let mn = geom.mn();
    let (mut q_err, mut t_err) = (0.0f64, 0.0f64);
    for _ in 0..draws {
        let a = (rng.random::<f64>() - 0.5) * 2.0 * geom.n as f64;
        let v = random_vec(rng, mn);
        let nv = norm(&v);
        let q = oracle::q_matrix(geom, a);
        let q_conj = oracle::conj(&q);
        let q_adj = oracle::adjoint(&q);
        let q_tr = oracle::conj(&q_adj);
        for (mode, m) in [(QMode::Forward, &q), (QMode::Conjugate, &q_conj), (QMode::Adjoint, &q_adj), (QMode::Transpose, &q_tr)] {
            q_err = q_err.max(dist(&t.apply_q(a, &v, mode)?, &oracle::mat_vec(m, &v)) / nv);
        }
        let p = random_path(rng, geom);
        let tm = oracle::t_matrix(geom, p.delay, p.doppler);
        t_err = t_err.max(dist(&t.apply_t(p.delay, p.doppler, &v, false)?, &oracle::mat_vec(&tm, &v)) / nv);
        t_err = t_err.max(dist(&t.apply_t(p.delay, p.doppler, &v, true)?, &oracle::mat_vec(&oracle::adjoint(&tm), &v)) / nv);
    }
    let tag = format!("{}x{}", geom.m, geom.n);
    Ok(vec![
        Check::new(format!("fast Q vs explicit product {tag}"), q_err, 1e-10),
        Check::new(format!("T = Q(k)Q*(l) vs explicit product {tag}"), t_err, 1e-10),
    ])
}

/// Integer paths: the delay-time matrix is exactly Dᴷ·Πᴸ for L ∈ [0, M), K ∈ [−N, N].
fn integer_paths(geom: &FrameGeometry) -> Result<Check> {
    let t = DdTransform::new(*geom)?;
    let mn = geom.mn();
    let mut worst = 0.0f64;
    for l in 0..geom.m as i64 {
        for k in -(geom.n as i64)..=geom.n as i64 {
            let paths = PathSet::single(Complex64::new(1.0, 0.0), l as f64, k as f64);
            let h = dense_channel_matrix_with(&t, &paths, Domain::DelayTime)?;
            worst = worst.max(max_abs_diff(&h, &oracle::integer_delay_time_matrix(mn, l, k)));
        }
    }
    Ok(Check::new(format!("integer path = D^K Pi^L {}x{}", geom.m, geom.n), worst, 1e-12))
}

/// Delay-time response of one fractional path through the DD operator
/// against the steering-vector (Hadamard) form.
fn steering_form(geom: &FrameGeometry, rng: &mut SimRng, draws: usize) -> Result<Check> {
    let t = DdTransform::new(*geom)?;
    let mn = geom.mn();
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let p = random_path(rng, geom);
        let s = random_vec(rng, mn);
        // r = K^H·H_DD·K·s
        let mut x = s.clone();
        t.doppler_dft(&mut x, Direction::Forward);
        let mut r = DdOperator::channel(t.clone(), &PathSet::new(vec![p]))?.apply(&x)?;
        t.doppler_dft(&mut r, Direction::Inverse);
        let reference = oracle::steering_response(mn, &p, &s);
        worst = worst.max(dist(&r, &reference) / norm(&reference));
    }
    Ok(Check::new(format!("steering-vector form {}x{}", geom.m, geom.n), worst, 1e-10))
}

/// Operator identities over [`ALGEBRA_GEOMETRIES`].
pub fn operator_algebra(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (i, &(m, n)) in ALGEBRA_GEOMETRIES.iter().enumerate() {
        let geom = geometry(m, n)?;
        let mut rng = child_rng(seed, Stream::Probe, 100 + i as u64);
        checks.extend(unitarity_and_adjoint(&geom, &mut rng, 100)?);
        checks.extend(fast_vs_explicit(&geom, &mut rng, 10)?);
        checks.push(integer_paths(&geom)?);
        checks.push(steering_form(&geom, &mut rng, 20)?);
    }
    Ok(checks)
}

/// Fast channel operator, materialized column by column, against the
/// explicit Σ g_i·Q(k_i)·Q*(l_i) for `count` random fractional path sets.
pub fn fast_vs_dense(seed: u64, count: usize, m: usize, n: usize) -> Result<Vec<Check>> {
    let geom = geometry(m, n)?;
    let t = DdTransform::new(geom)?;
    let mut rng = child_rng(seed, Stream::Probe, 200);
    let (mut fast, mut dense) = (0.0f64, 0.0f64);
    for _ in 0..count {
        let paths = random_path_set(&mut rng, &geom, 6);
        let reference = oracle::channel_matrix(&geom, &paths);
        let op = DdOperator::channel(t.clone(), &paths)?;
        fast = fast.max(rel_frobenius(&operator_matrix(&op)?, &reference));
        dense = dense.max(rel_frobenius(&dense_channel_matrix_with(&t, &paths, Domain::DelayDoppler)?, &reference));
    }
    Ok(vec![
        Check::new(format!("fast H_DD vs explicit, {count} path sets {m}x{n}"), fast, 1e-10),
        Check::new(format!("dense H_DD vs explicit, {count} path sets {m}x{n}"), dense, 1e-10),
    ])
}

/// Everything the `selftest` subcommand runs.
pub fn run_all(seed: u64) -> Result<Vec<Check>> {
    let mut checks = operator_algebra(seed)?;
    checks.extend(fast_vs_dense(seed, 50, 16, 8)?);
    Ok(checks)
}
