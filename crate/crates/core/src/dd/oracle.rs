//! Reference constructions from explicit matrices.
//!
//! Nothing here uses an FFT: every factor (DFT matrices, Kronecker products,
//! phase diagonals, permutations) is written out entry by entry and
//! multiplied densely. Intended for small frames in tests and `selftest`.

use std::f64::consts::TAU;

use faer::Mat;
use num_complex::Complex64;

use super::paths::{PathParams, PathSet};
use crate::geometry::FrameGeometry;

/// Unitary DFT matrix, entry (p, q) = exp(−j2πpq/n)/√n.
pub fn dft_matrix(n: usize) -> Mat<Complex64> {
    let s = (n as f64).sqrt().recip();
    Mat::from_fn(n, n, |p, q| Complex64::from_polar(s, -TAU * ((p * q) % n) as f64 / n as f64))
}

pub fn kron(a: &Mat<Complex64>, b: &Mat<Complex64>) -> Mat<Complex64> {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// F_N ⊗ I_M.
pub fn doppler_dft_matrix(geom: &FrameGeometry) -> Mat<Complex64> {
    kron(&dft_matrix(geom.n), &Mat::identity(geom.m, geom.m))
}

/// Dᵃ = diag(exp(j2πqa/MN)).
pub fn phase_matrix(mn: usize, a: f64) -> Mat<Complex64> {
    Mat::from_fn(mn, mn, |p, q| if p == q { Complex64::from_polar(1.0, TAU * p as f64 * a / mn as f64) } else { Complex64::default() })
}

/// Πˢ with (Πs)[q] = s[q−1] (forward cyclic shift).
pub fn cyclic_shift_matrix(mn: usize, shift: i64) -> Mat<Complex64> {
    let s = shift.rem_euclid(mn as i64) as usize;
    Mat::from_fn(mn, mn, |p, q| if (q + s) % mn == p { Complex64::new(1.0, 0.0) } else { Complex64::default() })
}

pub fn conj(a: &Mat<Complex64>) -> Mat<Complex64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].conj())
}

pub fn adjoint(a: &Mat<Complex64>) -> Mat<Complex64> {
    Mat::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)].conj())
}

/// Q(a) = (F_N⊗I)·Dᵃ·F_MN^H·(F_N⊗I).
pub fn q_matrix(geom: &FrameGeometry, a: f64) -> Mat<Complex64> {
    let mn = geom.mn();
    let k = doppler_dft_matrix(geom);
    let f = dft_matrix(mn);
    &k * &phase_matrix(mn, a) * adjoint(&f) * &k
}

/// T(l,k) = Q(k)·Q*(l).
pub fn t_matrix(geom: &FrameGeometry, l: f64, k: f64) -> Mat<Complex64> {
    q_matrix(geom, k) * conj(&q_matrix(geom, l))
}

/// Σ g_i T(l_i, k_i) in the DD domain.
pub fn channel_matrix(geom: &FrameGeometry, paths: &PathSet) -> Mat<Complex64> {
    let mn = geom.mn();
    let mut h = Mat::<Complex64>::zeros(mn, mn);
    for p in paths {
        h += scale(&t_matrix(geom, p.delay, p.doppler), p.gain);
    }
    h
}

/// Σ g_i Dᵏⁱ·F^H·D⁻ˡⁱ·F in the delay-time domain.
pub fn delay_time_matrix(geom: &FrameGeometry, paths: &PathSet) -> Mat<Complex64> {
    let mn = geom.mn();
    let f = dft_matrix(mn);
    let mut h = Mat::<Complex64>::zeros(mn, mn);
    for p in paths {
        let one = phase_matrix(mn, p.doppler) * adjoint(&f) * phase_matrix(mn, -p.delay) * &f;
        h += scale(&one, p.gain);
    }
    h
}

/// Closed form for integer parameters: Dᴷ·Πᴸ.
pub fn integer_delay_time_matrix(mn: usize, delay: i64, doppler: i64) -> Mat<Complex64> {
    phase_matrix(mn, doppler as f64) * cyclic_shift_matrix(mn, delay)
}

/// Single-path delay-time response written with steering vectors:
/// r = [F^H (F s ⊙ d(τ))] ⊙ c(ν), d[f] = exp(−j2πfl/MN), c[q] = exp(j2πqk/MN).
pub fn steering_response(mn: usize, path: &PathParams, s: &[Complex64]) -> Vec<Complex64> {
    let f = dft_matrix(mn);
    let fs = mat_vec(&f, s);
    let shaped: Vec<Complex64> =
        fs.iter().enumerate().map(|(q, x)| x * Complex64::from_polar(1.0, -TAU * q as f64 * path.delay / mn as f64)).collect();
    mat_vec(&adjoint(&f), &shaped)
        .into_iter()
        .enumerate()
        .map(|(q, x)| path.gain * x * Complex64::from_polar(1.0, TAU * q as f64 * path.doppler / mn as f64))
        .collect()
}

pub fn scale(a: &Mat<Complex64>, s: Complex64) -> Mat<Complex64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

pub fn mat_vec(a: &Mat<Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)] * v[j]).sum()).collect()
}
