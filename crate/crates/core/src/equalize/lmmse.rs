use faer::linalg::solvers::Llt;
use faer::linalg::solvers::Solve;
use faer::{ColRef, Mat, Side};
use num_complex::Complex64;

use crate::dd::check_dense_order;
use crate::error::{check_len, Error, Result};

/// x̂ = H^H·(H·H^H + SNR⁻¹·I)⁻¹·y with a Cholesky factorization.
///
/// H·H^H is formed once; [`LmmseEqualizer::factor`] then costs one
/// factorization per SNR and [`LmmseSolver::equalize`] two triangular
/// solves plus one product per frame.
#[derive(Debug, Clone)]
pub struct LmmseEqualizer {
    h: Mat<Complex64>,
    gram: Mat<Complex64>,
}

pub struct LmmseSolver<'a> {
    h: &'a Mat<Complex64>,
    llt: Llt<Complex64>,
}

impl LmmseEqualizer {
    pub fn new(h: Mat<Complex64>) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return Err(Error::InvalidArgument(format!("channel matrix is {}x{}", h.nrows(), h.ncols())));
        }
        check_dense_order(h.nrows())?;
        let gram = &h * h.adjoint();
        Ok(Self { h, gram })
    }

    pub fn channel(&self) -> &Mat<Complex64> {
        &self.h
    }

    pub fn factor(&self, snr: f64) -> Result<LmmseSolver<'_>> {
        if !(snr > 0.0 && snr.is_finite()) {
            return Err(Error::InvalidArgument(format!("SNR {snr} must be positive and finite")));
        }
        let mut a = self.gram.clone();
        let reg = 1.0 / snr;
        for i in 0..a.nrows() {
            a[(i, i)] += reg;
        }
        let llt = a.llt(Side::Lower).map_err(|e| {
            let diag_min = (0..a.nrows()).map(|i| a[(i, i)].re).fold(f64::INFINITY, f64::min);
            Error::Factorization(format!("Cholesky of H·H^H + {reg:.3e}·I failed ({e:?}); smallest diagonal entry {diag_min:.3e}"))
        })?;
        Ok(LmmseSolver { h: &self.h, llt })
    }
}

impl LmmseSolver<'_> {
    pub fn equalize(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.h.nrows(), y.len())?;
        let u = self.llt.solve(ColRef::from_slice(y));
        Ok((0..self.h.ncols()).map(|j| self.h.col_as_slice(j).iter().zip(u.iter()).map(|(h, v)| h.conj() * v).sum()).collect())
    }
}

/// One-shot form of the equalizer.
pub fn lmmse_equalize(y: &[Complex64], h: &Mat<Complex64>, snr_d: f64) -> Result<Vec<Complex64>> {
    LmmseEqualizer::new(h.clone())?.factor(snr_d)?.equalize(y)
}
