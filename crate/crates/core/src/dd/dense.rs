use faer::Mat;
use num_complex::Complex64;

use super::operator::LinearOperator;
use super::paths::PathSet;
use super::transform::{ramp, DdTransform, Direction};
use crate::error::{Error, Result};
use crate::geometry::FrameGeometry;

/// Largest MN for which a dense MN×MN matrix is materialized.
pub const DENSE_ORDER_LIMIT: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// H = Σ g_i Dᵏⁱ·F_MN^H·D⁻ˡⁱ·F_MN acting on time samples.
    DelayTime,
    /// H_DD = (F_N⊗I)·H·(F_N^H⊗I).
    DelayDoppler,
}

/// Refuses orders above [`DENSE_ORDER_LIMIT`].
pub fn check_dense_order(order: usize) -> Result<()> {
    if order > DENSE_ORDER_LIMIT {
        Err(Error::TooLarge { order, limit: DENSE_ORDER_LIMIT })
    } else {
        Ok(())
    }
}

pub fn dense_channel_matrix(paths: &PathSet, geom: &FrameGeometry, domain: Domain) -> Result<Mat<Complex64>> {
    check_dense_order(geom.mn())?;
    dense_channel_matrix_with(&DdTransform::new(*geom)?, paths, domain)
}

/// Same as [`dense_channel_matrix`] reusing existing FFT plans.
///
/// Each path contributes a circulant F^H·D⁻ˡ·F (first column via one inverse
/// FFT) with rows scaled by Dᵏ.
pub fn dense_channel_matrix_with(t: &DdTransform, paths: &PathSet, domain: Domain) -> Result<Mat<Complex64>> {
    let mn = t.mn();
    check_dense_order(mn)?;
    paths.validate()?;
    let mut h = Mat::<Complex64>::zeros(mn, mn);
    let unit = Complex64::new((mn as f64).sqrt().recip(), 0.0);
    for p in paths {
        let mut col = vec![unit; mn];
        t.phase_ramp(&mut col, -p.delay);
        t.frame_dft(&mut col, Direction::Inverse);
        let dop = ramp(p.doppler, mn);
        for q in 0..mn {
            let dst = h.col_as_slice_mut(q);
            for (r, d) in dst.iter_mut().enumerate() {
                let c = col[(r + mn - q) % mn];
                *d += p.gain * dop[r] * c;
            }
        }
    }
    if domain == Domain::DelayTime {
        return Ok(h);
    }
    for q in 0..mn {
        t.doppler_dft(h.col_as_slice_mut(q), Direction::Forward);
    }
    let mut row = vec![Complex64::default(); mn];
    for r in 0..mn {
        for (q, x) in row.iter_mut().enumerate() {
            *x = h[(r, q)];
        }
        t.doppler_dft(&mut row, Direction::Inverse);
        for (q, x) in row.iter().enumerate() {
            h[(r, q)] = *x;
        }
    }
    Ok(h)
}

/// Materializes any operator column by column from basis vectors.
pub fn operator_matrix(op: &dyn LinearOperator) -> Result<Mat<Complex64>> {
    let n = op.dim();
    check_dense_order(n)?;
    let mut out = Mat::<Complex64>::zeros(n, n);
    let mut e = vec![Complex64::default(); n];
    for j in 0..n {
        e[j] = Complex64::new(1.0, 0.0);
        let col = op.apply(&e)?;
        out.col_as_slice_mut(j).copy_from_slice(&col);
        e[j] = Complex64::default();
    }
    Ok(out)
}

/// Largest absolute entry difference.
pub fn max_abs_diff(a: &Mat<Complex64>, b: &Mat<Complex64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for (x, y) in a.col_as_slice(j).iter().zip(b.col_as_slice(j)) {
            worst = worst.max((x - y).norm());
        }
    }
    worst
}

pub fn frobenius_sq(a: &Mat<Complex64>) -> f64 {
    (0..a.ncols()).map(|j| a.col_as_slice(j).iter().map(|z| z.norm_sqr()).sum::<f64>()).sum()
}
