use faer::Mat;
use num_complex::Complex64;

use super::paths::PathSet;
use super::transform::{ramp, DdTransform, Direction};
use crate::error::{check_finite, check_len, Error, Result};
use crate::geometry::FrameGeometry;

/// Which of the four related matrices of Q(a) to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QMode {
    /// Q(a)
    Forward,
    /// Q^H(a)
    Adjoint,
    /// Q*(a), the elementwise conjugate
    Conjugate,
    /// Q^T(a)
    Transpose,
}

/// Square linear map on length-`dim` complex vectors with an adjoint.
pub trait LinearOperator: Send + Sync {
    fn dim(&self) -> usize;
    fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>>;
    fn apply_adjoint(&self, v: &[Complex64]) -> Result<Vec<Complex64>>;
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        (**self).apply(v)
    }
    fn apply_adjoint(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        (**self).apply_adjoint(v)
    }
}

impl DdTransform {
    /// Applies Q(a) = (F_N⊗I)·Dᵃ·F_MN^H·(F_N⊗I) in the selected mode.
    pub fn apply_q(&self, a: f64, v: &[Complex64], mode: QMode) -> Result<Vec<Complex64>> {
        self.check(v)?;
        check_finite("a", a)?;
        let mut w = v.to_vec();
        match mode {
            QMode::Forward => {
                self.doppler_dft(&mut w, Direction::Forward);
                self.frame_dft(&mut w, Direction::Inverse);
                self.phase_ramp(&mut w, a);
                self.doppler_dft(&mut w, Direction::Forward);
            }
            QMode::Adjoint => {
                self.doppler_dft(&mut w, Direction::Inverse);
                self.phase_ramp(&mut w, -a);
                self.frame_dft(&mut w, Direction::Forward);
                self.doppler_dft(&mut w, Direction::Inverse);
            }
            QMode::Conjugate => {
                self.doppler_dft(&mut w, Direction::Inverse);
                self.frame_dft(&mut w, Direction::Forward);
                self.phase_ramp(&mut w, -a);
                self.doppler_dft(&mut w, Direction::Inverse);
            }
            QMode::Transpose => {
                self.doppler_dft(&mut w, Direction::Forward);
                self.phase_ramp(&mut w, a);
                self.frame_dft(&mut w, Direction::Inverse);
                self.doppler_dft(&mut w, Direction::Forward);
            }
        }
        Ok(w)
    }

    /// Applies T(l,k) = Q(k)·Q*(l), or T^H = Q^T(l)·Q^H(k) when `adjoint`.
    ///
    /// The inner (F_N⊗I) factors cancel, leaving
    /// T = (F_N⊗I)·Dᵏ·F_MN^H·D⁻ˡ·F_MN·(F_N^H⊗I).
    pub fn apply_t(&self, l: f64, k: f64, v: &[Complex64], adjoint: bool) -> Result<Vec<Complex64>> {
        self.check(v)?;
        check_finite("l", l)?;
        check_finite("k", k)?;
        let mut w = v.to_vec();
        self.doppler_dft(&mut w, Direction::Inverse);
        if adjoint {
            self.phase_ramp(&mut w, -k);
            self.frame_dft(&mut w, Direction::Forward);
            self.phase_ramp(&mut w, l);
            self.frame_dft(&mut w, Direction::Inverse);
        } else {
            self.frame_dft(&mut w, Direction::Forward);
            self.phase_ramp(&mut w, -l);
            self.frame_dft(&mut w, Direction::Inverse);
            self.phase_ramp(&mut w, k);
        }
        self.doppler_dft(&mut w, Direction::Forward);
        Ok(w)
    }
}

#[derive(Debug, Clone)]
struct PathRamps {
    gain: Complex64,
    /// Dᵏ
    doppler: Vec<Complex64>,
    /// D⁻ˡ
    delay: Vec<Complex64>,
}

#[derive(Debug, Clone)]
enum Kind {
    Q(f64),
    T(f64, f64),
    Channel(PathSet, Vec<PathRamps>),
    Dense(Mat<Complex64>),
}

/// Borrowed view of what a [`DdOperator`] represents.
#[derive(Debug, Clone, Copy)]
pub enum OperatorKind<'a> {
    Q { a: f64 },
    T { l: f64, k: f64 },
    Channel(&'a PathSet),
    Dense(&'a Mat<Complex64>),
}

/// Immutable linear operator on DD vectors: Q(a), T(l,k), H_DD or an
/// explicit matrix.
#[derive(Debug, Clone)]
pub struct DdOperator {
    transform: DdTransform,
    kind: Kind,
}

impl DdOperator {
    pub fn q(transform: DdTransform, a: f64) -> Result<Self> {
        check_finite("a", a)?;
        Ok(Self { transform, kind: Kind::Q(a) })
    }

    pub fn t(transform: DdTransform, l: f64, k: f64) -> Result<Self> {
        check_finite("l", l)?;
        check_finite("k", k)?;
        Ok(Self { transform, kind: Kind::T(l, k) })
    }

    /// H_DD = Σ g_i T(l_i, k_i). The phase vectors of every path are
    /// evaluated once here.
    pub fn channel(transform: DdTransform, paths: &PathSet) -> Result<Self> {
        paths.validate()?;
        let mn = transform.mn();
        let ramps = paths.iter().map(|p| PathRamps { gain: p.gain, doppler: ramp(p.doppler, mn), delay: ramp(-p.delay, mn) }).collect();
        Ok(Self { transform, kind: Kind::Channel(paths.clone(), ramps) })
    }

    pub fn dense(transform: DdTransform, matrix: Mat<Complex64>) -> Result<Self> {
        let mn = transform.mn();
        if matrix.nrows() != mn || matrix.ncols() != mn {
            return Err(Error::Dimension { expected: mn, got: matrix.nrows().max(matrix.ncols()) });
        }
        Ok(Self { transform, kind: Kind::Dense(matrix) })
    }

    pub fn geometry(&self) -> &FrameGeometry {
        self.transform.geometry()
    }

    pub fn transform(&self) -> &DdTransform {
        &self.transform
    }

    pub fn kind(&self) -> OperatorKind<'_> {
        match &self.kind {
            Kind::Q(a) => OperatorKind::Q { a: *a },
            Kind::T(l, k) => OperatorKind::T { l: *l, k: *k },
            Kind::Channel(p, _) => OperatorKind::Channel(p),
            Kind::Dense(m) => OperatorKind::Dense(m),
        }
    }

    pub fn forward(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.transform.check(v)?;
        match &self.kind {
            Kind::Q(a) => self.transform.apply_q(*a, v, QMode::Forward),
            Kind::T(l, k) => self.transform.apply_t(*l, *k, v, false),
            Kind::Channel(_, ramps) => Ok(self.channel_forward(ramps, v)),
            Kind::Dense(m) => Ok(dense_mul(m, v, false)),
        }
    }

    pub fn adjoint(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.transform.check(v)?;
        match &self.kind {
            Kind::Q(a) => self.transform.apply_q(*a, v, QMode::Adjoint),
            Kind::T(l, k) => self.transform.apply_t(*l, *k, v, true),
            Kind::Channel(_, ramps) => Ok(self.channel_adjoint(ramps, v)),
            Kind::Dense(m) => Ok(dense_mul(m, v, true)),
        }
    }

    /// Elementwise-conjugate operator A* applied to v, computed as conj(A·conj(v)).
    pub fn conjugate(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let c: Vec<Complex64> = v.iter().map(|z| z.conj()).collect();
        Ok(self.forward(&c)?.into_iter().map(|z| z.conj()).collect())
    }

    /// A^T applied to v.
    pub fn transpose(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let c: Vec<Complex64> = v.iter().map(|z| z.conj()).collect();
        Ok(self.adjoint(&c)?.into_iter().map(|z| z.conj()).collect())
    }

    fn channel_forward(&self, ramps: &[PathRamps], v: &[Complex64]) -> Vec<Complex64> {
        let t = &self.transform;
        let mut spec = v.to_vec();
        t.doppler_dft(&mut spec, Direction::Inverse);
        t.frame_dft(&mut spec, Direction::Forward);
        let mut acc = vec![Complex64::default(); v.len()];
        let mut tmp = vec![Complex64::default(); v.len()];
        for p in ramps {
            for ((o, s), d) in tmp.iter_mut().zip(&spec).zip(&p.delay) {
                *o = s * d;
            }
            t.frame_dft(&mut tmp, Direction::Inverse);
            for ((a, x), d) in acc.iter_mut().zip(&tmp).zip(&p.doppler) {
                *a += p.gain * d * x;
            }
        }
        t.doppler_dft(&mut acc, Direction::Forward);
        acc
    }

    fn channel_adjoint(&self, ramps: &[PathRamps], v: &[Complex64]) -> Vec<Complex64> {
        let t = &self.transform;
        let mut time = v.to_vec();
        t.doppler_dft(&mut time, Direction::Inverse);
        let mut acc = vec![Complex64::default(); v.len()];
        let mut tmp = vec![Complex64::default(); v.len()];
        for p in ramps {
            for ((o, s), d) in tmp.iter_mut().zip(&time).zip(&p.doppler) {
                *o = s * d.conj();
            }
            t.frame_dft(&mut tmp, Direction::Forward);
            let g = p.gain.conj();
            for ((a, x), d) in acc.iter_mut().zip(&tmp).zip(&p.delay) {
                *a += g * d.conj() * x;
            }
        }
        t.frame_dft(&mut acc, Direction::Inverse);
        t.doppler_dft(&mut acc, Direction::Forward);
        acc
    }
}

impl LinearOperator for DdOperator {
    fn dim(&self) -> usize {
        self.transform.mn()
    }
    fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.forward(v)
    }
    fn apply_adjoint(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.adjoint(v)
    }
}

/// Builds H_DD for `paths` with fresh FFT plans.
pub fn build_channel_operator(paths: &PathSet, geom: &FrameGeometry) -> Result<DdOperator> {
    DdOperator::channel(DdTransform::new(*geom)?, paths)
}

pub(crate) fn dense_mul(m: &Mat<Complex64>, v: &[Complex64], adjoint: bool) -> Vec<Complex64> {
    let n = m.nrows();
    let mut out = vec![Complex64::default(); n];
    if adjoint {
        for (j, o) in out.iter_mut().enumerate() {
            let col = m.col_as_slice(j);
            *o = col.iter().zip(v).map(|(a, x)| a.conj() * x).sum();
        }
    } else {
        for (j, x) in v.iter().enumerate() {
            let col = m.col_as_slice(j);
            for (o, a) in out.iter_mut().zip(col) {
                *o += a * x;
            }
        }
    }
    out
}

/// Checked dense matrix-vector product.
pub fn matvec(m: &Mat<Complex64>, v: &[Complex64]) -> Result<Vec<Complex64>> {
    check_len(m.ncols(), v.len())?;
    Ok(dense_mul(m, v, false))
}
