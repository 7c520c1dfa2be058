use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;

use crate::dd::LinearOperator;
use crate::error::{check_len, Error, Result};
use crate::rng::{child_rng, Stream};

/// Step-size policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepMode {
    /// α⁽ⁿ⁾ = α₀/(1 + β·(n − 1)) for iteration n ≥ 1.
    Decaying,
    /// α₀ replaced by 1/ρ̂ with ρ̂ from `power_iterations` steps of power
    /// iteration on H^H·H; the β decay still applies.
    Safe { power_iterations: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqualizerConfig {
    pub alpha0: f64,
    pub beta: f64,
    /// Stop once ‖y − H·x̂‖ < epsilon.
    pub epsilon: f64,
    pub n_max: usize,
    pub step: StepMode,
}

impl EqualizerConfig {
    /// α₀ = 1, β = 0.05, n_max = 50 and ε = √(MN·σ²)/2.
    pub fn standard(mn: usize, noise_var: f64) -> Self {
        Self { alpha0: 1.0, beta: 0.05, epsilon: default_epsilon(mn, noise_var), n_max: 50, step: StepMode::Decaying }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0) || !(self.beta >= 0.0) || !(self.epsilon >= 0.0) || self.n_max == 0 {
            return Err(Error::InvalidArgument(format!(
                "equalizer needs alpha0 > 0, beta >= 0, epsilon >= 0, n_max >= 1 (got {}, {}, {}, {})",
                self.alpha0, self.beta, self.epsilon, self.n_max
            )));
        }
        Ok(())
    }
}

pub fn default_epsilon(mn: usize, noise_var: f64) -> f64 {
    (mn as f64 * noise_var).sqrt() / 2.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub x_hat: Vec<Complex64>,
    pub iterations: usize,
    pub residual_norm: f64,
    /// Step size used in the first iteration.
    pub alpha0: f64,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn residual(y: &[Complex64], hx: &[Complex64]) -> Vec<Complex64> {
    y.iter().zip(hx).map(|(a, b)| a - b).collect()
}

/// Iterative matched-filter combining:
/// x̂⁽ⁿ⁾ = x̂⁽ⁿ⁻¹⁾ + α⁽ⁿ⁾·H^H·ℰ⁽ⁿ⁻¹⁾, ℰ⁽ⁿ⁾ = y − H·x̂⁽ⁿ⁾, from x̂⁽⁰⁾ = `x0` (or 0).
///
/// Runs while n < n_max and ‖ℰ‖ ≥ ε. Uses iterations + 1 forward and
/// iterations adjoint applications. With a constant step (β = 0) the run
/// aborts once ‖ℰ‖ exceeds 10·‖y‖; with a decaying step only a non-finite
/// residual aborts, since the shrinking step recovers from early overshoot.
pub fn imfc_equalize(
    y: &[Complex64],
    channel: &dyn LinearOperator,
    cfg: &EqualizerConfig,
    x0: Option<&[Complex64]>,
) -> Result<DetectionResult> {
    cfg.validate()?;
    check_len(channel.dim(), y.len())?;
    let alpha0 = match cfg.step {
        StepMode::Decaying => cfg.alpha0,
        StepMode::Safe { power_iterations } => {
            let rho = spectral_radius(channel, power_iterations)?;
            if !(rho > 0.0) {
                return Err(Error::InvalidArgument("channel operator has zero spectral radius".into()));
            }
            1.0 / rho
        }
    };
    let mut x = match x0 {
        Some(v) => {
            check_len(y.len(), v.len())?;
            v.to_vec()
        }
        None => vec![Complex64::default(); y.len()],
    };
    let y_norm = norm(y);
    let mut e = residual(y, &channel.apply(&x)?);
    let mut e_norm = norm(&e);
    let mut n = 0;
    while n < cfg.n_max && e_norm >= cfg.epsilon {
        n += 1;
        let alpha = alpha0 / (1.0 + cfg.beta * (n - 1) as f64);
        let g = channel.apply_adjoint(&e)?;
        x.iter_mut().zip(&g).for_each(|(xi, gi)| *xi += alpha * gi);
        e = residual(y, &channel.apply(&x)?);
        e_norm = norm(&e);
        if !e_norm.is_finite() || (cfg.beta == 0.0 && e_norm > 10.0 * y_norm && y_norm > 0.0) {
            return Err(Error::Divergence { iteration: n, residual: e_norm, observation: y_norm, alpha });
        }
    }
    Ok(DetectionResult { x_hat: x, iterations: n, residual_norm: e_norm, alpha0 })
}

/// Largest eigenvalue of H^H·H by power iteration from a fixed
/// pseudo-random start. The Rayleigh quotient is a lower bound on ρ.
pub fn spectral_radius(channel: &dyn LinearOperator, iterations: usize) -> Result<f64> {
    use rand::Rng;
    let n = channel.dim();
    let mut rng = child_rng(0x5eed, Stream::Probe, 0);
    let mut v: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    let s = norm(&v);
    v.iter_mut().for_each(|z| *z /= s);
    let mut rho = 0.0;
    for _ in 0..iterations.max(1) {
        let w = channel.apply_adjoint(&channel.apply(&v)?)?;
        rho = v.iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
        let wn = norm(&w);
        if wn == 0.0 {
            return Ok(0.0);
        }
        v = w.into_iter().map(|z| z / wn).collect();
    }
    Ok(rho)
}

/// Wraps an operator and counts forward and adjoint applications.
pub struct CountingOperator<O> {
    inner: O,
    forward: AtomicUsize,
    adjoint: AtomicUsize,
}

impl<O: LinearOperator> CountingOperator<O> {
    pub fn new(inner: O) -> Self {
        Self { inner, forward: AtomicUsize::new(0), adjoint: AtomicUsize::new(0) }
    }

    pub fn forward_count(&self) -> usize {
        self.forward.load(Ordering::Relaxed)
    }

    pub fn adjoint_count(&self) -> usize {
        self.adjoint.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.forward.store(0, Ordering::Relaxed);
        self.adjoint.store(0, Ordering::Relaxed);
    }
}

impl<O: LinearOperator> LinearOperator for CountingOperator<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.forward.fetch_add(1, Ordering::Relaxed);
        self.inner.apply(v)
    }
    fn apply_adjoint(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.adjoint.fetch_add(1, Ordering::Relaxed);
        self.inner.apply_adjoint(v)
    }
}
