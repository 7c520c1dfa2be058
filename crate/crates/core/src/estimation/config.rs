use crate::channel::ChannelProfile;
use crate::error::{Error, Result};
use crate::geometry::FrameGeometry;

/// Where the number of paths to extract comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathCountSource {
    Known(usize),
    /// Classifier on |y|; a model must be supplied.
    Fnn,
    /// Residual-energy stopping rule.
    Sc,
}

/// Stopping rule used when the path count is not known.
///
/// Before extracting path i the loop stops if any of these holds:
/// the strongest residual bin in the search window is below (3σ)²;
/// ‖y⁽ⁱ⁻¹⁾‖²/‖y⁽⁰⁾‖² < `gamma`;
/// ‖y⁽ⁱ⁻¹⁾‖² < (1 + `noise_margin`)·MN·σ² (when `noise_margin` is set).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    pub noise_var: f64,
    pub gamma: f64,
    pub noise_margin: Option<f64>,
    pub max_paths: usize,
}

impl StoppingRule {
    pub fn new(noise_var: f64) -> Self {
        Self { noise_var, gamma: 0.05, noise_margin: Some(DEFAULT_NOISE_MARGIN), max_paths: 16 }
    }
}

pub const DEFAULT_NOISE_MARGIN: f64 = 0.6;

/// Search window and refinement grid of the correlation estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub l_max: usize,
    pub k_max: usize,
    /// Hierarchical levels L_h.
    pub levels: usize,
    pub n_l: usize,
    pub n_k: usize,
    pub path_count: PathCountSource,
    pub stopping: StoppingRule,
}

impl EstimatorConfig {
    /// Window from the profile's delay and Doppler spread, L_h = 2, N_l = N_k = 7.
    pub fn for_profile(geom: &FrameGeometry, profile: &ChannelProfile, path_count: PathCountSource, noise_var: f64) -> Self {
        let (l_max, k_max) = profile.search_limits(geom);
        Self {
            l_max: l_max.min(geom.m - 1),
            k_max: k_max.min(geom.n / 2),
            levels: 2,
            n_l: 7,
            n_k: 7,
            path_count,
            stopping: StoppingRule::new(noise_var),
        }
    }

    pub fn validate(&self, geom: &FrameGeometry) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.levels == 0 || self.n_l == 0 || self.n_k == 0 {
            return bad(format!("levels, n_l, n_k must be >= 1 (got {}, {}, {})", self.levels, self.n_l, self.n_k));
        }
        if self.l_max >= geom.m {
            return bad(format!("l_max = {} must be below M = {}", self.l_max, geom.m));
        }
        if self.k_max > geom.n / 2 {
            return bad(format!("k_max = {} exceeds N/2 = {}", self.k_max, geom.n / 2));
        }
        if let PathCountSource::Known(0) = self.path_count {
            return bad("known path count must be positive".into());
        }
        if !(self.stopping.noise_var >= 0.0) || !(self.stopping.gamma > 0.0 && self.stopping.gamma < 1.0) {
            return bad("stopping rule needs noise_var >= 0 and gamma in (0, 1)".into());
        }
        Ok(())
    }
}

/// Threshold-method baseline settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdConfig {
    pub threshold: f64,
    pub l_max: usize,
    pub k_max: usize,
}

impl ThresholdConfig {
    /// 𝒯 = 3σ over L ∈ [0, min(2·l_max + 1, M − 1)] and the whole
    /// non-aliased Doppler axis |K| ≤ ⌊(N − 1)/2⌋. Integer-only detection
    /// represents a fractional path by its leakage, which spreads well past
    /// the physical window.
    pub fn wide(geom: &FrameGeometry, l_max: usize, noise_var: f64) -> Self {
        Self { threshold: 3.0 * noise_var.sqrt(), l_max: (2 * l_max + 1).min(geom.m - 1), k_max: (geom.n - 1) / 2 }
    }
}
