use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::channel::ChannelProfile;
use crate::error::{Error, Result};
use crate::fnn::TrainConfig;
use crate::geometry::FrameGeometry;

/// Quantity varied along a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Pilot SNR in dB.
    SnrP,
    /// E_b/N₀ in dB.
    Ebn0,
    /// Radar SNR in dB.
    SnrRad,
    /// Number of Doppler bins.
    N,
    /// IMFC threshold as a multiple of √(MN·σ²).
    Epsilon,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::SnrP => "snr_p_db",
            SweepAxis::Ebn0 => "ebn0_db",
            SweepAxis::SnrRad => "snr_rad_db",
            SweepAxis::N => "n",
            SweepAxis::Epsilon => "epsilon_factor",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub points: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn one() -> usize {
    1
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { trials: 1, seed: 0, output: None }
    }
}

/// Pilot placement; the energy follows from the swept or fixed SNR_p.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PilotConfig {
    #[serde(default = "default_pilot_snr")]
    pub snr_db: f64,
    #[serde(default)]
    pub m_p: Option<usize>,
    #[serde(default)]
    pub n_p: Option<usize>,
}

fn default_pilot_snr() -> f64 {
    15.0
}

impl Default for PilotConfig {
    fn default() -> Self {
        Self { snr_db: default_pilot_snr(), m_p: None, n_p: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathCountMode {
    Known,
    Fnn,
    Sc,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationSection {
    /// One correlation-method variant per entry of L_h.
    #[serde(default = "default_levels")]
    pub levels: Vec<usize>,
    /// Also run the threshold method on the same frames.
    #[serde(default)]
    pub threshold_method: bool,
    #[serde(default = "seven")]
    pub n_l: usize,
    #[serde(default = "seven")]
    pub n_k: usize,
    #[serde(default)]
    pub l_max: Option<usize>,
    #[serde(default)]
    pub k_max: Option<usize>,
    #[serde(default = "known")]
    pub path_count: PathCountMode,
    #[serde(default)]
    pub model: Option<PathBuf>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_margin")]
    pub noise_margin: Option<f64>,
    /// Threshold-method 𝒯 in units of σ.
    #[serde(default = "three")]
    pub threshold_factor: f64,
}

fn default_levels() -> Vec<usize> {
    vec![2]
}
fn seven() -> usize {
    7
}
fn three() -> f64 {
    3.0
}
fn known() -> PathCountMode {
    PathCountMode::Known
}
fn default_gamma() -> f64 {
    0.05
}
fn default_margin() -> Option<f64> {
    Some(crate::estimation::DEFAULT_NOISE_MARGIN)
}

impl Default for EstimationSection {
    fn default() -> Self {
        Self {
            levels: default_levels(),
            threshold_method: false,
            n_l: 7,
            n_k: 7,
            l_max: None,
            k_max: None,
            path_count: PathCountMode::Known,
            model: None,
            gamma: default_gamma(),
            noise_margin: default_margin(),
            threshold_factor: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EqualizerKind {
    Imfc,
    Lmmse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsiMode {
    Perfect,
    /// Correlation method with the first `levels` entry and the configured path count.
    Correlation,
    Threshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Decaying,
    Safe,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EqualizerSection {
    #[serde(default = "default_equalizers")]
    pub methods: Vec<EqualizerKind>,
    #[serde(default = "default_csi")]
    pub csi: Vec<CsiMode>,
    #[serde(default = "unit")]
    pub alpha0: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// ε = factor·√(MN·σ²).
    #[serde(default = "half")]
    pub epsilon_factor: f64,
    #[serde(default = "fifty")]
    pub n_max: usize,
    #[serde(default = "decaying")]
    pub step: StepKind,
    #[serde(default = "four")]
    pub modulation: usize,
    /// Pilot SNR of the separate pilot frame used for imperfect CSI.
    #[serde(default = "default_csi_snr")]
    pub pilot_snr_db: f64,
    #[serde(default = "one")]
    pub frames_per_trial: usize,
    /// Operating point when the sweep axis is not E_b/N₀.
    #[serde(default = "default_ebn0")]
    pub ebn0_db: f64,
}

fn default_equalizers() -> Vec<EqualizerKind> {
    vec![EqualizerKind::Imfc]
}
fn default_csi() -> Vec<CsiMode> {
    vec![CsiMode::Perfect]
}
fn unit() -> f64 {
    1.0
}
fn default_beta() -> f64 {
    0.05
}
fn half() -> f64 {
    0.5
}
fn fifty() -> usize {
    50
}
fn decaying() -> StepKind {
    StepKind::Decaying
}
fn four() -> usize {
    4
}
fn default_csi_snr() -> f64 {
    18.0
}
fn default_ebn0() -> f64 {
    12.0
}

impl Default for EqualizerSection {
    fn default() -> Self {
        Self {
            methods: default_equalizers(),
            csi: default_csi(),
            alpha0: 1.0,
            beta: 0.05,
            epsilon_factor: 0.5,
            n_max: 50,
            step: StepKind::Decaying,
            modulation: 4,
            pilot_snr_db: default_csi_snr(),
            frames_per_trial: 1,
            ebn0_db: default_ebn0(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensingSection {
    #[serde(default = "default_range")]
    pub range_m: f64,
    #[serde(default = "default_velocity")]
    pub velocity_kmh: f64,
    #[serde(default = "default_snr_rad")]
    pub snr_db: f64,
    #[serde(default = "default_sensing_l")]
    pub l_max: usize,
    #[serde(default = "default_sensing_k")]
    pub k_max: usize,
}

fn default_range() -> f64 {
    300.0
}
fn default_velocity() -> f64 {
    70.0
}
fn default_snr_rad() -> f64 {
    10.0
}
fn default_sensing_l() -> usize {
    4
}
fn default_sensing_k() -> usize {
    4
}

impl Default for SensingSection {
    fn default() -> Self {
        Self { range_m: 300.0, velocity_kmh: 70.0, snr_db: 10.0, l_max: 4, k_max: 4 }
    }
}

/// Classifier training settings; omitted keys take the library defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FnnSection {
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub decay_factor: Option<f64>,
    pub decay_period: Option<usize>,
    pub snr_db: Option<Vec<f64>>,
    pub samples_per_level: Option<usize>,
    pub p_min: Option<usize>,
    pub p_max: Option<usize>,
    pub max_delay_us: Option<f64>,
    pub v_max_kmh: Option<f64>,
    pub holdout_fraction: Option<f64>,
    /// Where `fnn-train` writes and `fnn-eval` reads the model.
    pub model: Option<PathBuf>,
}

impl FnnSection {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        let d = TrainConfig::default();
        TrainConfig {
            epochs: self.epochs.unwrap_or(d.epochs),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            decay_factor: self.decay_factor.unwrap_or(d.decay_factor),
            decay_period: self.decay_period.unwrap_or(d.decay_period),
            snr_db: self.snr_db.clone().unwrap_or(d.snr_db),
            samples_per_level: self.samples_per_level.unwrap_or(d.samples_per_level),
            p_min: self.p_min.unwrap_or(d.p_min),
            p_max: self.p_max.unwrap_or(d.p_max),
            max_delay_us: self.max_delay_us.unwrap_or(d.max_delay_us),
            v_max_kmh: self.v_max_kmh.unwrap_or(d.v_max_kmh),
            holdout_fraction: self.holdout_fraction.unwrap_or(d.holdout_fraction),
            seed,
        }
    }
}

/// Complete description of one experiment. Every section except `[frame]`
/// may be omitted; sweeping subcommands also need `[sweep]`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default)]
    pub run: RunConfig,
    pub frame: FrameGeometry,
    #[serde(default = "ChannelProfile::vehicular")]
    pub channel: ChannelProfile,
    #[serde(default)]
    pub pilot: PilotConfig,
    #[serde(default)]
    pub estimation: EstimationSection,
    #[serde(default)]
    pub equalizer: EqualizerSection,
    #[serde(default)]
    pub sensing: SensingSection,
    #[serde(default)]
    pub fnn: FnnSection,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

impl SimConfig {
    /// Parses and validates; `base` resolves relative model paths.
    pub fn from_toml(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg: SimConfig = toml::from_str(text).map_err(|e| Error::Config(describe_toml_error(text, &e)))?;
        if let Some(base) = base {
            for p in [&mut cfg.estimation.model, &mut cfg.fnn.model].into_iter().flatten() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::File { path: path.to_path_buf(), source })?;
        Self::from_toml(&text, path.parent()).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::Config(format!("{key}: {msg}")));
        self.frame.validate()?;
        self.channel.validate()?;
        if self.run.trials == 0 {
            return bad("run.trials", "must be at least 1".into());
        }
        if let Some(sweep) = &self.sweep {
            if sweep.points.is_empty() {
                return bad("sweep.points", "needs at least one point".into());
            }
            if sweep.points.iter().any(|p| !p.is_finite()) {
                return bad("sweep.points", "non-finite entry".into());
            }
            if sweep.points.windows(2).any(|w| w[1] <= w[0]) {
                return bad("sweep.points", format!("must be strictly increasing, got {:?}", sweep.points));
            }
            if sweep.axis == SweepAxis::N && sweep.points.iter().any(|p| p.fract() != 0.0 || *p < 1.0) {
                return bad("sweep.points", "N points must be positive integers".into());
            }
            if sweep.axis == SweepAxis::Epsilon && sweep.points.iter().any(|p| *p < 0.0) {
                return bad("sweep.points", "epsilon factors must be non-negative".into());
            }
        }
        let est = &self.estimation;
        if est.levels.is_empty() && !est.threshold_method {
            return bad("estimation.levels", "no estimator selected".into());
        }
        if est.levels.contains(&0) {
            return bad("estimation.levels", "L_h must be at least 1".into());
        }
        if !(est.threshold_factor > 0.0) {
            return bad("estimation.threshold_factor", "must be positive".into());
        }
        if est.path_count == PathCountMode::Fnn {
            match &est.model {
                None => return bad("estimation.model", "required when path_count = \"fnn\"".into()),
                Some(p) if !p.exists() => return bad("estimation.model", format!("model file {} does not exist", p.display())),
                _ => {}
            }
        }
        let eq = &self.equalizer;
        if eq.methods.is_empty() || eq.csi.is_empty() {
            return bad("equalizer.methods", "at least one equalizer and one CSI mode are required".into());
        }
        if eq.frames_per_trial == 0 || eq.n_max == 0 {
            return bad("equalizer", "frames_per_trial and n_max must be positive".into());
        }
        if !(eq.alpha0 > 0.0) || !(eq.beta >= 0.0) || !(eq.epsilon_factor >= 0.0) {
            return bad("equalizer", "need alpha0 > 0, beta >= 0, epsilon_factor >= 0".into());
        }
        if !eq.modulation.is_power_of_two() || eq.modulation < 4 || eq.modulation.trailing_zeros() % 2 != 0 {
            return bad("equalizer.modulation", format!("{} is not a square QAM order", eq.modulation));
        }
        if self.sensing.k_max > self.frame.n / 2 || self.sensing.l_max >= self.frame.m {
            return bad("sensing", "search window exceeds the frame".into());
        }
        self.fnn.train_config(self.run.seed).validate()?;
        Ok(())
    }

    pub fn sweep(&self) -> Result<&SweepConfig> {
        self.sweep.as_ref().ok_or_else(|| Error::Config("sweep: section required for this experiment".into()))
    }

    /// Geometry at one sweep point; only the N axis changes it.
    pub fn geometry_at(&self, value: f64) -> Result<FrameGeometry> {
        match self.sweep.as_ref().map(|s| s.axis) {
            Some(SweepAxis::N) => FrameGeometry::new(self.frame.m, value as usize, self.frame.delta_f, self.frame.f_c),
            _ => Ok(self.frame),
        }
    }
}

/// "line L, column C: message (key `a.b`)" from a toml error.
fn describe_toml_error(text: &str, e: &toml::de::Error) -> String {
    let msg = e.message().trim().to_string();
    match e.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            let snippet = text.lines().nth(line - 1).unwrap_or("").trim();
            format!("line {line}, column {col}: {msg} (at `{snippet}`)")
        }
        None => msg,
    }
}
