use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::train::TrainConfig;
use crate::channel::{add_awgn, complex_normal, NoiseSpec};
use crate::dd::{DdOperator, DdTransform, PathParams, PathSet};
use crate::error::{Error, Result};
use crate::geometry::{kmh_to_mps, FrameGeometry, SPEED_OF_LIGHT};
use crate::rng::{child_rng, Stream};
use crate::waveform::{make_pilot_frame, PilotSpec};

/// Feature vectors |y| (one row per sample) with path-count labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn new(dim: usize, features: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        if dim == 0 || features.len() != dim * labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} feature values for {} samples of dimension {dim}",
                features.len(),
                labels.len()
            )));
        }
        Ok(Self { dim, features, labels })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Flat little-endian file: magic `OTFSDS1\0`, u64 sample count,
    /// u64 dimension, f64 features row-major, u64 labels.
    /// A `.txt` sidecar holds `key = value` generation parameters.
    pub fn save(&self, path: &Path, sidecar: &[(String, String)]) -> Result<()> {
        let mut out = Vec::with_capacity(24 + 8 * (self.features.len() + self.labels.len()));
        out.extend_from_slice(DS_MAGIC);
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        out.extend_from_slice(&(self.dim as u64).to_le_bytes());
        for f in &self.features {
            out.extend_from_slice(&f.to_le_bytes());
        }
        for l in &self.labels {
            out.extend_from_slice(&(*l as u64).to_le_bytes());
        }
        write_file(path, &out)?;
        let text: String = sidecar.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        write_file(&sidecar_path(path), text.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|source| Error::File { path: path.into(), source })?;
        let bad = |m: &str| Error::ModelFormat(format!("dataset {}: {m}", path.display()));
        if bytes.len() < 24 || &bytes[..8] != DS_MAGIC {
            return Err(bad("bad header"));
        }
        let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let dim = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
        let expected = n.checked_mul(dim).and_then(|v| v.checked_add(n)).and_then(|v| v.checked_mul(8)).map(|v| v + 24);
        if expected != Some(bytes.len()) {
            return Err(bad("size does not match header"));
        }
        let words: Vec<[u8; 8]> = bytes[24..].chunks_exact(8).map(|c| c.try_into().unwrap()).collect();
        let features = words[..n * dim].iter().map(|w| f64::from_le_bytes(*w)).collect();
        let labels = words[n * dim..].iter().map(|w| u64::from_le_bytes(*w) as usize).collect();
        Self::new(dim, features, labels)
    }
}

const DS_MAGIC: &[u8; 8] = b"OTFSDS1\0";

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".txt");
    PathBuf::from(p)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::File::create(path).and_then(|mut f| f.write_all(bytes)).map_err(|source| Error::File { path: path.into(), source })
}

/// Training channel: P ~ U{p_min..p_max}, equal-power Rayleigh paths with
/// delays uniform in [0, max_delay] and Jakes Dopplers.
pub fn draw_training_channel<R: Rng + ?Sized>(cfg: &TrainConfig, geom: &FrameGeometry, rng: &mut R) -> Result<PathSet> {
    let p = rng.random_range(cfg.p_min..=cfg.p_max);
    let nu_max = kmh_to_mps(cfg.v_max_kmh) * geom.f_c / SPEED_OF_LIGHT;
    let paths = (0..p)
        .map(|_| {
            let tau = cfg.max_delay_us * 1e-6 * rng.random::<f64>();
            let nu = nu_max * (std::f64::consts::TAU * rng.random::<f64>()).cos();
            PathParams::new(complex_normal(rng), tau / geom.delay_resolution(), nu / geom.doppler_resolution())
        })
        .collect();
    PathSet::normalized(paths)
}

/// |y| of a pilot frame through `paths` at the given pilot SNR with N₀ = 1.
pub fn pilot_features<R: Rng + ?Sized>(t: &DdTransform, paths: &PathSet, snr_p_db: f64, rng: &mut R) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let geom = t.geometry();
    let pilot = PilotSpec::centered(geom, PilotSpec::energy_for_snr(geom, snr_p_db, 1.0));
    let x = make_pilot_frame(&pilot, geom)?;
    let y = DdOperator::channel(t.clone(), paths)?.forward(x.as_slice())?;
    let y = add_awgn(&y, &NoiseSpec::new(1.0)?, rng);
    Ok((y.iter().map(|z| z.norm()).collect(), y))
}

/// `samples_per_level` samples at every SNR of `cfg.snr_db`; sample i
/// draws from its own random stream, so the result is independent of
/// thread count.
pub fn generate_dataset(cfg: &TrainConfig, geom: &FrameGeometry) -> Result<Dataset> {
    cfg.validate()?;
    let t = DdTransform::new(*geom)?;
    let total = cfg.snr_db.len() * cfg.samples_per_level;
    let rows: Vec<(Vec<f64>, usize)> = (0..total)
        .into_par_iter()
        .map(|i| {
            let snr = cfg.snr_db[i / cfg.samples_per_level];
            let mut rng = child_rng(cfg.seed, Stream::Dataset, i as u64);
            let paths = draw_training_channel(cfg, geom, &mut rng)?;
            let (f, _) = pilot_features(&t, &paths, snr, &mut rng)?;
            Ok((f, paths.len()))
        })
        .collect::<Result<_>>()?;
    let mut features = Vec::with_capacity(total * geom.mn());
    let mut labels = Vec::with_capacity(total);
    for (f, l) in rows {
        features.extend(f);
        labels.push(l);
    }
    Dataset::new(geom.mn(), features, labels)
}

pub fn dataset_sidecar(cfg: &TrainConfig, geom: &FrameGeometry) -> Vec<(String, String)> {
    vec![
        ("m".into(), geom.m.to_string()),
        ("n".into(), geom.n.to_string()),
        ("delta_f".into(), geom.delta_f.to_string()),
        ("f_c".into(), geom.f_c.to_string()),
        ("snr_db".into(), format!("{:?}", cfg.snr_db)),
        ("samples_per_level".into(), cfg.samples_per_level.to_string()),
        ("p_range".into(), format!("{}..={}", cfg.p_min, cfg.p_max)),
        ("max_delay_us".into(), cfg.max_delay_us.to_string()),
        ("v_max_kmh".into(), cfg.v_max_kmh.to_string()),
        ("n0".into(), "1".into()),
        ("seed".into(), cfg.seed.to_string()),
    ]
}
