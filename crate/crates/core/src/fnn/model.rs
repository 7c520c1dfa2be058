use std::io::{Read, Write};
use std::path::Path;

use faer::Mat;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_len, Error, Result};

/// One affine layer, `weights` is outputs × inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Mat<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { weights: Mat::zeros(outputs, inputs), bias: vec![0.0; outputs] }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingMeta {
    pub epochs: u64,
    pub learning_rate: f64,
    pub seed: u64,
    pub validation_accuracy: f64,
}

/// Feed-forward classifier: ReLU hidden layers, softmax output over
/// path-count classes.
#[derive(Debug, Clone, PartialEq)]
pub struct FnnModel {
    layers: Vec<Layer>,
    classes: Vec<usize>,
    pub meta: TrainingMeta,
}

/// Layer widths [MN, MN/4, MN/8, C].
pub fn layer_sizes(mn: usize, classes: usize) -> Vec<usize> {
    vec![mn, (mn / 4).max(1), (mn / 8).max(1), classes]
}

impl FnnModel {
    pub fn from_layers(layers: Vec<Layer>, classes: Vec<usize>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::ModelFormat("model has no layers".into()));
        }
        for w in layers.windows(2) {
            if w[0].outputs() != w[1].inputs() {
                return Err(Error::ModelFormat(format!(
                    "layer widths do not chain: {} outputs into {} inputs",
                    w[0].outputs(),
                    w[1].inputs()
                )));
            }
        }
        for l in &layers {
            if l.bias.len() != l.outputs() {
                return Err(Error::ModelFormat("bias length differs from layer width".into()));
            }
        }
        let last = layers.last().map(Layer::outputs).unwrap_or(0);
        if classes.len() != last || classes.is_empty() {
            return Err(Error::ModelFormat(format!("{} classes for {} outputs", classes.len(), last)));
        }
        if classes.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(Error::ModelFormat("class set must be contiguous ascending path counts".into()));
        }
        Ok(Self { layers, classes, meta: TrainingMeta::default() })
    }

    pub fn zeros(sizes: &[usize], classes: Vec<usize>) -> Result<Self> {
        let layers = sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect();
        Self::from_layers(layers, classes)
    }

    /// Gaussian weights with variance 2/fan_in, zero biases.
    pub fn he_init<R: Rng + ?Sized>(sizes: &[usize], classes: Vec<usize>, rng: &mut R) -> Result<Self> {
        let mut m = Self::zeros(sizes, classes)?;
        for l in &mut m.layers {
            let s = (2.0 / l.inputs() as f64).sqrt();
            for j in 0..l.inputs() {
                for i in 0..l.outputs() {
                    let z: f64 = rng.sample(StandardNormal);
                    l.weights[(i, j)] = s * z;
                }
            }
        }
        Ok(m)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(Layer::outputs));
        s
    }

    /// Class probabilities for one feature vector.
    pub fn forward(&self, features: &[f64]) -> Result<Vec<f64>> {
        check_len(self.input_dim(), features.len())?;
        let x = Mat::from_fn(features.len(), 1, |i, _| features[i]);
        let logits = self.logits(&x);
        Ok(softmax(&(0..logits.nrows()).map(|i| logits[(i, 0)]).collect::<Vec<_>>()))
    }

    /// Output-layer pre-activations for a batch stored column-wise.
    pub fn logits(&self, x: &Mat<f64>) -> Mat<f64> {
        let mut a = x.clone();
        let last = self.layers.len() - 1;
        for (idx, l) in self.layers.iter().enumerate() {
            let mut z = &l.weights * &a;
            for j in 0..z.ncols() {
                for i in 0..z.nrows() {
                    let v = z[(i, j)] + l.bias[i];
                    z[(i, j)] = if idx < last { v.max(0.0) } else { v };
                }
            }
            a = z;
        }
        a
    }

    pub fn predict_path_count(&self, features: &[f64]) -> Result<usize> {
        Ok(estimate_p(&self.forward(features)?, &self.classes))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        let sizes = self.sizes();
        out.extend_from_slice(&(sizes.len() as u32).to_le_bytes());
        for s in &sizes {
            out.extend_from_slice(&(*s as u64).to_le_bytes());
        }
        out.extend_from_slice(&(self.classes.len() as u32).to_le_bytes());
        for c in &self.classes {
            out.extend_from_slice(&(*c as u64).to_le_bytes());
        }
        out.extend_from_slice(&self.meta.epochs.to_le_bytes());
        out.extend_from_slice(&self.meta.learning_rate.to_le_bytes());
        out.extend_from_slice(&self.meta.seed.to_le_bytes());
        out.extend_from_slice(&self.meta.validation_accuracy.to_le_bytes());
        for l in &self.layers {
            for i in 0..l.outputs() {
                for j in 0..l.inputs() {
                    out.extend_from_slice(&l.weights[(i, j)].to_le_bytes());
                }
            }
            for b in &l.bias {
                out.extend_from_slice(&b.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(MAGIC.len())? != MAGIC {
            return Err(Error::ModelFormat("bad magic".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::ModelFormat(format!("unsupported version {version}")));
        }
        let n_sizes = r.u32()? as usize;
        if !(2..=64).contains(&n_sizes) {
            return Err(Error::ModelFormat(format!("implausible layer count {n_sizes}")));
        }
        let sizes = (0..n_sizes).map(|_| r.u64().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
        let n_classes = r.u32()? as usize;
        let classes = (0..n_classes).map(|_| r.u64().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
        let meta = TrainingMeta { epochs: r.u64()?, learning_rate: r.f64()?, seed: r.u64()?, validation_accuracy: r.f64()? };
        let mut layers = Vec::new();
        for w in sizes.windows(2) {
            let (inp, outp) = (w[0], w[1]);
            let mut l = Layer::zeros(inp, outp);
            for i in 0..outp {
                for j in 0..inp {
                    l.weights[(i, j)] = r.f64()?;
                }
            }
            for b in l.bias.iter_mut() {
                *b = r.f64()?;
            }
            layers.push(l);
        }
        if r.pos != bytes.len() {
            return Err(Error::ModelFormat(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        let mut m = Self::from_layers(layers, classes)?;
        m.meta = meta;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|source| Error::File { path: path.into(), source })?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|source| Error::File { path: path.into(), source })?;
        Self::from_bytes(&bytes)
    }
}

/// File layout, all integers and floats little-endian:
/// magic `OTFSFNN\0`, u32 version, u32 width count, u64 widths,
/// u32 class count, u64 classes, u64 epochs, f64 learning rate,
/// u64 seed, f64 validation accuracy, then per layer the weights
/// row-major (outputs × inputs) followed by the biases.
const MAGIC: &[u8; 8] = b"OTFSFNN\0";
const FORMAT_VERSION: u32 = 1;

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl ByteReader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::ModelFormat("truncated file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(z);
    z.iter().map(|v| (v - lse).exp()).collect()
}

/// Class with the largest probability; ties go to the smaller class.
pub fn estimate_p(p: &[f64], classes: &[usize]) -> usize {
    let mut best = 0;
    for (i, v) in p.iter().enumerate() {
        if *v > p[best] {
            best = i;
        }
    }
    classes[best]
}

pub fn fnn_forward(model: &FnnModel, features: &[f64]) -> Result<Vec<f64>> {
    model.forward(features)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    fn layer(rows: [[f64; 2]; 2], bias: [f64; 2]) -> Layer {
        Layer { weights: Mat::from_fn(2, 2, |i, j| rows[i][j]), bias: bias.to_vec() }
    }

    /// 2→2→2→2 with hand-picked weights.
    pub(crate) fn micro() -> FnnModel {
        FnnModel::from_layers(
            vec![
                layer([[1.0, -1.0], [0.5, 2.0]], [0.0, -1.0]),
                layer([[1.0, 1.0], [-1.0, 0.5]], [0.5, 0.0]),
                layer([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0]),
            ],
            vec![2, 3],
        )
        .unwrap()
    }

    #[test]
    fn micro_forward_by_hand() {
        // logits [4, 1.75], [0.5, 0], [1, 0.25]
        let m = micro();
        for (x, gap) in [([1.0, 2.0], 2.25f64), ([0.0, 0.0], 0.5), ([-1.0, 1.0], 0.75)] {
            let p = m.forward(&x).unwrap();
            let p0 = 1.0 / (1.0 + (-gap).exp());
            assert!((p[0] - p0).abs() < 1e-15 && (p[1] - (1.0 - p0)).abs() < 1e-15, "{x:?}: {p:?}");
        }
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = FnnModel::zeros(&layer_sizes(32, 4), vec![2, 3, 4, 5]).unwrap();
        let p = m.forward(&[1.5; 32]).unwrap();
        assert!(p.iter().all(|v| (v - 0.25).abs() < 1e-15));
        assert_eq!(estimate_p(&p, m.classes()), 2);
    }

    #[test]
    fn argmax_class() {
        assert_eq!(estimate_p(&[0.0, 0.0, 1.0, 0.0], &[2, 3, 4, 5]), 4);
    }

    #[test]
    fn softmax_is_stable_for_large_logits() {
        let p = softmax(&[1e4, -1e4, 9999.0]);
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bytes_round_trip() {
        let mut m = micro();
        m.meta = TrainingMeta { epochs: 3, learning_rate: 1e-3, seed: 9, validation_accuracy: 0.5 };
        let back = FnnModel::from_bytes(&m.to_bytes()).unwrap();
        assert_eq!(back, m);
        let mut bad = m.to_bytes();
        bad[0] ^= 1;
        assert!(FnnModel::from_bytes(&bad).is_err());
        assert!(FnnModel::from_bytes(&m.to_bytes()[..20]).is_err());
    }

    #[test]
    fn rejects_mismatched_layers() {
        assert!(FnnModel::from_layers(vec![Layer::zeros(2, 3), Layer::zeros(2, 2)], vec![1, 2]).is_err());
        assert!(FnnModel::from_layers(vec![Layer::zeros(2, 2)], vec![2, 4]).is_err());
        assert!(micro().forward(&[1.0]).is_err());
    }
}
