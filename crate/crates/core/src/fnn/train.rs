use faer::Mat;
use rand::seq::SliceRandom;

use super::dataset::Dataset;
use super::model::{log_sum_exp, FnnModel};
use crate::error::{Error, Result};
use crate::rng::{child_rng, Stream};

/// Optimizer and dataset settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub decay_factor: f64,
    pub decay_period: usize,
    pub snr_db: Vec<f64>,
    pub samples_per_level: usize,
    pub p_min: usize,
    pub p_max: usize,
    /// Paths of a training channel get delays uniform in [0, max_delay_us] with equal power.
    pub max_delay_us: f64,
    pub v_max_kmh: f64,
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 2000,
            batch_size: 1000,
            learning_rate: 1e-3,
            decay_factor: 0.9,
            decay_period: 50,
            snr_db: vec![5.0, 10.0, 15.0],
            samples_per_level: 6000,
            p_min: 2,
            p_max: 5,
            max_delay_us: 7.0,
            v_max_kmh: 500.0,
            holdout_fraction: 0.1,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.epochs == 0 || self.batch_size == 0 || self.decay_period == 0 || self.samples_per_level == 0 {
            return bad("epochs, batch_size, decay_period and samples_per_level must be positive");
        }
        if !(self.learning_rate > 0.0) || !(self.decay_factor > 0.0) {
            return bad("learning rate and decay factor must be positive");
        }
        if self.p_min == 0 || self.p_min > self.p_max {
            return bad("need 1 <= p_min <= p_max");
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return bad("holdout_fraction must lie in [0, 1)");
        }
        if self.snr_db.is_empty() {
            return bad("at least one training SNR is required");
        }
        Ok(())
    }

    pub fn classes(&self) -> Vec<usize> {
        (self.p_min..=self.p_max).collect()
    }

    /// Step decay: lr·decay^⌊epoch/period⌋.
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate * self.decay_factor.powi((epoch / self.decay_period) as i32)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub learning_rate: f64,
    pub train_loss: f64,
    pub validation_accuracy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: FnnModel,
    pub history: Vec<EpochStats>,
    /// Indices of the held-out samples in the input dataset.
    pub validation_indices: Vec<usize>,
}

/// Per-layer gradients, same shapes as the model.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Mat<f64>>,
    pub bias: Vec<Vec<f64>>,
}

/// Mean cross-entropy −ln p̂_c over a column batch and its gradients.
pub fn loss_and_gradients(model: &FnnModel, x: &Mat<f64>, targets: &[usize]) -> (f64, Gradients) {
    let layers = model.layers();
    let last = layers.len() - 1;
    let batch = x.ncols();
    let mut acts = vec![x.clone()];
    let mut pre = Vec::with_capacity(layers.len());
    for (idx, l) in layers.iter().enumerate() {
        let mut z = &l.weights * acts.last().unwrap();
        for j in 0..batch {
            for i in 0..z.nrows() {
                z[(i, j)] += l.bias[i];
            }
        }
        let a = if idx < last { Mat::from_fn(z.nrows(), batch, |i, j| z[(i, j)].max(0.0)) } else { z.clone() };
        pre.push(z);
        acts.push(a);
    }
    let logits = acts.pop().unwrap();
    let c = logits.nrows();
    let mut delta = Mat::<f64>::zeros(c, batch);
    let mut loss = 0.0;
    let inv_b = 1.0 / batch as f64;
    let mut col = vec![0.0; c];
    for j in 0..batch {
        for (i, v) in col.iter_mut().enumerate() {
            *v = logits[(i, j)];
        }
        let lse = log_sum_exp(&col);
        loss += lse - col[targets[j]];
        for i in 0..c {
            let p = (col[i] - lse).exp();
            delta[(i, j)] = (p - if i == targets[j] { 1.0 } else { 0.0 }) * inv_b;
        }
    }
    loss *= inv_b;
    let mut gw = vec![Mat::<f64>::zeros(0, 0); layers.len()];
    let mut gb = vec![Vec::new(); layers.len()];
    for idx in (0..layers.len()).rev() {
        gw[idx] = &delta * acts[idx].transpose();
        gb[idx] = (0..delta.nrows()).map(|i| (0..batch).map(|j| delta[(i, j)]).sum()).collect();
        if idx > 0 {
            let back = layers[idx].weights.transpose() * &delta;
            let z = &pre[idx - 1];
            delta = Mat::from_fn(back.nrows(), batch, |i, j| if z[(i, j)] > 0.0 { back[(i, j)] } else { 0.0 });
        }
    }
    (loss, Gradients { weights: gw, bias: gb })
}

fn class_index(model: &FnnModel, label: usize) -> Result<usize> {
    model
        .classes()
        .iter()
        .position(|&c| c == label)
        .ok_or_else(|| Error::InvalidArgument(format!("label {label} is not in the class set {:?}", model.classes())))
}

fn batch_matrix(ds: &Dataset, idx: &[usize]) -> Mat<f64> {
    Mat::from_fn(ds.dim(), idx.len(), |i, j| ds.sample(idx[j])[i])
}

/// Fraction of `idx` samples whose argmax class equals the label.
pub fn accuracy(model: &FnnModel, ds: &Dataset, idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return f64::NAN;
    }
    let mut correct = 0usize;
    for chunk in idx.chunks(512) {
        let logits = model.logits(&batch_matrix(ds, chunk));
        for (j, &s) in chunk.iter().enumerate() {
            let col: Vec<f64> = (0..logits.nrows()).map(|i| logits[(i, j)]).collect();
            if super::model::estimate_p(&col, model.classes()) == ds.labels()[s] {
                correct += 1;
            }
        }
    }
    correct as f64 / idx.len() as f64
}

/// Mini-batch gradient descent on `train` indices, shuffled every epoch.
pub fn train_model(
    mut model: FnnModel,
    ds: &Dataset,
    train: &[usize],
    validation: &[usize],
    cfg: &TrainConfig,
) -> Result<(FnnModel, Vec<EpochStats>)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    if ds.dim() != model.input_dim() {
        return Err(Error::Dimension { expected: model.input_dim(), got: ds.dim() });
    }
    let targets: Vec<usize> = ds.labels().iter().map(|&l| class_index(&model, l)).collect::<Result<_>>()?;
    let mut order = train.to_vec();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let lr = cfg.learning_rate_at(epoch);
        order.shuffle(&mut child_rng(cfg.seed, Stream::Shuffle, epoch as u64));
        let mut total = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let x = batch_matrix(ds, chunk);
            let t: Vec<usize> = chunk.iter().map(|&i| targets[i]).collect();
            let (loss, g) = loss_and_gradients(&model, &x, &t);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            total += loss * chunk.len() as f64;
            for (l, (gw, gb)) in model.layers_mut().iter_mut().zip(g.weights.iter().zip(&g.bias)) {
                for j in 0..gw.ncols() {
                    for i in 0..gw.nrows() {
                        l.weights[(i, j)] -= lr * gw[(i, j)];
                    }
                }
                for (b, d) in l.bias.iter_mut().zip(gb) {
                    *b -= lr * d;
                }
            }
        }
        let validation_accuracy = (!validation.is_empty()).then(|| accuracy(&model, ds, validation));
        history.push(EpochStats { epoch, learning_rate: lr, train_loss: total / order.len() as f64, validation_accuracy });
    }
    model.meta.epochs = cfg.epochs as u64;
    model.meta.learning_rate = cfg.learning_rate;
    model.meta.seed = cfg.seed;
    model.meta.validation_accuracy = history.last().and_then(|h| h.validation_accuracy).unwrap_or(f64::NAN);
    Ok((model, history))
}

/// He-initialised model trained on a shuffled split of `ds`; the last
/// `holdout_fraction` of the shuffled samples is held out for validation.
pub fn fnn_train(ds: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::InvalidArgument("dataset is empty".into()));
    }
    let mut idx: Vec<usize> = (0..ds.len()).collect();
    idx.shuffle(&mut child_rng(cfg.seed, Stream::Shuffle, u32::MAX as u64));
    let n_val = ((ds.len() as f64) * cfg.holdout_fraction).round() as usize;
    let (train, val) = idx.split_at(ds.len() - n_val);
    let sizes = super::model::layer_sizes(ds.dim(), cfg.classes().len());
    let model = FnnModel::he_init(&sizes, cfg.classes(), &mut child_rng(cfg.seed, Stream::WeightInit, 0))?;
    let (model, history) = train_model(model, ds, train, val, cfg)?;
    Ok(TrainOutcome { model, history, validation_indices: val.to_vec() })
}

/// Largest relative difference between analytic and central-difference
/// gradients over every weight and bias, for one sample.
pub fn gradient_check(model: &FnnModel, features: &[f64], label: usize, step: f64) -> Result<f64> {
    let target = class_index(model, label)?;
    let x = Mat::from_fn(features.len(), 1, |i, _| features[i]);
    let (_, g) = loss_and_gradients(model, &x, &[target]);
    let loss_at = |m: &FnnModel| loss_and_gradients(m, &x, &[target]).0;
    let rel = |a: f64, n: f64| {
        // Near-zero entries are compared on an absolute 1e-6 scale.
        (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
    };
    let mut worst = 0.0f64;
    let mut probe = model.clone();
    for li in 0..model.layers().len() {
        let (rows, cols) = (model.layers()[li].outputs(), model.layers()[li].inputs());
        for i in 0..rows {
            for j in 0..cols {
                let w0 = model.layers()[li].weights[(i, j)];
                probe.layers_mut()[li].weights[(i, j)] = w0 + step;
                let up = loss_at(&probe);
                probe.layers_mut()[li].weights[(i, j)] = w0 - step;
                let down = loss_at(&probe);
                probe.layers_mut()[li].weights[(i, j)] = w0;
                worst = worst.max(rel(g.weights[li][(i, j)], (up - down) / (2.0 * step)));
            }
            let b0 = model.layers()[li].bias[i];
            probe.layers_mut()[li].bias[i] = b0 + step;
            let up = loss_at(&probe);
            probe.layers_mut()[li].bias[i] = b0 - step;
            let down = loss_at(&probe);
            probe.layers_mut()[li].bias[i] = b0;
            worst = worst.max(rel(g.bias[li][i], (up - down) / (2.0 * step)));
        }
    }
    Ok(worst)
}
