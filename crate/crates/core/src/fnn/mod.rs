//! Path-count classifier on the received pilot magnitude |y|.

mod dataset;
mod model;
mod train;

pub use dataset::{dataset_sidecar, draw_training_channel, generate_dataset, pilot_features, sidecar_path, Dataset};
pub use model::{estimate_p, fnn_forward, layer_sizes, log_sum_exp, softmax, FnnModel, Layer, TrainingMeta};
pub use train::{accuracy, fnn_train, gradient_check, loss_and_gradients, train_model, EpochStats, Gradients, TrainConfig, TrainOutcome};
