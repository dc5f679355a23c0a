//! Loss, penalties, optimizers, and the penalized training loop.

mod loss;
mod model;
mod optim;
mod penalty;
mod train;

pub use loss::{argmax, batch_cross_entropy, cross_entropy, margin};
pub use model::{DirectModel, Model, NormBallModel, W23Model};
pub use optim::{Adam, Cocob, Optimizer, OptimizerConfig};
pub use penalty::{penalty_value_and_grads, PenaltyEvaluator, PenaltyKind, PenaltySpec};
pub use train::{
    backprop, evaluate, train, train_model, EpochRecord, TrainConfig, TrainHistory, HISTORY_CSV_HEADER,
};
