//! Implicit neural field: a residual convolutional encoder produces a latent
//! grid, and an MLP decoder queried through a four-corner local ensemble
//! predicts values at arbitrary coordinates.

pub mod checkpoint;
mod layers;
mod model;
mod train;

pub use model::{
    predict_grid, predict_points, query, ArchConfig, Ensemble, LatentGrid, LocalDecoder, Network, PassThrough, Query,
    ValueScale,
};
pub use train::{
    epoch_pairs, mean_l1, read_history, sample_loss, train, train_with, validate, validation_samples, write_history,
    Adam, EpochRecord, NetworkState, TrainingConfig,
};
