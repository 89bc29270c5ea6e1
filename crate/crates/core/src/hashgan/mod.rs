//! Learned hashing: an encoder mapping histograms to `L`-bit codes, trained
//! jointly with a generator / discriminator pair.

mod losses;
mod model;
pub mod networks;
pub mod nn;
mod train;

pub use losses::{
    adversarial_loss, binarize, clip_mask, diagram_loss, mean_squared_error, similarity_loss,
    similarity_loss_grad, RelaxedCode, PROBABILITY_CLAMP,
};
pub use model::{
    load_model, model_from_bytes, model_to_bytes, save_model, HashModel, MODEL_MAGIC, MODEL_VERSION,
};
pub use networks::{Architecture, Discriminator, Encoder, Generator};
pub use train::{
    count_scale, scaled_grid, train, train_with, BatchLosses, EpochStats, Gradients, HashConfig,
    LossWeights, Networks, Sample,
};
