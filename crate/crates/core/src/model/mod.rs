//! Convolutional encoder, NT-Xent loss and SGD training.

mod checkpoint;
mod encoder;
mod layers;
mod loss;
mod optim;
mod tensor;
mod train;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, MAGIC, VERSION};
pub use encoder::{Encoded, EncoderConfig, EncoderModel, ForwardCache, Gradients};
pub use layers::{Conv3x3, Linear};
pub use loss::{l2_normalize_rows, nt_xent_loss};
pub use optim::{cosine_lr, Sgd};
pub use tensor::{Scalar, Tensor};
pub use train::{train_step, TrainConfig, Trainer};
