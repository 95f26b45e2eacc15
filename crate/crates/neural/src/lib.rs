//! Recurrent network numerics for backlog classification.
//!
//! A stack of LSTM layers is unrolled over a fixed observation window with
//! zero initial state (stateless operation), and a softmax head maps the
//! final hidden state of the top layer to a distribution over backlog
//! classes. Training uses exact backpropagation through time, inverted
//! dropout on inter-layer activations and RMSProp.
//!
//! All parameters live in one flat `f64` buffer; [`Architecture`] describes
//! how that buffer is carved into per-layer gate matrices and the head.

mod activation;
mod checkpoint;
mod dropout;
mod error;
mod hyper;
mod loss;
mod lstm;
mod model;
mod optim;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use dropout::{DropoutMask, DropoutSampler};
pub use error::NeuralError;
pub use hyper::HyperParams;
pub use loss::{cross_entropy_loss, mean_cross_entropy, softmax_in_place, PROBABILITY_FLOOR};
pub use lstm::{backward_batch, backward_window, forward_batch, forward_window, BatchOutput};
pub use model::{Architecture, Gradients, LstmModel, INPUT_WIDTH};
pub use optim::{OptimizerState, RmsPropConfig};

pub type Result<T> = std::result::Result<T, NeuralError>;
