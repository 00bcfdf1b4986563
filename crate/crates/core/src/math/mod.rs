//! Numerical stack shared by both agents: dense networks, tempered softmax
//! sampling, Adam and the behavioral-cloning trainer.

mod adam;
mod bc;
pub mod checkpoint;
mod net;
mod sample;

pub use adam::{adam_step, Adam, AdamState, BETA1, BETA2, EPSILON};
pub use bc::{accuracy, bc_train, split_sizes, Dataset, TrainConfig, TrainHistory};
pub use net::{Dense, Gradients, PolicyNet, Workspace};
pub use sample::{argmax, entropy, log_sum_exp, sample_index, softmax, softmax_sample};
