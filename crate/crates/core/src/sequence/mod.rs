//! Recurrent sequence encoder, attention pooling and classifier head.

mod attention;
mod baseline;
mod head;
mod lstm;

pub use attention::Attention;
pub use baseline::{mean_impute, BaMeanNet};
pub use head::{argmax, ClassifierHead};
pub use lstm::{BiLstm, LstmCell, FORGET_BIAS_INIT};
