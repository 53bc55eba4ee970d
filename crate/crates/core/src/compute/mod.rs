//! Dense tensors, reverse-mode differentiation, optimizers and gradient
//! checking.

mod gradcheck;
mod optim;
mod params;
mod tape;
mod tensor;

pub use gradcheck::{
    eval_loss, grad_check, grad_check_against, relative_error, value_and_grad, GradCheckReport,
    DEFAULT_EPS,
};
pub use optim::{OptimizerConfig, OptimizerKind, OptimizerState};
pub use params::{Gradients, NamedTensor, ParamId, ParamSet, Parameter};
pub use tape::{softmax, Tape, Var};
pub use tensor::Tensor;
