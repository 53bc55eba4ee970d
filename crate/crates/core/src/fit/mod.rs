//! Memory-cell representation layer, support signals, fast/slow branches and
//! the assembled model family.

mod cell;
mod model;
mod partition;
mod signal;
mod support;

pub use cell::{concat_representations, Activation, MemoryCell};
pub use model::{
    ba_mean_forward, fit_forward, multifit_forward, FitBranch, FitModel, ModelDims, ModelKind, ModelSpec, Network,
    SavedModel,
};
pub use partition::{partition_fast_slow, sparsity_scores, Branch, BranchAssignment};
pub use signal::{build_signal_vector, SignalVector, SIGNAL_VECTOR_LEN};
pub use support::{correlation_matrix, select_support_signals, SupportMap};
