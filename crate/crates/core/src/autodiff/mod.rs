//! Minimal reverse-mode automatic differentiation over dense 2D arrays.
//!
//! Enough for one-layer networks, two-logit softmax cross-entropy and the
//! sorting-based sliced-Wasserstein cost: a [`Tensor`] value type, an eager
//! [`Tape`] that records every op for one backward sweep, and an
//! [`Optimizer`] (Adam / SGD) applying the resulting gradients.

mod optim;
mod tape;
mod tensor;

pub use optim::{OptimKind, Optimizer};
pub use tape::{CostOrder, Tape, Var};
pub use tensor::Tensor;
