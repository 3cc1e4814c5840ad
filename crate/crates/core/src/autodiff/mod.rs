//! Reverse-mode automatic differentiation on a flat tape.
//!
//! A [`Graph`] records every operation as it executes; [`Graph::backward`]
//! walks the tape once in reverse and accumulates gradients for leaves
//! created with `requires_grad`. Tapes are cheap and rebuilt per step.

mod adam;
mod checkpoint;
mod graph;
mod ops;
mod tensor;

pub use adam::{bind_params, pull_grads, Adam, Param};
pub use checkpoint::{load_checkpoint, restore_params, save_checkpoint};
pub use graph::{Graph, Var};
pub use tensor::Tensor;
