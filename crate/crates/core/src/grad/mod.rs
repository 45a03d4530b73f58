//! Minimal reverse-mode automatic differentiation over dense `f64` tensors.
//!
//! A [`Graph`] is rebuilt for every forward pass: operations evaluate eagerly
//! and record themselves on the tape, and [`Graph::backward`] walks the tape in
//! reverse. Parameters live in a [`ParamSet`] and are bound onto a graph as
//! leaves; a frozen `ParamSet` can be shared read-only by any number of
//! inference graphs.

mod checkpoint;
mod graph;
mod params;
mod tensor;

pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use graph::{FieldRef, Gradients, Graph, Var};
pub use params::{Bound, ParamId, ParamSet};
pub use tensor::Tensor;

pub(crate) use graph::bilinear;
