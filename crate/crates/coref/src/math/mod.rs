//! Dense-tensor numeric core: reverse-mode autodiff, Adam, checkpoints.

pub mod adam;
pub mod graph;
pub mod params;

pub use adam::{AdamHyper, AdamState};
pub use graph::{sigmoid, Gradients, Graph, Var};
pub use params::{Param, ParamStore};
