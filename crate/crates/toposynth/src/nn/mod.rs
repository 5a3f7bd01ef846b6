//! Minimal neural-network toolkit: a reverse-mode tape over dense
//! matrices, named parameter sets, initializers and Adam.

pub mod params;
pub mod tape;

pub use params::{add_grads, orthogonal, scale_grads, small_uniform, xavier, Adam, ParamSet};
pub use tape::{Tape, Var};
