//! Minimal dense-tensor math with reverse-mode differentiation and AdamW.
//!
//! 64-bit floats throughout; desk scale makes speed irrelevant and keeps the
//! finite-difference checks tight.

mod fdcheck;
mod params;
mod tape;
mod tensor;

pub use fdcheck::finite_diff_check;
pub use params::{AdamW, ParamStore};
pub use tape::{Gradients, NodeId, Tape};
pub use tensor::Tensor;
