//! Dense tensors with define-by-run reverse-mode differentiation.

mod gradcheck;
mod tape;
mod tensor;

pub use gradcheck::{grad_check, relative_error, GradCheckReport};
pub use tape::{Gradients, Tape, Unary, Var};
pub use tensor::Tensor;

#[cfg(test)]
mod tests;
