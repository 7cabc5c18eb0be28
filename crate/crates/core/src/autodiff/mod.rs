//! Reverse-mode differentiation over 2-D arrays, small MLPs and Adam.
//!
//! A fresh [`Tape`] is built for every training step; parameters enter it as
//! leaves and their gradients are read back after [`Tape::backward`].

mod adam;
mod mlp;
mod tape;

pub use adam::{Adam, MultiStepLr};
pub use mlp::{Activation, Checkpoint, Head, Mlp, CHECKPOINT_VERSION, DEFAULT_LEAKY_SLOPE};
pub use tape::{Gradients, Tape, Var};

#[cfg(test)]
mod tests;
