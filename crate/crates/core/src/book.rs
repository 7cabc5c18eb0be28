// Every chapter of the guide becomes a module here so that `cargo test --doc`
// compiles and runs its snippets.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}
#[doc = include_str!("../../../book/src/measures.md")]
mod measures {}
#[doc = include_str!("../../../book/src/discrete.md")]
mod discrete {}
#[doc = include_str!("../../../book/src/extremal.md")]
mod extremal {}
#[doc = include_str!("../../../book/src/autodiff.md")]
mod autodiff {}
#[doc = include_str!("../../../book/src/neural.md")]
mod neural {}
#[doc = include_str!("../../../book/src/scenes.md")]
mod scenes {}
#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
