pub mod autodiff;
pub mod discrete_it;
pub mod error;
pub mod et_oracle;
pub mod io;
pub mod measures;
pub mod neural_it;
pub mod plot;
pub mod toyscenes;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book;
