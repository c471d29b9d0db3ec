//! Numerical laboratory for product-set growth in SL(2,R) and SU(2).

pub mod chunk;
pub mod error;
pub mod escape;
pub mod group;
pub mod growth;
pub mod lab;
pub mod net;
pub mod subspace;
pub mod testkit;

pub use error::{Error, Result};
