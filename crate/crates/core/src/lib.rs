//! Orthogonal and Stiefel parametrizations built from Householder
//! reflections: the compact WY transform, its truncated Stiefel variant,
//! Riemannian baselines, SGD over reflection vectors and FLOP accounting.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cwy;
pub mod error;
pub mod flops;
pub mod householder;
pub mod io;
pub mod linalg;
pub mod optim;
pub mod riemannian;
pub mod tcwy;

pub use error::{Error, Result};
