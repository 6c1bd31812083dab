// `!(x > 0.0)` guards reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary_chain;
pub mod branching;
pub mod diffusion;
pub mod error;
pub mod exact;
pub mod export;
pub mod rng;
pub mod stats;
pub mod triangulation;
pub mod verify;
