//! Optimal purchase timing of options when the buyer and the market price
//! with different risk-neutral measures.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod applications;
pub mod cli;
pub mod defaultable;
pub mod error;
pub mod io;
pub mod lcp;
pub mod num;
pub mod perpetual;
pub mod stochvol;

pub use error::{Error, Result};
