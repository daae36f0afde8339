#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod error;
pub mod field;
pub mod index;
pub mod kernel;
pub mod quad;
pub mod expansion;
pub mod semigroup;
pub mod harness;

pub use error::{Error, Result};
pub use index::MultiIndex;
