//! Monge, Kantorovich and dual transport problems together with the
//! majorization / Schur-Horn machinery and isospectral gradient flows that
//! connect them, in finite dimensions and on a discretized annulus.

// `!(a > b)` also rejects NaN; index loops mirror the matrix formulas
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod annulus;
pub mod bracketflow;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod majorization;
pub mod random;
pub mod schurhorn;
pub mod transport;
pub mod verify;

pub use error::{Error, Result};
