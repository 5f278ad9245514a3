#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod error;
pub mod functions;
pub mod protocol;
pub mod quad;
pub mod report;
pub mod weights;
pub mod kernels;
pub mod operators;
pub mod norms;
pub mod conditions;
pub mod verify;
pub mod suite;
pub mod cli;
