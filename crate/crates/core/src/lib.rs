#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod auxiliary;
pub mod config;
pub mod design;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod fit;
pub mod jet;
pub mod ode;
pub mod optimize;
pub mod protocol;
pub mod store;
pub mod unequal;
pub mod units;
pub mod validation;
