#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod math;
pub mod environment;
pub mod power;
pub mod attitude;
pub mod navigation;
pub mod comms;
pub mod executive;
pub mod sim;
pub mod cli;
