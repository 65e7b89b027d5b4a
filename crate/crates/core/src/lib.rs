#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod grid;
pub mod fire;
pub mod dasymetric;
pub mod impact;
pub mod io;
pub mod pipeline;
pub mod synth;
pub mod cli;
