//! Behavioral simulator for MTJ-based stochastic synapses and quantized
//! network training.
//!
//! The crate models 4T2R ternary and 2T1R binary crossbars of magnetic
//! tunnel junctions, their analytic switching law and a stochastic LLG
//! Monte-Carlo oracle, the GXNOR probabilistic-projection update rule, a
//! training harness that backpropagates through the array model, and the
//! energy-efficiency arithmetic of the accelerator design.

pub mod array;
pub mod config;
pub mod error;
pub mod gxnor;
pub mod llg;
pub mod mnist;
pub mod mtj;
pub mod perf;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
