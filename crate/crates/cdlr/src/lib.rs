//! Experiment harness for depth-limited continual resolving: strategy files,
//! opponent generation, experiment configs, sweeps with exact evaluation, and the
//! gadget counterexample reports behind the `cdlr` command.

pub mod config;
pub mod demo;
pub mod harness;
pub mod opponents;
pub mod strategy_io;
