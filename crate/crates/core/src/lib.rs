//! Depth-limited continual resolving against opponent models.
//!
//! The crate builds fully enumerated two-player zero-sum extensive-form games,
//! solves them with CFR+, and computes responses to a fixed opponent model trunk by
//! trunk: continual depth-limited best response (CDBR) and continual depth-limited
//! restricted Nash response (CDRNR). It also carries the small constructions used to
//! show why the standard resolving gadgets are not enough once an opponent model is
//! in play, and evaluators for the error bounds of both algorithms.
//!
//! Everything here is `no_std` with `alloc`; file formats, the CLI and the experiment
//! harness live in the `cdlr` crate.
#![no_std]

extern crate alloc;

pub mod cfr;
pub mod efg;
pub mod error;
pub mod gadgets;
pub mod games;
pub mod lbr;
pub mod resolving;
pub mod valuefn;

pub use efg::{
    BehavioralStrategy, GameTree, InfosetId, NodeId, NodeKind, Player, PsId, StrategyProfile,
};
pub use error::{Error, Result};
