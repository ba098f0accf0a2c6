//! Game representation and the exact evaluation primitives.

pub mod eval;
pub mod scalar;
pub mod scope;
pub mod strategy;
pub mod tree;

pub use eval::{best_response, exploitability, expected_utility, gain, nash_conv, reach};
pub use scalar::{rationalize, Scalar, Q};
pub use scope::{BorderPs, Scope, Slot};
pub use strategy::{BehavioralStrategy, Range, StrategyProfile};
pub use tree::{
    build, AugInfoset, Domain, GameTree, Infoset, InfosetId, Node, NodeId, NodeKind, NodeSpec, Player, PsId,
    PublicState, SpecKind,
};
