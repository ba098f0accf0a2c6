//! Builders for the benchmark and counterexample games.
//!
//! Every builder returns a validated [`GameTree`] with labeled public states and
//! round numbers. Builders are deterministic: building twice gives identical trees.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::efg::{GameTree, NodeSpec, Player};
use crate::error::{Error, Result};

mod counterexamples;
mod goofspiel;
mod liars_dice;
mod poker;

pub use counterexamples::{
    build_ce_coin, build_ce_gadget, build_ce_mp, build_ce_rounds, ce_gadget_model, ce_mp_model, round_letter,
    single_action_game, CE_GADGET_E,
};
pub use goofspiel::build_goofspiel5;
pub use liars_dice::build_liars_dice;
pub use poker::{build_kuhn, build_leduc};

/// Selector for the bundled games, parsed from strings such as `leduc` or
/// `ce_rounds:3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GameId {
    Kuhn,
    Leduc,
    Goofspiel5,
    LiarsDice,
    CeCoin,
    CeGadget,
    CeMp,
    CeRounds(u32),
}

impl GameId {
    pub fn build(self) -> Result<GameTree> {
        match self {
            GameId::Kuhn => Ok(build_kuhn()),
            GameId::Leduc => Ok(build_leduc()),
            GameId::Goofspiel5 => Ok(build_goofspiel5()),
            GameId::LiarsDice => Ok(build_liars_dice()),
            GameId::CeCoin => Ok(build_ce_coin()),
            GameId::CeGadget => Ok(build_ce_gadget()),
            GameId::CeMp => Ok(build_ce_mp()),
            GameId::CeRounds(n) => build_ce_rounds(n),
        }
    }
}

impl fmt::Display for GameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameId::Kuhn => f.write_str("kuhn"),
            GameId::Leduc => f.write_str("leduc"),
            GameId::Goofspiel5 => f.write_str("goofspiel5"),
            GameId::LiarsDice => f.write_str("liars_dice"),
            GameId::CeCoin => f.write_str("ce_coin"),
            GameId::CeGadget => f.write_str("ce_gadget"),
            GameId::CeMp => f.write_str("ce_mp"),
            GameId::CeRounds(n) => write!(f, "ce_rounds:{n}"),
        }
    }
}

impl FromStr for GameId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "kuhn" => GameId::Kuhn,
            "leduc" => GameId::Leduc,
            "goofspiel5" => GameId::Goofspiel5,
            "liars_dice" => GameId::LiarsDice,
            "ce_coin" => GameId::CeCoin,
            "ce_gadget" => GameId::CeGadget,
            "ce_mp" => GameId::CeMp,
            _ => match s.strip_prefix("ce_rounds:") {
                Some(n) => GameId::CeRounds(
                    n.parse()
                        .map_err(|_| Error::Config(format!("bad round count in {s:?}")))?,
                ),
                None => return Err(Error::Config(format!("unknown game {s:?}"))),
            },
        })
    }
}

/// Decision node whose acting player's key doubles as its observation, with the
/// other player's observation set explicitly.
pub(crate) fn decision(
    player: Player,
    key: impl Into<String>,
    other_obs: impl Into<String>,
    public: &str,
    round: u32,
    actions: Vec<(String, NodeSpec)>,
) -> NodeSpec {
    NodeSpec::decision(player, key, actions)
        .public(public, round)
        .obs(player.opponent(), other_obs)
}

pub(crate) fn chance(
    outcomes: Vec<(String, f64, NodeSpec)>,
    obs: [String; 2],
    public: &str,
    round: u32,
) -> NodeSpec {
    NodeSpec::chance(outcomes)
        .public(public, round)
        .obs(Player::Max, obs[0].clone())
        .obs(Player::Min, obs[1].clone())
}

pub(crate) fn leaf(u: f64) -> NodeSpec {
    NodeSpec::terminal(u)
}

pub(crate) fn act(label: &str, child: NodeSpec) -> (String, NodeSpec) {
    (label.to_string(), child)
}
