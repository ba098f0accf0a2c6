//! Splitting a game into a trunk and subgames along public states.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::efg::{GameTree, PsId};
use crate::error::{Error, Result};

/// How a game is cut into pieces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// One piece holding the whole game.
    WholeGame,
    /// A new piece starts wherever the round label changes.
    ByRound,
    /// A public state joins its parent's piece while at most `k` public states with
    /// decisions lie above it inside that piece.
    ByOwnActions(u32),
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::WholeGame => f.write_str("whole_game"),
            Scheme::ByRound => f.write_str("by_round"),
            Scheme::ByOwnActions(k) => write!(f, "by_own_actions:{k}"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "whole_game" => Ok(Scheme::WholeGame),
            "by_round" => Ok(Scheme::ByRound),
            _ => {
                let k = s
                    .strip_prefix("by_own_actions:")
                    .and_then(|k| k.parse::<u32>().ok())
                    .ok_or_else(|| Error::Config(format!("unknown partitioning scheme `{s}`")))?;
                Ok(Scheme::ByOwnActions(k))
            }
        }
    }
}

/// A connected set of public states solved in one resolve step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piece {
    /// Topmost public state; every other member lies below it.
    pub start: PsId,
    /// Member public states in breadth-first order, `start` first.
    pub members: Vec<PsId>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Number of pieces above this one.
    pub level: u32,
}

/// Public-state sets of one resolve step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepSets {
    /// Public states of the pieces from the root piece down to the current one.
    pub trunk: Vec<PsId>,
    /// Starts of the current piece's children, where the value function applies
    /// inside the current subgame.
    pub border: Vec<PsId>,
    /// Starts of the other children of earlier pieces, where play leaves the trunk
    /// without entering the current subgame.
    pub leave: Vec<PsId>,
}

/// A partitioning of a game's public tree into pieces.
#[derive(Clone, Debug)]
pub struct SubgamePartitioning {
    pub scheme: Scheme,
    /// Pieces in breadth-first order; piece 0 holds the root public state.
    pub pieces: Vec<Piece>,
    piece_of: Vec<u32>,
}

impl SubgamePartitioning {
    pub fn piece_of(&self, ps: PsId) -> usize {
        self.piece_of[ps.index()] as usize
    }

    /// Pieces from the root piece down to `piece`, inclusive.
    pub fn path(&self, piece: usize) -> Vec<usize> {
        let mut out = vec![piece];
        let mut cur = piece;
        while let Some(p) = self.pieces[cur].parent {
            out.push(p);
            cur = p;
        }
        out.reverse();
        out
    }

    /// Per public state, whether it belongs to one of `pieces`.
    pub fn mask(&self, pieces: &[usize]) -> Vec<bool> {
        let mut keep = vec![false; self.pieces.len()];
        for &p in pieces {
            keep[p] = true;
        }
        self.piece_of.iter().map(|&p| keep[p as usize]).collect()
    }

    pub fn step_sets(&self, piece: usize) -> StepSets {
        let path = self.path(piece);
        let trunk = path.iter().flat_map(|&p| self.pieces[p].members.iter().copied()).collect();
        let border = self.pieces[piece].children.iter().map(|&c| self.pieces[c].start).collect();
        let leave = path
            .windows(2)
            .flat_map(|w| {
                self.pieces[w[0]]
                    .children
                    .iter()
                    .filter(move |&&c| c != w[1])
                    .map(|&c| self.pieces[c].start)
            })
            .collect();
        StepSets { trunk, border, leave }
    }
}

/// Cuts the public tree of `tree` according to `scheme`.
pub fn make_partitioning(tree: &GameTree, scheme: Scheme) -> Result<SubgamePartitioning> {
    let n = tree.public_states().len();
    let root = tree.node(tree.root()).public_state;
    let mut piece_of = vec![u32::MAX; n];
    // Decision public states from the piece start down to each public state.
    let mut decisions = vec![0u32; n];
    let mut pieces: Vec<Piece> = Vec::new();
    let mut queue = VecDeque::from([root]);
    while let Some(ps) = queue.pop_front() {
        let info = tree.public_state(ps);
        let joins = info.parent.and_then(|parent| {
            let up = tree.public_state(parent);
            let stays = match scheme {
                Scheme::WholeGame => true,
                Scheme::ByRound => up.round == info.round,
                Scheme::ByOwnActions(k) => decisions[parent.index()] <= k,
            };
            stays.then_some(parent)
        });
        let piece = match joins {
            Some(parent) => {
                let p = piece_of[parent.index()] as usize;
                pieces[p].members.push(ps);
                decisions[ps.index()] = decisions[parent.index()];
                p
            }
            None => {
                let parent_piece = info.parent.map(|parent| piece_of[parent.index()] as usize);
                let level = parent_piece.map_or(0, |p| pieces[p].level + 1);
                let id = pieces.len();
                if let Some(p) = parent_piece {
                    pieces[p].children.push(id);
                }
                pieces.push(Piece { start: ps, members: vec![ps], parent: parent_piece, children: Vec::new(), level });
                id
            }
        };
        piece_of[ps.index()] = piece as u32;
        decisions[ps.index()] += info.has_decision as u32;
        queue.extend(info.children.iter().copied());
    }
    let part = SubgamePartitioning { scheme, pieces, piece_of };
    validate(tree, &part)?;
    Ok(part)
}

/// Checks that every piece is closed under public-state parents below its start
/// and that every history sits in exactly one piece.
fn validate(tree: &GameTree, part: &SubgamePartitioning) -> Result<()> {
    let mut problems: Vec<String> = Vec::new();
    for (k, &p) in part.piece_of.iter().enumerate() {
        if p == u32::MAX {
            problems.push(format!("public state {k} is in no piece"));
        }
    }
    for (id, piece) in part.pieces.iter().enumerate() {
        for &m in &piece.members[1..] {
            let parent = tree.public_state(m).parent;
            if parent.is_none_or(|q| part.piece_of(q) != id) {
                problems.push(format!("piece {id} is not closed above `{}`", tree.public_state(m).key));
            }
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Structure(problems.join("; ")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games;
    use alloc::string::ToString;

    #[test]
    fn whole_game_is_one_piece() {
        let t = games::build_kuhn();
        let p = make_partitioning(&t, Scheme::WholeGame).unwrap();
        assert_eq!(p.pieces.len(), 1);
        let s = p.step_sets(0);
        assert!(s.border.is_empty() && s.leave.is_empty());
        assert_eq!(s.trunk.len(), t.public_states().len());
    }

    #[test]
    fn leduc_by_round_cuts_at_the_board_card() {
        let t = games::build_leduc();
        let p = make_partitioning(&t, Scheme::ByRound).unwrap();
        let root = &p.pieces[0];
        assert!(root.members.iter().all(|&m| t.public_state(m).round == 0));
        assert!(!root.children.is_empty());
        for &c in &root.children {
            let start = t.public_state(p.pieces[c].start);
            assert_eq!(start.round, 1);
            // The start is the chance node dealing the board card.
            let n = start.roots[0];
            assert_eq!(t.node(n).kind, crate::efg::NodeKind::Chance);
            assert!(p.pieces[c].children.is_empty());
        }
    }

    #[test]
    fn ce_mp_depth_one_cuts_before_xy() {
        let t = games::build_ce_mp();
        let p = make_partitioning(&t, Scheme::ByOwnActions(1)).unwrap();
        assert_eq!(p.pieces.len(), 2);
        assert_eq!(t.public_state(p.pieces[1].start).key, "xy");
        let s = p.step_sets(0);
        assert_eq!(s.border, vec![p.pieces[1].start]);
        let whole = make_partitioning(&t, Scheme::ByOwnActions(2)).unwrap();
        assert_eq!(whole.pieces.len(), 1);
    }

    #[test]
    fn leave_sets_hold_siblings_on_the_path() {
        let t = games::build_leduc();
        let p = make_partitioning(&t, Scheme::ByRound).unwrap();
        let c = p.pieces[0].children[0];
        let s = p.step_sets(c);
        assert!(s.border.is_empty());
        assert_eq!(s.leave.len(), p.pieces[0].children.len() - 1);
        assert!(!s.leave.contains(&p.pieces[c].start));
    }

    #[test]
    fn scheme_round_trip() {
        for s in ["whole_game", "by_round", "by_own_actions:3"] {
            assert_eq!(s.parse::<Scheme>().unwrap().to_string(), s);
        }
        assert!("by_own_actions:x".parse::<Scheme>().is_err());
    }
}
