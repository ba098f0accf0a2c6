//! Kuhn poker and Leduc Hold'em.
//!
//! Action labels follow one convention across both games so that poker-specific
//! tools can read them: `f` folds, `c` checks or calls, `b` and `r` put chips in.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::{act, chance, decision, leaf};
use crate::efg::{build, Domain, GameTree, NodeSpec, Player};

const KUHN_CARDS: [&str; 3] = ["J", "Q", "K"];

/// Three-card Kuhn poker with ante 1 and bet 1. The deal is sequential: first
/// `Max`'s card, then `Min`'s card from the remaining two.
pub fn build_kuhn() -> GameTree {
    let mut deals = Vec::new();
    for (a, ca) in KUHN_CARDS.iter().enumerate() {
        let mut inner = Vec::new();
        for (b, cb) in KUHN_CARDS.iter().enumerate() {
            if a != b {
                inner.push((cb.to_string(), 0.5, kuhn_node([a, b], "")));
            }
        }
        let node = chance(inner, [ca.to_string(), String::new()], "deal", 0);
        deals.push((ca.to_string(), 1.0 / 3.0, node));
    }
    let root = chance(deals, [String::new(), String::new()], "deal", 0);
    build("kuhn", Domain::Poker, root).expect("kuhn is well formed")
}

fn kuhn_node(cards: [usize; 2], hist: &str) -> NodeSpec {
    let player = if hist.len() % 2 == 0 { Player::Max } else { Player::Min };
    let me = player.index();
    let key = |p: usize| format!("{}:{}", KUHN_CARDS[cards[p]], hist);
    let public = format!("k:{hist}");
    let showdown = |stake: f64| if cards[0] > cards[1] { stake } else { -stake };
    let after = |a: &str| -> NodeSpec {
        let h = format!("{hist}{a}");
        match h.as_str() {
            "cc" => leaf(showdown(1.0)),
            "bc" | "cbc" => leaf(showdown(2.0)),
            "bf" => leaf(1.0),
            "cbf" => leaf(-1.0),
            _ => kuhn_node(cards, &h),
        }
    };
    let facing = hist.ends_with('b');
    let actions = if facing {
        vec![act("f", after("f")), act("c", after("c"))]
    } else {
        vec![act("c", after("c")), act("b", after("b"))]
    };
    decision(player, key(me), key(1 - me), &public, 0, actions)
}

const LEDUC_RANKS: [&str; 3] = ["J", "Q", "K"];
const LEDUC_BET: [f64; 2] = [2.0, 4.0];
const LEDUC_MAX_BETS: u32 = 2;

/// Leduc Hold'em: six cards in two suits of three ranks, ante 1, two betting rounds
/// with bet sizes 2 and 4, at most two bets per round, one public card between the
/// rounds. A pair with the board wins, otherwise the higher rank wins, equal ranks
/// split.
///
/// Cards are physical (the private deal has 30 equally likely ordered pairs, the
/// board card four equally likely outcomes) while keys only mention ranks, so
/// suit-isomorphic histories share infosets.
pub fn build_leduc() -> GameTree {
    let mut deals = Vec::new();
    for a in 0..6usize {
        for b in 0..6usize {
            if a != b {
                let label = format!("{}{}{}{}", LEDUC_RANKS[a / 2], a % 2, LEDUC_RANKS[b / 2], b % 2);
                let state = Leduc { cards: [a, b], board: None, h0: String::new(), hist: String::new() };
                deals.push((label, 1.0 / 30.0, state.betting([1.0, 1.0], 0)));
            }
        }
    }
    let root = chance(deals, [String::new(), String::new()], "deal", 0);
    build("leduc", Domain::Poker, root).expect("leduc is well formed")
}

#[derive(Clone)]
struct Leduc {
    /// Physical card indices; the rank is `index / 2`.
    cards: [usize; 2],
    board: Option<usize>,
    /// Betting of the first round once it is over.
    h0: String,
    /// Betting of the current round.
    hist: String,
}

impl Leduc {
    fn round(&self) -> u32 {
        self.board.is_some() as u32
    }

    fn public_key(&self) -> String {
        match self.board {
            None => format!("l:{}", self.hist),
            Some(b) => format!("l:{}/{}:{}", self.h0, LEDUC_RANKS[b / 2], self.hist),
        }
    }

    fn key(&self, p: usize) -> String {
        let own = LEDUC_RANKS[self.cards[p] / 2];
        match self.board {
            None => format!("{own}:{}", self.hist),
            Some(b) => format!("{own}{}:{}/{}", LEDUC_RANKS[b / 2], self.h0, self.hist),
        }
    }

    fn showdown(&self, stake: f64) -> NodeSpec {
        let board = self.board.expect("showdown after the board") / 2;
        let r = [self.cards[0] / 2, self.cards[1] / 2];
        let strength = |x: usize| if x == board { 10 + x } else { x };
        let (s0, s1) = (strength(r[0]), strength(r[1]));
        leaf(if s0 > s1 {
            stake
        } else if s0 < s1 {
            -stake
        } else {
            0.0
        })
    }

    /// Node where the player to act is determined by the round's history length.
    fn betting(&self, contrib: [f64; 2], bets: u32) -> NodeSpec {
        let player = if self.hist.len() % 2 == 0 { Player::Max } else { Player::Min };
        let me = player.index();
        let round = self.round() as usize;
        let facing = contrib[me] < contrib[1 - me];
        let mut actions = Vec::new();
        if facing {
            // Folding forfeits everything put in so far.
            let u = if player == Player::Max { -contrib[0] } else { contrib[1] };
            actions.push(act("f", leaf(u)));
            let mut called = contrib;
            called[me] = called[1 - me];
            actions.push(act("c", self.with('c').round_over(called)));
        } else if self.hist.is_empty() {
            actions.push(act("c", self.with('c').betting(contrib, bets)));
        } else {
            actions.push(act("c", self.with('c').round_over(contrib)));
        }
        if bets < LEDUC_MAX_BETS {
            let mut raised = contrib;
            raised[me] = contrib[1 - me] + LEDUC_BET[round];
            actions.push(act("r", self.with('r').betting(raised, bets + 1)));
        }
        decision(player, self.key(me), self.key(1 - me), &self.public_key(), self.round(), actions)
    }

    fn with(&self, a: char) -> Leduc {
        let mut s = self.clone();
        s.hist.push(a);
        s
    }

    fn round_over(&self, contrib: [f64; 2]) -> NodeSpec {
        debug_assert_eq!(contrib[0], contrib[1]);
        if self.board.is_some() {
            return self.showdown(contrib[0]);
        }
        let mut outcomes = Vec::new();
        for c in 0..6usize {
            if c == self.cards[0] || c == self.cards[1] {
                continue;
            }
            let next = Leduc { cards: self.cards, board: Some(c), h0: self.hist.clone(), hist: String::new() };
            let label = format!("{}{}", LEDUC_RANKS[c / 2], c % 2);
            outcomes.push((label, 0.25, next.betting(contrib, 0)));
        }
        let obs = [
            format!("{}:{}/", LEDUC_RANKS[self.cards[0] / 2], self.hist),
            format!("{}:{}/", LEDUC_RANKS[self.cards[1] / 2], self.hist),
        ];
        chance(outcomes, obs, &format!("l:{}/", self.hist), 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efg::NodeKind;

    #[test]
    fn kuhn_shape() {
        let t = build_kuhn();
        assert_eq!(t.num_nodes(), 58);
        assert_eq!(t.num_infosets(Player::Max), 6);
        assert_eq!(t.num_infosets(Player::Min), 6);
        assert_eq!(t.num_terminals(), 30);
        assert_eq!(t.utility_range(), (-2.0, 2.0));
    }

    #[test]
    fn leduc_shape() {
        let t = build_leduc();
        let root = t.node(t.root());
        assert_eq!(root.num_children, 30);
        assert_eq!(t.utility_range(), (-13.0, 13.0));
        // Two betting rounds: the public-card chance nodes are the only round-1
        // chance nodes and each has four outcomes.
        let board_nodes: Vec<_> = t
            .nodes()
            .iter()
            .filter(|n| n.kind == NodeKind::Chance && t.public_state(n.public_state).round == 1)
            .collect();
        assert!(!board_nodes.is_empty());
        assert!(board_nodes.iter().all(|n| n.num_children == 4));
        // Every history belongs to exactly one public state.
        let mut counted = 0;
        for ps in t.public_states() {
            counted += ps.nodes.len();
        }
        assert_eq!(counted, t.num_nodes() - t.num_terminals());
    }
}
