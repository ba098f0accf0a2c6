//! Imperfect-information Goofspiel with five cards.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{act, decision, leaf};
use crate::efg::{build, Domain, GameTree, NodeSpec, Player};

const CARDS: u32 = 5;

/// Goofspiel with point cards revealed in the fixed order 1, 2, 3, 4, 5.
///
/// Each round both players bid one of their remaining cards 1..5. The bids are
/// simultaneous: `Max` bids first and `Min` bids in the same public state without
/// seeing it. Only the outcome of the comparison (win, loss or draw) is revealed.
/// The higher bid takes the point card and a tie discards it. The utility is `Max`'s
/// points minus `Min`'s points.
pub fn build_goofspiel5() -> GameTree {
    let all = (1u32 << CARDS) - 1;
    let root = Goof { hands: [all, all], bids: [String::new(), String::new()], results: String::new(), diff: 0 }.max_node();
    build("goofspiel5", Domain::Other, root).expect("goofspiel is well formed")
}

#[derive(Clone)]
struct Goof {
    /// Remaining cards as bit masks (bit `k` is card `k + 1`).
    hands: [u32; 2],
    bids: [String; 2],
    /// Outcomes so far from `Max`'s side: `w`, `l` or `d`.
    results: String,
    diff: i32,
}

impl Goof {
    fn round(&self) -> u32 {
        self.results.len() as u32
    }

    fn key(&self, p: usize) -> String {
        format!("{}|{}", self.bids[p], self.results)
    }

    fn public(&self) -> String {
        format!("g:{}", self.results)
    }

    fn max_node(&self) -> NodeSpec {
        if self.round() == CARDS {
            return leaf(self.diff as f64);
        }
        let mut actions = Vec::new();
        for c in cards(self.hands[0]) {
            let mut next = self.clone();
            next.hands[0] &= !(1 << (c - 1));
            next.bids[0].push(digit(c));
            actions.push(act(&format!("{c}"), next.min_node(c)));
        }
        decision(Player::Max, self.key(0), self.key(1), &self.public(), self.round(), actions)
    }

    fn min_node(&self, max_bid: u32) -> NodeSpec {
        let point = self.round() as i32 + 1;
        let mut actions = Vec::new();
        for c in cards(self.hands[1]) {
            let mut next = self.clone();
            next.hands[1] &= !(1 << (c - 1));
            next.bids[1].push(digit(c));
            let r = match max_bid.cmp(&c) {
                core::cmp::Ordering::Greater => {
                    next.diff += point;
                    'w'
                }
                core::cmp::Ordering::Less => {
                    next.diff -= point;
                    'l'
                }
                core::cmp::Ordering::Equal => 'd',
            };
            next.results.push(r);
            actions.push(act(&format!("{c}"), next.max_node()));
        }
        decision(Player::Min, self.key(1), self.key(0), &self.public(), self.round(), actions)
    }
}

fn cards(mask: u32) -> impl Iterator<Item = u32> {
    (1..=CARDS).filter(move |c| mask & (1 << (c - 1)) != 0)
}

fn digit(c: u32) -> char {
    char::from_digit(c, 10).expect("single digit card")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn goofspiel_shape() {
        let t = build_goofspiel5();
        // 5!^2 complete bid sequences.
        assert_eq!(t.num_terminals(), 14_400);
        assert_eq!((1..=CARDS).sum::<u32>(), 15);
        // Winning every round is impossible with equal hands; the best split takes
        // all cards but the first.
        assert_eq!(t.utility_range(), (-13.0, 13.0));
        assert_eq!(t.public_state(t.node(t.root()).public_state).round, 0);
    }
}
