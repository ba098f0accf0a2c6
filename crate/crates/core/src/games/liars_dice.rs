//! Liar's Dice with one four-sided die per player.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{act, chance, decision, leaf};
use crate::efg::{build, Domain, GameTree, NodeSpec, Player};

const FACES: u32 = 4;
const MAX_COUNT: u32 = 2;

/// Liar's Dice, one die with four faces each, no wild face.
///
/// Bids `(count, face)` with count 1..2 are ordered lexicographically and each bid
/// must exceed the previous one. After the first bid the player to act may instead
/// call (`d`, disbelieve). On a call both dice are shown: if at least `count` dice
/// show `face` the bidder wins, otherwise the caller wins. Utilities are ±1.
pub fn build_liars_dice() -> GameTree {
    let mut outcomes = Vec::new();
    for a in 1..=FACES {
        for b in 1..=FACES {
            outcomes.push((format!("{a}{b}"), 1.0 / 16.0, node([a, b], &[])));
        }
    }
    let root = chance(outcomes, [String::new(), String::new()], "deal", 0);
    build("liars_dice", Domain::Other, root).expect("liar's dice is well formed")
}

fn bid(i: u32) -> (u32, u32) {
    (i / FACES + 1, i % FACES + 1)
}

fn label(i: u32) -> String {
    let (c, f) = bid(i);
    format!("{c}x{f}")
}

fn node(dice: [u32; 2], history: &[u32]) -> NodeSpec {
    let player = if history.len() % 2 == 0 { Player::Max } else { Player::Min };
    let me = player.index();
    let hist: Vec<String> = history.iter().map(|&i| label(i)).collect();
    let hist = hist.join(",");
    let key = |p: usize| format!("{}:{}", dice[p], hist);
    let mut actions = Vec::new();
    let next = history.last().map_or(0, |&b| b + 1);
    for i in next..FACES * MAX_COUNT {
        let mut h = history.to_vec();
        h.push(i);
        actions.push(act(&label(i), node(dice, &h)));
    }
    if let Some(&last) = history.last() {
        let (count, face) = bid(last);
        let shown = dice.iter().filter(|&&d| d == face).count() as u32;
        // The bidder is the player who is not calling.
        let bidder_wins = shown >= count;
        let u = if bidder_wins == (player == Player::Min) { 1.0 } else { -1.0 };
        actions.push(act("d", leaf(u)));
    }
    decision(player, key(me), key(1 - me), &format!("ld:{hist}"), 0, actions)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn liars_dice_shape() {
        let t = build_liars_dice();
        assert_eq!(t.node(t.root()).num_children, 16);
        assert_eq!(t.utility_range(), (-1.0, 1.0));
        // Every nonempty increasing bid sequence ends in exactly one call.
        assert_eq!(t.num_terminals(), 16 * 255);
    }
}
