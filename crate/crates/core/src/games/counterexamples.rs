//! Small games that show where resolving with an opponent model goes wrong.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{act, chance, decision, leaf};
use crate::efg::{build, BehavioralStrategy, Domain, GameTree, NodeSpec, Player};
use crate::error::{Error, Result};

/// Payoff `E` of the gadget counterexample.
pub const CE_GADGET_E: f64 = 3.500001;

fn none() -> [String; 2] {
    [String::new(), String::new()]
}

/// Coin game: chance picks a red or green coin with equal probability, `Min` sees
/// the coin and chooses heads or tails (`RH`/`RT` or `GH`/`GT`), then `Max` chooses
/// `P` or `Q` without seeing anything. `P` pays −4, −1, −2 and 10 after `RH`, `RT`,
/// `GH` and `GT`; `Q` always pays 0.
///
/// Public states: `root` (the coin flip), `coin` (`Min`'s nodes) and `act` (`Max`'s
/// nodes, round 1).
pub fn build_ce_coin() -> GameTree {
    let max_node = |tail: &str, p_payoff: f64| {
        decision(Player::Max, "act", tail, "act", 1, vec![act("P", leaf(p_payoff)), act("Q", leaf(0.0))])
    };
    let red = decision(
        Player::Min,
        "R",
        "",
        "coin",
        0,
        vec![act("RH", max_node("RH", -4.0)), act("RT", max_node("RT", -1.0))],
    );
    let green = decision(
        Player::Min,
        "G",
        "",
        "coin",
        0,
        vec![act("GH", max_node("GH", -2.0)), act("GT", max_node("GT", 10.0))],
    );
    let root = chance(vec![("R".into(), 0.5, red), ("G".into(), 0.5, green)], none(), "root", 0);
    build("ce_coin", Domain::Other, root).expect("ce_coin is well formed")
}

/// Gadget counterexample: chance 0.5/0.5, `Min` picks `W`/`X` on the left and
/// `Y`/`Z` on the right, then `Max` picks `c`, `b` or `a` in one infoset spanning all
/// four nodes. `b` always pays 0. After `W` and `Z` the actions `c` and `a` hand the
/// move back to `Min` (`M`/`N`, `O`/`P`, `Q`/`R`, `S`/`T`).
///
/// Public states: `root`, `choose` (`Min`'s first move), `act` (`Max`, round 1), and
/// `after_c` and `after_a` (`Min`'s second move, round 1).
pub fn build_ce_gadget() -> GameTree {
    let e = CE_GADGET_E;
    let inner = |key: &str, ps: &str, tail: &str, l: (&str, f64), r: (&str, f64)| {
        decision(Player::Min, key, tail, ps, 1, vec![act(l.0, leaf(l.1)), act(r.0, leaf(r.1))])
    };
    let max_node = |tail: &str, c: NodeSpec, a: NodeSpec| {
        decision(Player::Max, "act", tail, "act", 1, vec![act("c", c), act("b", leaf(0.0)), act("a", a)])
    };
    let w = max_node(
        "W",
        inner("Wc", "after_c", "c", ("M", e), ("N", -3.0)),
        inner("Wa", "after_a", "a", ("O", 4.5), ("P", -4.0)),
    );
    let x = max_node("X", leaf(-3.0), leaf(-3.0));
    let y = max_node("Y", leaf(-4.0), leaf(-5.0));
    let z = max_node(
        "Z",
        inner("Zc", "after_c", "c", ("Q", e), ("R", 0.0)),
        inner("Za", "after_a", "a", ("S", 4.5), ("T", 0.0)),
    );
    let left = decision(Player::Min, "left", "", "choose", 0, vec![act("W", w), act("X", x)]);
    let right = decision(Player::Min, "right", "", "choose", 0, vec![act("Y", y), act("Z", z)]);
    let root = chance(vec![("L".into(), 0.5, left), ("R".into(), 0.5, right)], none(), "root", 0);
    build("ce_gadget", Domain::Other, root).expect("ce_gadget is well formed")
}

/// The `Min` model of the gadget counterexample: pure `W`, `Z`, `M`, `O`, `Q`, `S`.
pub fn ce_gadget_model(tree: &GameTree) -> BehavioralStrategy {
    pure_by_label(tree, Player::Min, &["W", "Z", "M", "O", "Q", "S"])
}

/// Matching pennies where the (`T`, `t`) outcome hands `Min` a choice between `x`
/// (pays 10) and `y` (pays 1). `H`/`h` pays 1 and mismatches pay 0.
///
/// Public states: `root` (`Max`), `mp` (`Min`'s guess) and `xy` (`Min`'s follow-up).
pub fn build_ce_mp() -> GameTree {
    let xy = decision(Player::Min, "xy", "T", "xy", 2, vec![act("x", leaf(10.0)), act("y", leaf(1.0))]);
    let guess = |tail: &str, h: NodeSpec, t: NodeSpec| {
        decision(Player::Min, "guess", tail, "mp", 1, vec![act("h", h), act("t", t)])
    };
    let root = decision(
        Player::Max,
        "root",
        "",
        "root",
        0,
        vec![act("H", guess("H", leaf(1.0), leaf(0.0))), act("T", guess("T", leaf(0.0), xy))],
    );
    build("ce_mp", Domain::Other, root).expect("ce_mp is well formed")
}

/// The model of the matching-pennies counterexample: `h` with probability 2/3 and
/// always `x`.
pub fn ce_mp_model(tree: &GameTree) -> BehavioralStrategy {
    let mut s = BehavioralStrategy::uniform(tree, Player::Min);
    let g = tree.infoset_by_key(Player::Min, "guess").expect("guess infoset");
    let xy = tree.infoset_by_key(Player::Min, "xy").expect("xy infoset");
    s.set(g, &[2.0 / 3.0, 1.0 / 3.0]).expect("valid");
    s.set(xy, &[1.0, 0.0]).expect("valid");
    s
}

/// Round name used in labels: `a`, `b`, `c`, ...
pub fn round_letter(k: u32) -> char {
    (b'a' + k as u8) as char
}

/// Multi-round counterexample with `n` rounds (at least three).
///
/// The root chance node has `n + 1` equally likely outcomes: one per round that
/// drops straight into `Max`'s decision of that round, and one that starts play.
/// In play, round `k` (0-based, letter `a`, `b`, ...) begins with `Min` choosing to
/// prepare (`p*`) or continue (`c*`). After prepare `Max` stays (`s*`, 0) or leaves
/// (`l*`, `4^(k+1)`). After continue a fair coin ends the game with payoff 1 or moves
/// to the next round; in the last round continue ends the game with payoff 1. On the
/// direct chance branches staying pays 2 and leaving pays 0. If `Max` stays after a
/// last-round prepare, `Min` picks `c` (paying a quarter of the last leave payoff)
/// or the mistake `m` (paying 0).
///
/// `Max`'s round-`k` infoset spans the direct branch and the play branch. Public
/// states: `wait` (root, `Min`'s nodes and the coin flips), `round_<letter>` per round
/// and `mistake`.
pub fn build_ce_rounds(n: u32) -> Result<GameTree> {
    if n < 3 {
        return Err(Error::Parameter(format!("ce_rounds needs at least three rounds, got {n}")));
    }
    if n > 12 {
        return Err(Error::Parameter(format!("ce_rounds supports at most 12 rounds, got {n}")));
    }
    let leave = |k: u32| (1u64 << (2 * (k + 1))) as f64;
    let max_node = |k: u32, tail: String, stay: NodeSpec, leave_payoff: f64| {
        let l = round_letter(k);
        decision(
            Player::Max,
            format!("r{l}"),
            tail,
            &format!("round_{l}"),
            k + 1,
            vec![act(&format!("s{l}"), stay), act(&format!("l{l}"), leaf(leave_payoff))],
        )
    };

    // Play branch, built from the last round backwards.
    let last = n - 1;
    let mistake = decision(
        Player::Min,
        "mistake",
        "s",
        "mistake",
        n + 1,
        vec![act("c", leaf(leave(last) / 4.0)), act("m", leaf(0.0))],
    );
    let mut next: Option<NodeSpec> = None;
    let mut mistake = Some(mistake);
    for k in (0..n).rev() {
        let l = round_letter(k);
        let stay = if k == last { mistake.take().expect("built once") } else { leaf(0.0) };
        let prepared = max_node(k, format!("p{l}"), stay, leave(k));
        let cont = match next.take() {
            None => leaf(1.0),
            Some(following) => chance(
                vec![("go".into(), 0.5, following), ("end".into(), 0.5, leaf(1.0))],
                [String::new(), format!("c{l}")],
                "wait",
                0,
            ),
        };
        let min_node = decision(
            Player::Min,
            format!("{l}"),
            "",
            "wait",
            0,
            vec![act(&format!("p{l}"), prepared), act(&format!("c{l}"), cont)],
        );
        next = Some(min_node);
    }

    let p = 1.0 / (n as f64 + 1.0);
    let mut outcomes: Vec<(String, f64, NodeSpec)> = (0..n)
        .map(|k| {
            let direct = max_node(k, format!("x{}", round_letter(k)), leaf(2.0), 0.0);
            (format!("x{}", round_letter(k)), p, direct)
        })
        .collect();
    outcomes.push(("play".into(), p, next.expect("at least one round")));
    let root = chance(outcomes, none(), "wait", 0);
    build(&format!("ce_rounds:{n}"), Domain::Other, root)
}

/// Pure strategy choosing the action with the given label at every infoset that has
/// one; other infosets stay uniform.
pub(crate) fn pure_by_label(tree: &GameTree, player: Player, labels: &[&str]) -> BehavioralStrategy {
    let mut s = BehavioralStrategy::uniform(tree, player);
    for (i, info) in tree.infosets(player).iter().enumerate() {
        if let Some(a) = info.actions.iter().position(|x| labels.contains(&x.as_str())) {
            let mut v = vec![0.0; info.num_actions()];
            v[a] = 1.0;
            s.set(crate::efg::InfosetId(i as u32), &v).expect("pure vector");
        }
    }
    s
}

/// One `Max` decision with a single action leading to `utility`.
pub fn single_action_game(utility: f64) -> GameTree {
    let root = decision(Player::Max, "only", "", "root", 0, vec![act("go", leaf(utility))]);
    build("single", Domain::Other, root).expect("single-action game is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efg::{NodeKind, PsId};

    fn terminal_multiset(t: &GameTree) -> Vec<f64> {
        let mut v: Vec<f64> = t.nodes().iter().filter(|n| n.is_terminal()).map(|n| n.utility).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn ce_coin_matches_figure() {
        let t = build_ce_coin();
        assert_eq!(terminal_multiset(&t), vec![-4.0, -2.0, -1.0, 0.0, 0.0, 0.0, 0.0, 10.0]);
        assert_eq!(t.num_infosets(Player::Max), 1);
        assert_eq!(t.infosets(Player::Max)[0].nodes.len(), 4);
        assert_eq!(t.num_infosets(Player::Min), 2);
        assert_eq!(t.public_states().len(), 3);
    }

    #[test]
    fn ce_gadget_matches_figure() {
        let t = build_ce_gadget();
        let e = CE_GADGET_E;
        let mut expected = vec![e, -3.0, 4.5, -4.0, 0.0, -3.0, 0.0, -3.0, -4.0, 0.0, -5.0, e, 0.0, 0.0, 4.5, 0.0];
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(terminal_multiset(&t), expected);
        assert_eq!(t.num_infosets(Player::Max), 1);
        assert_eq!(t.infosets(Player::Max)[0].actions, vec!["c", "b", "a"]);
        assert_eq!(t.num_infosets(Player::Min), 6);
        // b pays 0 at every node of the infoset.
        for &h in &t.infosets(Player::Max)[0].nodes {
            let b = t.node(h).first_child as usize + 1;
            assert_eq!(t.nodes()[b].kind, NodeKind::Terminal);
            assert_eq!(t.nodes()[b].utility, 0.0);
        }
    }

    #[test]
    fn ce_mp_matches_figure() {
        let t = build_ce_mp();
        assert_eq!(terminal_multiset(&t), vec![0.0, 0.0, 1.0, 1.0, 10.0]);
        assert_eq!(t.num_infosets(Player::Min), 2);
        assert_eq!(t.public_states().len(), 3);
    }

    #[test]
    fn ce_rounds_matches_figure() {
        let t = build_ce_rounds(3).unwrap();
        let leaves: Vec<f64> = ["la", "lb", "lc"]
            .iter()
            .map(|l| {
                t.nodes()
                    .iter()
                    .enumerate()
                    .filter(|(i, n)| n.is_terminal() && t.history_string(crate::efg::NodeId(*i as u32)).starts_with("play"))
                    .find(|(_, n)| n.label == *l)
                    .map(|(_, n)| n.utility)
                    .unwrap()
            })
            .collect();
        assert_eq!(leaves, vec![4.0, 16.0, 64.0]);
        let m = t.infoset_by_key(Player::Min, "mistake").unwrap();
        let node = t.infoset(Player::Min, m).nodes[0];
        let c = t.node(node).first_child as usize;
        assert_eq!(t.nodes()[c].utility, 16.0);
        assert_eq!(t.nodes()[c + 1].utility, 0.0);
        assert_eq!(t.node(t.root()).num_children, 4);
        for k in 0..3 {
            let info = t.infoset_by_key(Player::Max, &format!("r{}", round_letter(k))).unwrap();
            assert_eq!(t.infoset(Player::Max, info).nodes.len(), 2);
        }
        assert!(t.ps_by_key("mistake").is_some());
        assert_eq!(t.public_state(t.ps_by_key("round_c").unwrap()).parent, Some(PsId(0)));
        assert!(matches!(build_ce_rounds(2), Err(Error::Parameter(_))));
        assert!(build_ce_rounds(5).is_ok());
    }
}
