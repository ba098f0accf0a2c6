//! Local best response for poker games.
//!
//! At each of its infosets the responder forms an exact Bayesian belief over the
//! histories of the infoset from the opponent's strategy and picks the action with
//! the highest local estimate: folding is worth the fold payoff, checking or
//! calling is worth the showdown if both players only check or call from then on,
//! and betting or raising wins immediately when the opponent folds and otherwise
//! goes to that same showdown. The resulting pure strategy is then evaluated
//! exactly on the tree.
//!
//! Action labels follow the poker builders: `f` folds, `c` checks or calls, `b`
//! and `r` put chips in.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::efg::eval::{forward_reaches, unit_reach};
use crate::efg::{
    expected_utility, BehavioralStrategy, Domain, GameTree, InfosetId, NodeId, NodeKind, Player, Scope,
    StrategyProfile,
};
use crate::error::{Error, Result};

/// The responder's view at one of its infosets.
#[derive(Clone, Debug, PartialEq)]
pub struct LbrState {
    pub infoset: InfosetId,
    /// Histories of the infoset; they differ only in the opponent's cards.
    pub histories: Vec<NodeId>,
    /// Posterior probability of each history. Sums to one.
    pub belief: Vec<f64>,
}

/// Exact Bayesian beliefs of the responder at every one of its infosets.
///
/// The weight of a history is its chance reach times the opponent's reach. When
/// the opponent never reaches the infoset the weights fall back to chance reach
/// alone, which in the bundled poker games is uniform over the opponent's
/// consistent hands.
pub fn lbr_states(tree: &GameTree, opponent: &BehavioralStrategy) -> Result<Vec<LbrState>> {
    check_poker(tree)?;
    let responder = opponent.owner.opponent();
    let own = BehavioralStrategy::uniform(tree, responder);
    let profile = match responder {
        Player::Max => StrategyProfile::new(own, opponent.clone()),
        Player::Min => StrategyProfile::new(opponent.clone(), own),
    };
    let scope = Scope::full(tree);
    let reaches = forward_reaches(tree, &scope, &[unit_reach()], &profile);
    let opp = opponent.owner.index();
    Ok(tree
        .infosets(responder)
        .iter()
        .enumerate()
        .map(|(i, info)| {
            let mut w: Vec<f64> = info.nodes.iter().map(|h| reaches[h.index()][opp] * reaches[h.index()][2]).collect();
            if w.iter().sum::<f64>() <= 0.0 {
                w = info.nodes.iter().map(|h| reaches[h.index()][2]).collect();
            }
            let total: f64 = w.iter().sum();
            LbrState { infoset: InfosetId(i as u32), histories: info.nodes.clone(), belief: w.iter().map(|x| x / total).collect() }
        })
        .collect())
}

/// Local estimate of every action at `state`, from the responder's side.
pub fn lbr_action_values(tree: &GameTree, state: &LbrState, opponent: &BehavioralStrategy) -> Result<Vec<f64>> {
    check_poker(tree)?;
    let responder = opponent.owner.opponent();
    let sign = responder.sign();
    let info = tree.infoset(responder, state.infoset);
    let mut values = vec![0.0; info.num_actions()];
    for (&h, &b) in state.histories.iter().zip(&state.belief) {
        if b == 0.0 {
            continue;
        }
        for (a, c) in tree.node(h).children().enumerate() {
            let child = NodeId(c as u32);
            let v = match info.actions[a].as_str() {
                "f" | "c" => call_down(tree, child),
                "b" | "r" => bet_value(tree, child, opponent)?,
                other => return Err(Error::UnsupportedDomain(format!("unknown poker action {other:?}"))),
            };
            values[a] += b * sign * v;
        }
    }
    Ok(values)
}

/// The action the local best response takes at `state`; ties go to the lowest
/// action index.
pub fn lbr_action(tree: &GameTree, state: &LbrState, opponent: &BehavioralStrategy) -> Result<usize> {
    let values = lbr_action_values(tree, state, opponent)?;
    let mut best = 0;
    for (a, &v) in values.iter().enumerate() {
        if v > values[best] + 1e-12 {
            best = a;
        }
    }
    Ok(best)
}

/// The pure strategy of the local best response to `opponent`.
pub fn lbr_strategy(tree: &GameTree, opponent: &BehavioralStrategy) -> Result<BehavioralStrategy> {
    opponent.check_covers(tree)?;
    let responder = opponent.owner.opponent();
    let mut s = BehavioralStrategy::uniform(tree, responder);
    for state in lbr_states(tree, opponent)? {
        let a = lbr_action(tree, &state, opponent)?;
        let n = tree.infoset(responder, state.infoset).num_actions();
        let v: Vec<f64> = (0..n).map(|k| if k == a { 1.0 } else { 0.0 }).collect();
        s.set(state.infoset, &v)?;
    }
    Ok(s)
}

/// Expected utility of the local best response against `opponent`, from the
/// responder's side, by exact traversal.
pub fn lbr_value(tree: &GameTree, opponent: &BehavioralStrategy) -> Result<f64> {
    let s = lbr_strategy(tree, opponent)?;
    let responder = opponent.owner.opponent();
    let profile = match responder {
        Player::Max => StrategyProfile::new(s, opponent.clone()),
        Player::Min => StrategyProfile::new(opponent.clone(), s),
    };
    Ok(responder.sign() * expected_utility(tree, &profile))
}

fn check_poker(tree: &GameTree) -> Result<()> {
    if tree.domain != Domain::Poker {
        return Err(Error::UnsupportedDomain(format!("local best response needs a poker game, got {}", tree.name)));
    }
    Ok(())
}

/// Utility to `Max` if both players only check or call from `node` on.
fn call_down(tree: &GameTree, node: NodeId) -> f64 {
    let n = tree.node(node);
    match n.kind {
        NodeKind::Terminal => n.utility,
        NodeKind::Chance => {
            n.children().zip(tree.chance_probs(node)).map(|(c, &p)| p * call_down(tree, NodeId(c as u32))).sum()
        }
        NodeKind::Decision(p) => {
            let info = tree.infoset(p, n.infoset().expect("decision"));
            let a = info.actions.iter().position(|l| l == "c").expect("poker decisions can check or call");
            call_down(tree, NodeId(n.first_child + a as u32))
        }
    }
}

/// Utility to `Max` of betting into `node`, where the opponent answers: it folds
/// with its model probability and is otherwise assumed to call.
fn bet_value(tree: &GameTree, node: NodeId, opponent: &BehavioralStrategy) -> Result<f64> {
    let n = tree.node(node);
    match n.kind {
        NodeKind::Decision(p) if p == opponent.owner => {
            let i = n.infoset().expect("decision");
            let info = tree.infoset(p, i);
            let fold = info.actions.iter().position(|l| l == "f");
            let call = info.actions.iter().position(|l| l == "c").expect("poker decisions can check or call");
            let child = |a: usize| NodeId(n.first_child + a as u32);
            Ok(match fold {
                Some(f) => {
                    let pf = opponent.prob(i, f);
                    pf * tree.node(child(f)).utility + (1.0 - pf) * call_down(tree, child(call))
                }
                None => call_down(tree, child(call)),
            })
        }
        _ => Ok(call_down(tree, node)),
    }
}
