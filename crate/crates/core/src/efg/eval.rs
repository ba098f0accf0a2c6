//! Reaches, expected utilities, best responses, exploitability and gain.
//!
//! Everything is generic over [`Scalar`] so the same code runs in `f64` and in exact
//! rationals. The scope-based variants work on a part of the tree with given
//! initial reaches at the scope roots; the plain variants use the whole tree.

use alloc::vec;
use alloc::vec::Vec;

use super::scalar::Scalar;
use super::scope::{Scope, Slot};
use super::strategy::{BehavioralStrategy, StrategyProfile};
use super::tree::{GameTree, InfosetId, NodeId, NodeKind, Player, NONE};
use crate::error::Result;

/// Reach components `[max, min, chance]` of a history.
pub type Reach<S> = [S; 3];

pub fn unit_reach<S: Scalar>() -> Reach<S> {
    [S::one(), S::one(), S::one()]
}

/// Reach decomposition of one history: each component is the product of only that
/// actor's probabilities on the path.
pub fn reach<S: Scalar>(tree: &GameTree, profile: &StrategyProfile<S>, node: NodeId) -> Result<Reach<S>> {
    tree.checked_node(node)?;
    let mut r = unit_reach::<S>();
    let mut cur = node;
    while let Some(parent) = tree.node(cur).parent {
        let pn = tree.node(parent);
        let a = tree.node(cur).action_index as usize;
        match pn.kind {
            NodeKind::Chance => r[2] = r[2].clone() * S::from_f64(tree.chance_probs(parent)[a]),
            NodeKind::Decision(p) => {
                let i = p.index();
                r[i] = r[i].clone() * profile.of(p).prob(InfosetId(pn.infoset), a);
            }
            NodeKind::Terminal => unreachable!(),
        }
        cur = parent;
    }
    Ok(r)
}

/// Reaches of every local node of `scope`.
pub fn forward_reaches<S: Scalar>(
    tree: &GameTree,
    scope: &Scope,
    root_reach: &[Reach<S>],
    profile: &StrategyProfile<S>,
) -> Vec<Reach<S>> {
    assert_eq!(root_reach.len(), scope.num_roots());
    let mut out: Vec<Reach<S>> = Vec::with_capacity(scope.len());
    out.extend(root_reach.iter().cloned());
    out.resize(scope.len(), unit_reach());
    for l in 0..scope.len() as u32 {
        let slot = scope.slot(l);
        let g = scope.global(l);
        match slot {
            Slot::Chance => {
                let probs = tree.chance_probs(g);
                for (k, c) in scope.children(l).enumerate() {
                    let mut r = out[l as usize].clone();
                    r[2] = r[2].clone() * S::from_f64(probs[k]);
                    out[c as usize] = r;
                }
            }
            Slot::Decision(p) => {
                let info = InfosetId(tree.node(g).infoset);
                let strat = profile.of(p).get(info);
                for (k, c) in scope.children(l).enumerate() {
                    let mut r = out[l as usize].clone();
                    r[p.index()] = r[p.index()].clone() * strat[k].clone();
                    out[c as usize] = r;
                }
            }
            Slot::Terminal | Slot::Border => {}
        }
    }
    out
}

/// Expected utility to `Max` over a scope; border histories take `leaf` values
/// (utility to `Max` per local index).
pub fn scope_utility<S: Scalar>(
    tree: &GameTree,
    scope: &Scope,
    root_reach: &[Reach<S>],
    profile: &StrategyProfile<S>,
    leaf: Option<&[S]>,
) -> S {
    let reaches = forward_reaches(tree, scope, root_reach, profile);
    let mut total = S::zero();
    for l in 0..scope.len() {
        let u = match scope.slot(l as u32) {
            Slot::Terminal => S::from_f64(tree.node(scope.global(l as u32)).utility),
            Slot::Border => leaf.expect("border histories need leaf values")[l].clone(),
            _ => continue,
        };
        let [a, b, c] = reaches[l].clone();
        let w = a * b * c;
        if !w.is_zero() {
            total = total + w * u;
        }
    }
    total
}

/// Expected utility to `Max` of a full profile.
pub fn expected_utility<S: Scalar>(tree: &GameTree, profile: &StrategyProfile<S>) -> S {
    let scope = Scope::full(tree);
    scope_utility(tree, &scope, &[unit_reach()], profile, None)
}

/// Result of a best-response pass inside a scope.
#[derive(Clone, Debug)]
pub struct ScopeBestResponse<S> {
    /// Responder's expected utility (its own perspective), reach weighted over the
    /// scope roots.
    pub value: S,
    /// Chosen action per responder infoset of the tree; `u32::MAX` for infosets that
    /// are outside the scope or frozen.
    pub choice: Vec<u32>,
}

/// Best response of `responder` inside `scope` against `profile`.
///
/// Infosets with `free[i] == false` keep the responder's strategy from `profile`.
/// Infosets are decided bottom-up in order of decreasing own-sequence length, each
/// by its counterfactual action values; ties go to the lowest action index.
pub fn best_response_in<S: Scalar>(
    tree: &GameTree,
    scope: &Scope,
    root_reach: &[Reach<S>],
    profile: &StrategyProfile<S>,
    responder: Player,
    free: Option<&[bool]>,
    leaf: Option<&[S]>,
) -> ScopeBestResponse<S> {
    let n = scope.len();
    let r = responder.index();
    let sign = S::from_f64(responder.sign());

    // Opponent-and-chance reach per local node; the responder's own reach only
    // enters at the roots.
    let mut opp: Vec<S> = vec![S::zero(); n];
    for (k, rr) in root_reach.iter().enumerate() {
        opp[k] = rr[1 - r].clone() * rr[2].clone();
    }
    for l in 0..n as u32 {
        let g = scope.global(l);
        match scope.slot(l) {
            Slot::Chance => {
                let probs = tree.chance_probs(g);
                for (k, c) in scope.children(l).enumerate() {
                    opp[c as usize] = opp[l as usize].clone() * S::from_f64(probs[k]);
                }
            }
            Slot::Decision(p) => {
                let info = InfosetId(tree.node(g).infoset);
                if p == responder {
                    for c in scope.children(l) {
                        opp[c as usize] = opp[l as usize].clone();
                    }
                } else {
                    let strat = profile.of(p).get(info);
                    for (k, c) in scope.children(l).enumerate() {
                        opp[c as usize] = opp[l as usize].clone() * strat[k].clone();
                    }
                }
            }
            _ => {}
        }
    }

    // Local nodes of every responder infoset in the scope.
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); tree.num_infosets(responder)];
    for l in 0..n as u32 {
        if scope.slot(l) == Slot::Decision(responder) {
            members[tree.node(scope.global(l)).infoset as usize].push(l);
        }
    }

    let mut choice = vec![NONE; tree.num_infosets(responder)];
    let mut memo: Vec<Option<S>> = vec![None; n];
    let ctx = Ctx { tree, scope, profile, responder, sign: sign.clone(), leaf };

    for info in tree.infosets_bottom_up(responder) {
        let nodes = &members[info.index()];
        if nodes.is_empty() || free.is_some_and(|f| !f[info.index()]) {
            continue;
        }
        let na = tree.infoset(responder, info).num_actions();
        let mut best_a = 0usize;
        let mut best_v: Option<S> = None;
        for a in 0..na {
            let mut v = S::zero();
            for &l in nodes {
                let w = opp[l as usize].clone();
                if w.is_zero() {
                    continue;
                }
                let c = scope.children(l).start + a as u32;
                v = v + w * ctx.value(c, &choice, &mut memo);
            }
            match &best_v {
                None => {
                    best_v = Some(v);
                    best_a = a;
                }
                Some(b) if v.exceeds(b) => {
                    best_v = Some(v);
                    best_a = a;
                }
                _ => {}
            }
        }
        choice[info.index()] = best_a as u32;
    }

    let mut value = S::zero();
    for (k, rr) in root_reach.iter().enumerate() {
        let w = rr[r].clone() * opp[k].clone();
        if w.is_zero() {
            continue;
        }
        value = value + w * ctx.value(k as u32, &choice, &mut memo);
    }
    ScopeBestResponse { value, choice }
}

struct Ctx<'a, S> {
    tree: &'a GameTree,
    scope: &'a Scope,
    profile: &'a StrategyProfile<S>,
    responder: Player,
    sign: S,
    leaf: Option<&'a [S]>,
}

impl<S: Scalar> Ctx<'_, S> {
    /// Responder-perspective value of a local node given the decided choices.
    fn value(&self, l: u32, choice: &[u32], memo: &mut Vec<Option<S>>) -> S {
        if let Some(v) = &memo[l as usize] {
            return v.clone();
        }
        let g = self.scope.global(l);
        let v = match self.scope.slot(l) {
            Slot::Terminal => self.sign.clone() * S::from_f64(self.tree.node(g).utility),
            Slot::Border => self.sign.clone() * self.leaf.expect("border histories need leaf values")[l as usize].clone(),
            Slot::Chance => {
                let probs = self.tree.chance_probs(g);
                let mut v = S::zero();
                for (k, c) in self.scope.children(l).enumerate() {
                    v = v + S::from_f64(probs[k]) * self.value(c, choice, memo);
                }
                v
            }
            Slot::Decision(p) => {
                let info = self.tree.node(g).infoset;
                let ch = if p == self.responder { choice[info as usize] } else { NONE };
                if ch != NONE {
                    self.value(self.scope.children(l).start + ch, choice, memo)
                } else {
                    let strat = self.profile.of(p).get(InfosetId(info));
                    let mut v = S::zero();
                    for (k, c) in self.scope.children(l).enumerate() {
                        if strat[k].is_zero() {
                            continue;
                        }
                        v = v + strat[k].clone() * self.value(c, choice, memo);
                    }
                    v
                }
            }
        };
        memo[l as usize] = Some(v.clone());
        v
    }
}

/// Pure best response of `responder` to `opponent` over the whole tree, with the
/// responder's expected utility.
pub fn best_response<S: Scalar>(
    tree: &GameTree,
    opponent: &BehavioralStrategy<S>,
    responder: Player,
) -> (BehavioralStrategy<S>, S) {
    assert_eq!(opponent.owner, responder.opponent());
    let scope = Scope::full(tree);
    let own = BehavioralStrategy::<S>::uniform(tree, responder);
    let profile = match responder {
        Player::Max => StrategyProfile::new(own, opponent.clone()),
        Player::Min => StrategyProfile::new(opponent.clone(), own),
    };
    let br = best_response_in(tree, &scope, &[unit_reach()], &profile, responder, None, None);
    (choice_to_strategy(tree, responder, &br.choice, profile.of(responder)), br.value)
}

/// Turns a choice vector into a pure strategy, keeping `fallback` where no choice
/// was made.
pub fn choice_to_strategy<S: Scalar>(
    tree: &GameTree,
    player: Player,
    choice: &[u32],
    fallback: &BehavioralStrategy<S>,
) -> BehavioralStrategy<S> {
    let mut s = fallback.clone();
    for (i, &c) in choice.iter().enumerate() {
        if c == NONE {
            continue;
        }
        let info = InfosetId(i as u32);
        let na = tree.infoset(player, info).num_actions();
        let v: Vec<S> = (0..na).map(|a| if a as u32 == c { S::one() } else { S::zero() }).collect();
        s.set(info, &v).expect("pure vector");
    }
    s
}

/// How much a fully rational opponent gains against `strategy` over the game value.
/// `game_value` is the equilibrium utility to `Max`.
pub fn exploitability(tree: &GameTree, strategy: &BehavioralStrategy, game_value: f64) -> f64 {
    let (_, v) = best_response(tree, strategy, strategy.owner.opponent());
    match strategy.owner {
        // v is Min's utility against the Max strategy.
        Player::Max => v + game_value,
        Player::Min => v - game_value,
    }
}

/// Utility of `strategy` against `model` minus the game value, from the owner's side.
pub fn gain(tree: &GameTree, strategy: &BehavioralStrategy, model: &BehavioralStrategy, game_value: f64) -> f64 {
    let profile = match strategy.owner {
        Player::Max => StrategyProfile::new(strategy.clone(), model.clone()),
        Player::Min => StrategyProfile::new(model.clone(), strategy.clone()),
    };
    let u = expected_utility(tree, &profile);
    match strategy.owner {
        Player::Max => u - game_value,
        Player::Min => game_value - u,
    }
}

/// Sum of both players' best-response improvements; zero exactly at equilibrium.
pub fn nash_conv(tree: &GameTree, profile: &StrategyProfile) -> f64 {
    let (_, vmax) = best_response(tree, &profile.min, Player::Max);
    let (_, vmin) = best_response(tree, &profile.max, Player::Min);
    vmax + vmin
}
