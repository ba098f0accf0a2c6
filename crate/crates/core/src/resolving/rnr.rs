//! The restricted Nash response game: a root chance node picks a copy of the game
//! in which the opponent follows a fixed model or a copy in which it plays freely.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::cfr::{solve, CfrConfig, Problem, SolveResult};
use crate::efg::{build, BehavioralStrategy, GameTree, InfosetId, NodeId, NodeSpec, Player, SpecKind};
use crate::error::{Error, Result};

use super::Evaluation;

/// Prefix of `Min` keys in the copy where the model is played.
pub const FIXED_PREFIX: &str = "fixed|";
/// Prefix of `Min` keys in the copy where `Min` is free.
pub const FREE_PREFIX: &str = "free|";
/// Public state of the added root.
pub const ROOT_PUBLIC: &str = "rnr";

/// Which copy of the base game a node of the RNR game belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Root,
    Fixed,
    Free,
}

/// A restricted Nash response game built over a base game.
#[derive(Clone, Debug)]
pub struct RnrGame {
    pub tree: GameTree,
    /// Probability of the copy with the fixed model.
    pub p: f64,
    /// The model, on the base game's `Min` infosets.
    pub fixed_model: BehavioralStrategy,
    /// Base node of every node (the added root maps to the base root).
    pub base_node: Vec<NodeId>,
    pub side: Vec<Side>,
    /// Base infoset of every `Max` infoset. `Max` infosets span both copies.
    pub max_base: Vec<InfosetId>,
    /// Side and base infoset of every `Min` infoset.
    pub min_base: Vec<(Side, InfosetId)>,
}

/// Builds the RNR game of `tree` for the model `fixed_model` and probability `p` of
/// the fixed copy. `Max` keys and public states are shared by both copies while
/// `Min` keys are prefixed per copy.
pub fn make_rnr(tree: &GameTree, fixed_model: &BehavioralStrategy, p: f64) -> Result<RnrGame> {
    if fixed_model.owner != Player::Min {
        return Err(Error::Parameter("the model must be a Min strategy".into()));
    }
    fixed_model.check_covers(tree)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("p = {p} is outside [0, 1]")));
    }
    let base = tree.to_spec(tree.root());
    let root = NodeSpec::chance(vec![
        (String::from("fixed"), p, relabel(base.clone(), FIXED_PREFIX)),
        (String::from("free"), 1.0 - p, relabel(base, FREE_PREFIX)),
    ])
    .public(ROOT_PUBLIC, 0);
    let rnr = build(&format!("{}_rnr", tree.name), tree.domain.clone(), root)?;

    let mut base_node = vec![tree.root(); rnr.num_nodes()];
    let mut side = vec![Side::Root; rnr.num_nodes()];
    let mut stack = Vec::new();
    for (k, c) in rnr.node(rnr.root()).children().enumerate() {
        let which = if k == 0 { Side::Fixed } else { Side::Free };
        stack.push((NodeId(c as u32), tree.root(), which));
    }
    while let Some((r, b, which)) = stack.pop() {
        base_node[r.index()] = b;
        side[r.index()] = which;
        let (rn, bn) = (rnr.node(r), tree.node(b));
        for (rc, bc) in rn.children().zip(bn.children()) {
            stack.push((NodeId(rc as u32), NodeId(bc as u32), which));
        }
    }
    let max_base = rnr
        .infosets(Player::Max)
        .iter()
        .map(|i| tree.infoset_by_key(Player::Max, &i.key).expect("max keys are shared"))
        .collect();
    let min_base = rnr
        .infosets(Player::Min)
        .iter()
        .map(|i| {
            let (which, key) = match i.key.strip_prefix(FIXED_PREFIX) {
                Some(k) => (Side::Fixed, k),
                None => (Side::Free, i.key.strip_prefix(FREE_PREFIX).expect("min keys are prefixed")),
            };
            (which, tree.infoset_by_key(Player::Min, key).expect("base key"))
        })
        .collect();
    Ok(RnrGame { tree: rnr, p, fixed_model: fixed_model.clone(), base_node, side, max_base, min_base })
}

fn relabel(mut spec: NodeSpec, prefix: &str) -> NodeSpec {
    spec.obs[Player::Min.index()] = format!("{prefix}{}", spec.obs[Player::Min.index()]);
    spec.kind = match spec.kind {
        SpecKind::Terminal { utility } => SpecKind::Terminal { utility },
        SpecKind::Chance { outcomes } => SpecKind::Chance {
            outcomes: outcomes.into_iter().map(|(l, p, s)| (l, p, relabel(s, prefix))).collect(),
        },
        SpecKind::Decision { player, infoset, actions } => SpecKind::Decision {
            player,
            infoset: if player == Player::Min { format!("{prefix}{infoset}") } else { infoset },
            actions: actions.into_iter().map(|(l, s)| (l, relabel(s, prefix))).collect(),
        },
    };
    spec
}

impl RnrGame {
    /// `Min` infosets of the fixed copy.
    pub fn fixed_mask(&self) -> Vec<bool> {
        self.min_base.iter().map(|&(c, _)| c == Side::Fixed).collect()
    }

    /// `Min` strategy on the RNR game: the model in the fixed copy and `free` in the
    /// other one.
    pub fn min_strategy(&self, free: &BehavioralStrategy) -> BehavioralStrategy {
        self.min_with(Some(free))
    }

    /// The model on the fixed copy; uniform elsewhere.
    pub fn fixed_min(&self) -> BehavioralStrategy {
        self.min_with(None)
    }

    fn min_with(&self, free: Option<&BehavioralStrategy>) -> BehavioralStrategy {
        let mut s = BehavioralStrategy::uniform(&self.tree, Player::Min);
        for (k, &(which, b)) in self.min_base.iter().enumerate() {
            let src = if which == Side::Fixed { Some(&self.fixed_model) } else { free };
            if let Some(src) = src {
                s.set(InfosetId(k as u32), src.get(b)).expect("same action count");
            }
        }
        s
    }

    /// Copies a `Max` strategy of the RNR game to the base game.
    pub fn max_to_base(&self, s: &BehavioralStrategy, base: &GameTree) -> BehavioralStrategy {
        let mut out = BehavioralStrategy::uniform(base, Player::Max);
        for (k, &b) in self.max_base.iter().enumerate() {
            out.set(b, s.get(InfosetId(k as u32))).expect("same action count");
        }
        out
    }

    /// Copies a base-game `Max` strategy to the RNR game.
    pub fn max_from_base(&self, s: &BehavioralStrategy) -> BehavioralStrategy {
        let mut out = BehavioralStrategy::uniform(&self.tree, Player::Max);
        for (k, &b) in self.max_base.iter().enumerate() {
            out.set(InfosetId(k as u32), s.get(b)).expect("same action count");
        }
        out
    }

    /// `Max` infosets of the RNR game that belong to the base infoset `b`.
    pub fn max_infoset(&self, b: InfosetId) -> Option<InfosetId> {
        self.max_base.iter().position(|&x| x == b).map(|k| InfosetId(k as u32))
    }

    /// The problem of solving the whole RNR game with the model frozen.
    pub fn problem(&self) -> Problem<'_> {
        Problem::full(&self.tree).freeze(Player::Min, &self.fixed_mask(), &self.fixed_min())
    }
}

/// A restricted Nash response computed on the whole game.
#[derive(Clone, Debug)]
pub struct RnrSolution {
    pub strategy: BehavioralStrategy,
    pub evaluation: Evaluation,
    pub solve: SolveResult,
}

/// Solves the RNR game of `tree` without any depth limit and returns the `Max` part
/// as a base-game strategy.
pub fn rnr_full(tree: &GameTree, fixed_model: &BehavioralStrategy, p: f64, config: &CfrConfig) -> Result<RnrSolution> {
    let rnr = make_rnr(tree, fixed_model, p)?;
    let r = solve(&rnr.problem(), None, config)?;
    let strategy = rnr.max_to_base(&r.average.max, tree);
    let evaluation = Evaluation::of(tree, &strategy, fixed_model);
    Ok(RnrSolution { strategy, evaluation, solve: r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efg::{expected_utility, StrategyProfile};
    use crate::games;

    #[test]
    fn doubles_the_tree() {
        let t = games::build_kuhn();
        let m = BehavioralStrategy::uniform(&t, Player::Min);
        let r = make_rnr(&t, &m, 0.3).unwrap();
        assert_eq!(r.tree.num_nodes(), 2 * t.num_nodes() + 1);
        assert_eq!(r.tree.num_infosets(Player::Max), t.num_infosets(Player::Max));
        assert_eq!(r.tree.num_infosets(Player::Min), 2 * t.num_infosets(Player::Min));
        for (k, &b) in r.base_node.iter().enumerate().skip(1) {
            let (rn, bn) = (r.tree.node(NodeId(k as u32)), t.node(b));
            if b != t.root() {
                assert_eq!(rn.label, bn.label);
            }
            assert_eq!(rn.utility, bn.utility);
        }
    }

    #[test]
    fn utility_mixes_the_copies() {
        let t = games::build_ce_mp();
        let model = games::ce_mp_model(&t);
        let p = 0.3;
        let r = make_rnr(&t, &model, p).unwrap();
        let max = BehavioralStrategy::from_vecs(&t, Player::Max, vec![vec![0.25, 0.75]]).unwrap();
        let free = BehavioralStrategy::from_vecs(&t, Player::Min, vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let u = expected_utility(&r.tree, &StrategyProfile::new(r.max_from_base(&max), r.min_strategy(&free)));
        let u_fixed = expected_utility(&t, &StrategyProfile::new(max.clone(), model.clone()));
        let u_free = expected_utility(&t, &StrategyProfile::new(max, free));
        assert!((u - (p * u_fixed + (1.0 - p) * u_free)).abs() < 1e-12);
    }

    #[test]
    fn extremes() {
        let t = games::build_ce_mp();
        let model = games::ce_mp_model(&t);
        let config = CfrConfig::iterations(20_000).with_target(1e-9, 100);
        // p = 1: a best response to the model.
        let br = rnr_full(&t, &model, 1.0, &config).unwrap();
        assert!((br.evaluation.model_utility - 10.0 / 3.0).abs() < 1e-3);
        // p = 0: an equilibrium of the base game.
        let ne = rnr_full(&t, &model, 0.0, &config).unwrap();
        assert!(ne.evaluation.exploitability(0.5) < 1e-3, "{:?}", ne.evaluation);
    }

    #[test]
    fn incomplete_model_is_rejected() {
        let t = games::build_kuhn();
        let short = BehavioralStrategy::uniform(&games::build_ce_mp(), Player::Min);
        assert!(matches!(make_rnr(&t, &short, 0.5), Err(Error::IncompleteStrategy(_))));
        let m = BehavioralStrategy::uniform(&t, Player::Min);
        assert!(matches!(make_rnr(&t, &m, 1.5), Err(Error::Parameter(_))));
    }
}
