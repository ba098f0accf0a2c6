//! Resolving gadgets and the check that shows why they break under an opponent
//! model.
//!
//! A gadget replaces the trunk above a subgame with a small construction that lets
//! the opponent pick, per root infoset, between entering the subgame and a fallback
//! value. Without a model this keeps resolving safe. In a restricted Nash response
//! the values of `Max`'s infosets inside the part where `Min` is free must equal the
//! values under `Min`'s best response in that whole part; the constructions here
//! get that wrong in both directions, which [`definition1_check`] measures.
//!
//! Gadget trees store chance probabilities normalized, as every chance node must.
//! The reach weights of the roots do not sum to one in general, so terminal
//! utilities below a chance node are scaled by the weight it stands for; the
//! expected utility of the gadget tree is then the reach-weighted objective itself.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::cfr::{solve, CfrConfig, Problem};
use crate::efg::eval::{best_response_in, choice_to_strategy, forward_reaches, unit_reach};
use crate::efg::{
    best_response, build, rationalize, BehavioralStrategy, Domain, GameTree, InfosetId, NodeId, NodeKind, NodeSpec,
    Player, PsId, Scalar, Scope, SpecKind, StrategyProfile, Q,
};
use crate::error::{Error, Result};
use crate::games::{build_ce_coin, build_ce_gadget, ce_gadget_model};
use crate::resolving::{cdrnr, make_rnr, solve_exact, ResolveConfig, RnrGame, Scheme, Side, StepSolver};

/// Public state key of the nodes a gadget adds above the subgame.
pub const GADGET_PUBLIC: &str = "gadget";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GadgetKind {
    /// Chance picks a root history; `Min` follows into the subgame or terminates
    /// for its counterfactual value.
    Resolving,
    /// `Min` picks the root infoset to enter, then chance picks the history. Values
    /// are measured relative to the counterfactual values.
    MaxMargin,
    /// Max-margin with an extra per-infoset offset.
    ReachMaxMargin,
}

impl GadgetKind {
    pub const ALL: [GadgetKind; 3] = [GadgetKind::Resolving, GadgetKind::MaxMargin, GadgetKind::ReachMaxMargin];
}

impl fmt::Display for GadgetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GadgetKind::Resolving => "resolving",
            GadgetKind::MaxMargin => "max_margin",
            GadgetKind::ReachMaxMargin => "reach_max_margin",
        })
    }
}

impl FromStr for GadgetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "resolving" => Ok(GadgetKind::Resolving),
            "max_margin" => Ok(GadgetKind::MaxMargin),
            "reach_max_margin" => Ok(GadgetKind::ReachMaxMargin),
            _ => Err(Error::Parameter(format!("unknown gadget kind {s:?}"))),
        }
    }
}

/// The histories at the start of a public state together with their reach weights.
#[derive(Clone, Debug)]
pub struct Subgame {
    pub public_state: PsId,
    /// Root histories with positive weight, in tree order.
    pub roots: Vec<NodeId>,
    /// Chance and `Max` reach of each root, times the model's reach for fixed roots.
    pub weights: Vec<Q>,
    /// Roots where `Min` follows its fixed model.
    pub fixed: Vec<bool>,
    /// `Min` augmented infosets of the free roots: the gadget entries.
    pub entries: Vec<u32>,
    /// Entry index of each root; `None` for fixed roots.
    pub entry_of: Vec<Option<usize>>,
    /// `Min` infosets of the source tree that follow a fixed strategy.
    pub frozen_min: Vec<bool>,
    /// The fixed `Min` strategy, meaningful on `frozen_min`.
    pub fixed_min: BehavioralStrategy<Q>,
}

impl Subgame {
    /// Subgame of an ordinary game where `Min` is free everywhere. `trunk` supplies
    /// `Max`'s reach of the roots.
    pub fn plain(tree: &GameTree, ps: PsId, trunk: &BehavioralStrategy<Q>) -> Result<Subgame> {
        let frozen = vec![false; tree.num_infosets(Player::Min)];
        let min = BehavioralStrategy::uniform(tree, Player::Min);
        Subgame::new(tree, ps, trunk, |_| false, frozen, min)
    }

    /// Subgame of an RNR game. Roots in the fixed copy enter the gadget directly
    /// with the model's reach; roots in the free copy are the gadget's entries.
    pub fn rnr(rnr: &RnrGame, ps: PsId, trunk: &BehavioralStrategy<Q>) -> Result<Subgame> {
        let fixed_min = rnr.fixed_min().map(|&x| rationalize(x));
        Subgame::new(&rnr.tree, ps, trunk, |n| rnr.side[n.index()] == Side::Fixed, rnr.fixed_mask(), fixed_min)
    }

    fn new(
        tree: &GameTree,
        ps: PsId,
        trunk: &BehavioralStrategy<Q>,
        is_fixed: impl Fn(NodeId) -> bool,
        frozen_min: Vec<bool>,
        fixed_min: BehavioralStrategy<Q>,
    ) -> Result<Subgame> {
        if ps.index() >= tree.public_states().len() {
            return Err(Error::Parameter(format!("public state {} does not exist", ps.0)));
        }
        if trunk.owner != Player::Max {
            return Err(Error::Parameter("the trunk strategy must be a Max strategy".into()));
        }
        let profile = StrategyProfile::new(trunk.clone(), fixed_min.clone());
        let mut sub = Subgame {
            public_state: ps,
            roots: Vec::new(),
            weights: Vec::new(),
            fixed: Vec::new(),
            entries: Vec::new(),
            entry_of: Vec::new(),
            frozen_min,
            fixed_min,
        };
        for &h in &tree.public_state(ps).roots {
            let r = crate::efg::reach(tree, &profile, h)?;
            let fixed = is_fixed(h);
            let w = if fixed { r[0].clone() * r[1].clone() * r[2].clone() } else { r[0].clone() * r[2].clone() };
            if w.is_zero() {
                continue;
            }
            let entry = if fixed {
                None
            } else {
                let aug = tree.aug_of(h, Player::Min).expect("non-terminal root");
                Some(match sub.entries.iter().position(|&a| a == aug) {
                    Some(k) => k,
                    None => {
                        sub.entries.push(aug);
                        sub.entries.len() - 1
                    }
                })
            };
            sub.roots.push(h);
            sub.weights.push(w);
            sub.fixed.push(fixed);
            sub.entry_of.push(entry);
        }
        if sub.roots.is_empty() {
            return Err(Error::Parameter(format!("public state {:?} is unreachable", tree.public_state(ps).key)));
        }
        Ok(sub)
    }

    /// Total weight of the roots that enter entry `e`.
    pub fn entry_weight(&self, e: usize) -> Q {
        self.sum_weights(|k| self.entry_of[k] == Some(e))
    }

    fn sum_weights(&self, pick: impl Fn(usize) -> bool) -> Q {
        (0..self.roots.len()).filter(|&k| pick(k)).fold(Q::zero(), |acc, k| acc + self.weights[k].clone())
    }

    /// Counterfactual value (utility to `Max`) of every entry under `profile`: the
    /// reach-weighted value of its root histories.
    pub fn entry_values(&self, tree: &GameTree, profile: &StrategyProfile<Q>) -> Vec<Q> {
        let values = node_values(tree, profile);
        let mut out = vec![Q::zero(); self.entries.len()];
        for (k, &h) in self.roots.iter().enumerate() {
            if let Some(e) = self.entry_of[k] {
                out[e] = out[e].clone() + self.weights[k].clone() * values[h.index()].clone();
            }
        }
        out
    }
}

/// Expected utility to `Max` below every node.
fn node_values(tree: &GameTree, profile: &StrategyProfile<Q>) -> Vec<Q> {
    let mut v = vec![Q::zero(); tree.num_nodes()];
    for i in (0..tree.num_nodes()).rev() {
        let n = tree.node(NodeId(i as u32));
        v[i] = match n.kind {
            NodeKind::Terminal => rationalize(n.utility),
            NodeKind::Chance => n
                .children()
                .zip(tree.chance_probs(NodeId(i as u32)))
                .fold(Q::zero(), |acc, (c, &p)| acc + rationalize(p) * v[c].clone()),
            NodeKind::Decision(p) => {
                let s = profile.of(p).get(n.infoset().expect("decision"));
                n.children().zip(s).fold(Q::zero(), |acc, (c, x)| acc + x.clone() * v[c].clone())
            }
        };
    }
    v
}

/// A gadget game built over a subgame.
#[derive(Clone, Debug)]
pub struct GadgetGame {
    pub kind: GadgetKind,
    /// Chance weights of the entries rescaled to a distribution.
    pub normalized: bool,
    pub tree: GameTree,
    pub subgame: Subgame,
    /// Counterfactual value (utility to `Max`) of every entry.
    pub cf_values: Vec<Q>,
    /// Extra per-entry offsets of the reach max-margin gadget.
    pub offsets: Vec<Q>,
    /// Source infoset of every `Max` infoset of the gadget.
    pub max_source: Vec<InfosetId>,
    /// Source infoset of every `Min` infoset; `None` for the added ones.
    pub min_source: Vec<Option<InfosetId>>,
    /// Source node each gadget node stands for: copies of subgame nodes map to
    /// their originals and the `Min` follow/terminate node maps to its root.
    pub represents: Vec<Option<NodeId>>,
}

/// Builds a gadget over `subgame` of `source`.
///
/// `cf_values` holds one counterfactual value (utility to `Max`) per entry. A
/// resolving gadget pays `cf / W` at every terminate action, where `W` is the
/// entry's weight. Max-margin gadgets subtract the same amount, plus `offset / W`
/// for the reach variant, from every utility below the entry. `reach_offsets` may
/// be empty, meaning zero offsets, and must be empty for the other kinds.
pub fn build_gadget(
    kind: GadgetKind,
    source: &GameTree,
    subgame: &Subgame,
    cf_values: &[Q],
    reach_offsets: &[Q],
    normalized: bool,
) -> Result<GadgetGame> {
    let n_entries = subgame.entries.len();
    if cf_values.len() != n_entries {
        return Err(Error::Parameter(format!(
            "{} counterfactual values supplied for {} entries",
            cf_values.len(),
            n_entries
        )));
    }
    let offsets: Vec<Q> = match (kind, reach_offsets.len()) {
        (_, 0) => vec![Q::zero(); n_entries],
        (GadgetKind::ReachMaxMargin, n) if n == n_entries => reach_offsets.to_vec(),
        (GadgetKind::ReachMaxMargin, n) => {
            return Err(Error::Parameter(format!("{n} offsets supplied for {n_entries} entries")))
        }
        _ => return Err(Error::Parameter(format!("the {kind} gadget takes no offsets"))),
    };
    let entry_w: Vec<Q> = (0..n_entries).map(|e| subgame.entry_weight(e)).collect();
    let free_w = subgame.sum_weights(|k| !subgame.fixed[k]);
    let fixed_w = subgame.sum_weights(|k| subgame.fixed[k]);
    let total = free_w.clone() + fixed_w.clone();
    // Per-history shift of the entry utilities.
    let shift = |e: usize| -> Q {
        let extra = if kind == GadgetKind::Resolving { Q::zero() } else { offsets[e].clone() };
        (cf_values[e].clone() + extra) / entry_w[e].clone()
    };
    let entry_key = |e: usize| -> String {
        let aug = &source.aug_infosets(Player::Min)[subgame.entries[e] as usize];
        let key = aug.key.strip_prefix("o:").or_else(|| aug.key.strip_prefix("i:")).unwrap_or(&aug.key);
        key.to_string()
    };
    let label = |k: usize| source.history_string(subgame.roots[k]);
    let copy = |k: usize, shift: &Q, scale: &Q| scaled(source.to_spec(subgame.roots[k]), shift, scale);

    let root = match kind {
        GadgetKind::Resolving => {
            let free_scale = if normalized && !free_w.is_zero() { total.clone() / free_w.clone() } else { total.clone() };
            let outcomes = (0..subgame.roots.len())
                .map(|k| {
                    let prob = (subgame.weights[k].clone() / total.clone()).to_f64();
                    let child = match subgame.entry_of[k] {
                        None => copy(k, &Q::zero(), &total),
                        Some(e) => {
                            let t = shift(e);
                            let follow = copy(k, &Q::zero(), &free_scale);
                            let terminate = NodeSpec::terminal((t * free_scale.clone()).to_f64());
                            NodeSpec::decision(
                                Player::Min,
                                format!("{GADGET_PUBLIC}:follow|{}", entry_key(e)),
                                vec![("F".into(), follow), ("T".into(), terminate)],
                            )
                            .public(GADGET_PUBLIC, 0)
                        }
                    };
                    (label(k), prob, child)
                })
                .collect();
            NodeSpec::chance(outcomes).public(GADGET_PUBLIC, 0)
        }
        GadgetKind::MaxMargin | GadgetKind::ReachMaxMargin => {
            let entries = (0..n_entries)
                .map(|e| {
                    let w = &entry_w[e];
                    let local = if normalized { Q::one() } else { w.clone() };
                    let scale = local * total.clone() / free_w.clone();
                    let t = shift(e);
                    let outcomes = (0..subgame.roots.len())
                        .filter(|&k| subgame.entry_of[k] == Some(e))
                        .map(|k| ((label(k)), (subgame.weights[k].clone() / w.clone()).to_f64(), copy(k, &t, &scale)))
                        .collect();
                    (entry_key(e), NodeSpec::chance(outcomes).public(GADGET_PUBLIC, 0).obs(Player::Min, entry_key(e)))
                })
                .collect();
            let pick = NodeSpec::decision(Player::Min, format!("{GADGET_PUBLIC}:entry"), entries).public(GADGET_PUBLIC, 0);
            if fixed_w.is_zero() {
                pick
            } else {
                let pick = (n_entries > 0).then_some(pick);
                let mut outcomes: Vec<(String, f64, NodeSpec)> = (0..subgame.roots.len())
                    .filter(|&k| subgame.fixed[k])
                    .map(|k| (label(k), (subgame.weights[k].clone() / total.clone()).to_f64(), copy(k, &Q::zero(), &total)))
                    .collect();
                if let Some(pick) = pick {
                    outcomes.push(("margin".into(), (free_w.clone() / total.clone()).to_f64(), pick));
                }
                NodeSpec::chance(outcomes).public(GADGET_PUBLIC, 0)
            }
        }
    };
    let tree = build(&format!("{}_{kind}_gadget", source.name), Domain::Other, root)?;

    let max_source = tree
        .infosets(Player::Max)
        .iter()
        .map(|i| source.infoset_by_key(Player::Max, &i.key).expect("copied infoset"))
        .collect();
    let min_source = tree.infosets(Player::Min).iter().map(|i| source.infoset_by_key(Player::Min, &i.key)).collect();
    let represents = match_copies(source, &tree, subgame);
    Ok(GadgetGame {
        kind,
        normalized,
        tree,
        subgame: subgame.clone(),
        cf_values: cf_values.to_vec(),
        offsets,
        max_source,
        min_source,
        represents,
    })
}

/// Rewrites every terminal utility `u` of `spec` to `(u - shift) * scale`.
fn scaled(spec: NodeSpec, shift: &Q, scale: &Q) -> NodeSpec {
    let NodeSpec { kind, public, round, obs } = spec;
    let kind = match kind {
        SpecKind::Terminal { utility } => {
            SpecKind::Terminal { utility: ((rationalize(utility) - shift.clone()) * scale.clone()).to_f64() }
        }
        SpecKind::Chance { outcomes } => SpecKind::Chance {
            outcomes: outcomes.into_iter().map(|(l, p, s)| (l, p, scaled(s, shift, scale))).collect(),
        },
        SpecKind::Decision { player, infoset, actions } => SpecKind::Decision {
            player,
            infoset,
            actions: actions.into_iter().map(|(l, s)| (l, scaled(s, shift, scale))).collect(),
        },
    };
    NodeSpec { kind, public, round, obs }
}

/// Finds the copy of every subgame root in the gadget tree and maps whole copied
/// subtrees back to the source.
fn match_copies(source: &GameTree, gadget: &GameTree, subgame: &Subgame) -> Vec<Option<NodeId>> {
    let mut rep = vec![None; gadget.num_nodes()];
    let mut stack: Vec<(NodeId, NodeId)> = Vec::new();
    // The added nodes all live in the gadget public state; a child outside it is
    // the copy of a root, found by its history label.
    let gps = gadget.ps_by_key(GADGET_PUBLIC).expect("gadget root");
    for (i, n) in gadget.nodes().iter().enumerate() {
        if n.public_state != gps || n.is_terminal() {
            continue;
        }
        for (k, c) in n.children().enumerate() {
            let child = gadget.node(NodeId(c as u32));
            if child.public_state == gps && !child.is_terminal() {
                continue;
            }
            let root = match n.kind {
                NodeKind::Chance => subgame.roots.iter().position(|&h| source.history_string(h) == child.label),
                // The follow action of a resolving gadget.
                NodeKind::Decision(_) if k == 0 => {
                    let parent = gadget.node(NodeId(i as u32)).parent.expect("under the root chance");
                    let label = &gadget.node(NodeId(i as u32)).label;
                    debug_assert!(gadget.node(parent).kind == NodeKind::Chance);
                    let r = subgame.roots.iter().position(|&h| &source.history_string(h) == label);
                    if let Some(r) = r {
                        rep[i] = Some(subgame.roots[r]);
                    }
                    r
                }
                _ => None,
            };
            if let Some(r) = root {
                stack.push((NodeId(c as u32), subgame.roots[r]));
            }
        }
    }
    while let Some((g, s)) = stack.pop() {
        rep[g.index()] = Some(s);
        let (gn, sn) = (gadget.node(g), source.node(s));
        for (gc, sc) in gn.children().zip(sn.children()) {
            stack.push((NodeId(gc as u32), NodeId(sc as u32)));
        }
    }
    rep
}

impl GadgetGame {
    /// `Min` infosets of the gadget that follow the fixed model.
    pub fn frozen_mask(&self) -> Vec<bool> {
        self.min_source.iter().map(|s| s.is_some_and(|i| self.subgame.frozen_min[i.index()])).collect()
    }

    /// The model on the frozen infosets, uniform elsewhere.
    pub fn fixed_min(&self) -> BehavioralStrategy<Q> {
        let mut s = BehavioralStrategy::uniform(&self.tree, Player::Min);
        for (k, src) in self.min_source.iter().enumerate() {
            if let Some(i) = src.filter(|i| self.subgame.frozen_min[i.index()]) {
                s.set(InfosetId(k as u32), self.subgame.fixed_min.get(i)).expect("same action count");
            }
        }
        s
    }

    /// Restricts a source `Max` strategy to the gadget.
    pub fn max_to_gadget<S: Scalar>(&self, source: &BehavioralStrategy<S>) -> BehavioralStrategy<S> {
        let mut s = BehavioralStrategy::uniform(&self.tree, Player::Max);
        for (k, &i) in self.max_source.iter().enumerate() {
            s.set(InfosetId(k as u32), source.get(i)).expect("same action count");
        }
        s
    }

    /// Writes a gadget `Max` strategy into a copy of `base`, a source strategy.
    pub fn max_to_source<S: Scalar>(&self, gadget: &BehavioralStrategy<S>, base: &BehavioralStrategy<S>) -> BehavioralStrategy<S> {
        let mut s = base.clone();
        for (k, &i) in self.max_source.iter().enumerate() {
            s.set(i, gadget.get(InfosetId(k as u32))).expect("same action count");
        }
        s
    }

    /// The problem of solving the gadget with the model frozen.
    pub fn problem(&self) -> Problem<'_> {
        let fixed = self.fixed_min().map(|x| x.to_f64());
        Problem::full(&self.tree).freeze(Player::Min, &self.frozen_mask(), &fixed)
    }

    /// `Min`'s best reply inside the gadget to a source `Max` strategy.
    fn reply(&self, max: &BehavioralStrategy<Q>) -> StrategyProfile<Q> {
        let profile = StrategyProfile::new(self.max_to_gadget(max), self.fixed_min());
        let free: Vec<bool> = self.frozen_mask().iter().map(|f| !f).collect();
        let scope = Scope::full(&self.tree);
        let br = best_response_in(&self.tree, &scope, &[unit_reach()], &profile, Player::Min, Some(&free), None);
        let min = choice_to_strategy(&self.tree, Player::Min, &br.choice, &profile.min);
        profile.with(Player::Min, min)
    }

    /// Solves the gadget for `Max`, returning `base` with the gadget's infosets
    /// replaced.
    pub fn solve(&self, solver: StepSolver, base: &BehavioralStrategy) -> Result<BehavioralStrategy> {
        let problem = self.problem();
        let strategy = match solver {
            StepSolver::Exact => {
                let mut s = BehavioralStrategy::uniform(&self.tree, Player::Max);
                if let Some(step) = solve_exact(&problem)? {
                    let v: Vec<f64> = step.strategy.iter().map(|x| x.to_f64()).collect();
                    s.set(step.infoset, &v)?;
                }
                s
            }
            StepSolver::Cfr { iterations, target } => {
                let mut config = CfrConfig::iterations(iterations);
                if let Some(t) = target {
                    let (lo, hi) = self.tree.utility_range();
                    config = config.with_target(t * (hi - lo).max(f64::MIN_POSITIVE), 50);
                }
                solve(&problem, None, &config)?.average.max
            }
        };
        Ok(self.max_to_source(&strategy, base))
    }
}

/// `Max`'s utility in the gadget when it plays `max` (a source strategy) and `Min`
/// replies optimally inside the gadget.
pub fn deviation_value(gadget: &GadgetGame, max: &BehavioralStrategy<Q>) -> Q {
    let profile = gadget.reply(max);
    crate::efg::expected_utility(&gadget.tree, &profile)
}

/// How the values below a `Max` infoset are estimated.
#[derive(Clone, Copy, Debug)]
pub enum Construction<'a> {
    /// The previously solved trunk is kept, and `Min` is free throughout its copy.
    TrunkKept,
    Gadget(&'a GadgetGame),
}

/// Estimated and true value of the free copy's part of a `Max` infoset.
#[derive(Clone, Debug, PartialEq)]
pub struct Definition1 {
    pub estimate: Q,
    pub reference: Q,
}

impl Definition1 {
    pub fn matches(&self, tolerance: f64) -> bool {
        (self.estimate.clone() - self.reference.clone()).to_f64().abs() <= tolerance
    }

    /// The construction claims `Min` can push the value lower than it can.
    pub fn overestimates_exploitability(&self) -> bool {
        self.estimate < self.reference
    }

    pub fn underestimates_exploitability(&self) -> bool {
        self.estimate > self.reference
    }
}

/// Compares the value of `infoset`'s part in the free copy of `rnr` under a
/// construction with the value when `Min` best-responds in the whole free copy.
///
/// Both are `Σ π(z)·u(z)` over terminals `z` below free-copy histories of
/// `infoset`, with `max` fixed. The reference takes `Min`'s best response over the
/// free copy. A gadget estimate takes `Min`'s optimal reply inside the gadget and
/// counts the terminals below the gadget's stand-ins for those histories.
pub fn definition1_check(
    max: &BehavioralStrategy<Q>,
    rnr: &RnrGame,
    infoset: InfosetId,
    construction: Construction<'_>,
) -> Result<Definition1> {
    let tree = &rnr.tree;
    if infoset.index() >= tree.num_infosets(Player::Max) {
        return Err(Error::Parameter(format!("Max infoset {} does not exist", infoset.0)));
    }
    let in_part = |n: NodeId| rnr.side[n.index()] == Side::Free && tree.node(n).infoset() == Some(infoset)
        && tree.node(n).kind == NodeKind::Decision(Player::Max);

    let fixed = rnr.fixed_min().map(|&x| rationalize(x));
    let frozen = rnr.fixed_mask();
    let base = StrategyProfile::new(max.clone(), fixed);
    let scope = Scope::full(tree);
    let free: Vec<bool> = frozen.iter().map(|f| !f).collect();
    let br = best_response_in(tree, &scope, &[unit_reach()], &base, Player::Min, Some(&free), None);
    let reference_profile = base.with(Player::Min, choice_to_strategy(tree, Player::Min, &br.choice, &base.min));
    let reference = part_value(tree, &reference_profile, |n| in_part(n));

    let estimate = match construction {
        Construction::TrunkKept => {
            let profile = brute_force_reply(tree, &base, &free)?;
            part_value(tree, &profile, |n| in_part(n))
        }
        Construction::Gadget(g) => {
            let profile = g.reply(max);
            part_value(&g.tree, &profile, |n| g.represents[n.index()].is_some_and(|s| in_part(s)))
        }
    };
    Ok(Definition1 { estimate, reference })
}

/// `Σ π(z)·u(z)` over terminals with an ancestor (or self) accepted by `mark`.
fn part_value(tree: &GameTree, profile: &StrategyProfile<Q>, mark: impl Fn(NodeId) -> bool) -> Q {
    let scope = Scope::full(tree);
    let reaches = forward_reaches(tree, &scope, &[unit_reach()], profile);
    let mut inside = vec![false; tree.num_nodes()];
    let mut total = Q::zero();
    for i in 0..tree.num_nodes() {
        let n = tree.node(NodeId(i as u32));
        inside[i] = mark(NodeId(i as u32)) || n.parent.is_some_and(|p| inside[p.index()]);
        if inside[i] && n.is_terminal() {
            let [a, b, c] = reaches[i].clone();
            total = total + a * b * c * rationalize(n.utility);
        }
    }
    total
}

/// `Min`'s best reply found by enumerating its pure strategies on the `free`
/// infosets; the first minimizer in enumeration order wins.
fn brute_force_reply(tree: &GameTree, base: &StrategyProfile<Q>, free: &[bool]) -> Result<StrategyProfile<Q>> {
    use crate::resolving::MAX_PURE_STRATEGIES;
    let infos: Vec<InfosetId> = (0..free.len()).filter(|&i| free[i]).map(|i| InfosetId(i as u32)).collect();
    let sizes: Vec<usize> = infos.iter().map(|&i| tree.infoset(Player::Min, i).num_actions()).collect();
    let count = sizes.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n)).filter(|&c| c <= MAX_PURE_STRATEGIES);
    let Some(count) = count else {
        return Err(Error::ExactUnsupported(format!("too many Min pure strategies ({} infosets)", infos.len())));
    };
    let mut profile = base.clone();
    let mut best: Option<(Q, StrategyProfile<Q>)> = None;
    let mut choice = vec![0usize; infos.len()];
    for _ in 0..count {
        for (k, &i) in infos.iter().enumerate() {
            let v: Vec<Q> = (0..sizes[k]).map(|a| if a == choice[k] { Q::one() } else { Q::zero() }).collect();
            profile.min.set(i, &v)?;
        }
        let u = crate::efg::expected_utility(tree, &profile);
        if best.as_ref().is_none_or(|(b, _)| u < *b) {
            best = Some((u, profile.clone()));
        }
        for k in 0..choice.len() {
            choice[k] += 1;
            if choice[k] < sizes[k] {
                break;
            }
            choice[k] = 0;
        }
    }
    Ok(best.expect("at least one pure strategy").1)
}

/// The coin counterexample with `Min` free everywhere: `Max` deviates to its first
/// action at `act`, and gadgets cover the subgame at `act` with zero values.
#[derive(Clone, Debug)]
pub struct CoinSetup {
    pub rnr: RnrGame,
    /// `Max` plays the first action at `act`.
    pub deviation: BehavioralStrategy<Q>,
    pub act: InfosetId,
    pub subgame: Subgame,
}

pub fn coin_setup() -> Result<CoinSetup> {
    let base = build_ce_coin();
    let model = BehavioralStrategy::uniform(&base, Player::Min);
    let rnr = make_rnr(&base, &model, 0.0)?;
    let missing = || Error::Structure("coin game has no `act` infoset".into());
    let act = rnr.tree.infoset_by_key(Player::Max, "act").ok_or_else(missing)?;
    let ps = rnr.tree.ps_by_key("act").ok_or_else(missing)?;
    let mut deviation = BehavioralStrategy::<Q>::uniform(&rnr.tree, Player::Max);
    deviation.set(act, &[Q::one(), Q::zero()])?;
    let trunk = BehavioralStrategy::<Q>::uniform(&rnr.tree, Player::Max);
    let subgame = Subgame::rnr(&rnr, ps, &trunk)?;
    Ok(CoinSetup { rnr, deviation, act, subgame })
}

impl CoinSetup {
    pub fn gadget(&self, kind: GadgetKind, normalized: bool) -> Result<GadgetGame> {
        let zeros = vec![Q::zero(); self.subgame.entries.len()];
        build_gadget(kind, &self.rnr.tree, &self.subgame, &zeros, &[], normalized)
    }

    /// Value of `Min`'s best reply to the deviation inside the gadget.
    pub fn deviation_value(&self, kind: GadgetKind, normalized: bool) -> Result<Q> {
        Ok(deviation_value(&self.gadget(kind, normalized)?, &self.deviation))
    }

    /// Definition 1 comparison at `act` for the trunk-kept construction
    /// (`None`) or a gadget.
    pub fn definition1(&self, kind: Option<GadgetKind>) -> Result<Definition1> {
        match kind {
            None => definition1_check(&self.deviation, &self.rnr, self.act, Construction::TrunkKept),
            Some(k) => {
                let g = self.gadget(k, false)?;
                definition1_check(&self.deviation, &self.rnr, self.act, Construction::Gadget(&g))
            }
        }
    }
}

/// One row of an action sweep: resolved probabilities of `a`, `b` and `c`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub p: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl SweepRow {
    /// The action played with probability above 0.99, if any.
    pub fn pure(&self) -> Option<char> {
        [('a', self.a), ('b', self.b), ('c', self.c)].into_iter().find(|&(_, x)| x > 0.99).map(|(l, _)| l)
    }

    /// The pure action, or `mixed`.
    pub fn describe(&self) -> String {
        match self.pure() {
            Some(l) => l.to_string(),
            None => "mixed".into(),
        }
    }
}

fn sweep_row(tree: &GameTree, strategy: &BehavioralStrategy, p: f64) -> SweepRow {
    let info = tree.infoset_by_key(Player::Max, "act").expect("act infoset");
    let labels = &tree.infoset(Player::Max, info).actions;
    let prob = |l: &str| strategy.get(info)[labels.iter().position(|a| a == l).expect("action")];
    SweepRow { p, a: prob("a"), b: prob("b"), c: prob("c") }
}

/// Resolves `Max`'s infoset of the gadget counterexample with a gadget for every
/// `p` of the grid.
///
/// The trunk above `Max`'s public state holds only `Min`'s first move. It is
/// solved with the optimal value function, so the counterfactual values given to
/// the gadget are those of the game's equilibrium and are all zero. Each gadget is
/// solved exactly.
pub fn gadget_action_sweep(kind: GadgetKind, p_grid: &[f64], normalized: bool) -> Result<Vec<SweepRow>> {
    let base = build_ce_gadget();
    let model = ce_gadget_model(&base);
    let ne_max = solve_exact(&Problem::full(&base))?
        .map(|step| {
            let mut s = BehavioralStrategy::uniform(&base, Player::Max);
            let v: Vec<f64> = step.strategy.iter().map(|x| x.to_f64()).collect();
            s.set(step.infoset, &v).map(|_| s)
        })
        .transpose()?
        .expect("Max acts in the gadget game");
    let (ne_min, _) = best_response(&base, &ne_max, Player::Min);
    p_grid
        .iter()
        .map(|&p| {
            let rnr = make_rnr(&base, &model, p)?;
            let ps = rnr.tree.ps_by_key("act").expect("act public state");
            let trunk_max = rnr.max_from_base(&ne_max);
            let trunk_q = trunk_max.map(|&x| rationalize(x));
            let sub = Subgame::rnr(&rnr, ps, &trunk_q)?;
            let profile = StrategyProfile::new(trunk_q, rnr.min_strategy(&ne_min).map(|&x| rationalize(x)));
            let cf = sub.entry_values(&rnr.tree, &profile);
            let gadget = build_gadget(kind, &rnr.tree, &sub, &cf, &[], normalized)?;
            let resolved = gadget.solve(StepSolver::Exact, &trunk_max)?;
            Ok(sweep_row(&rnr.tree, &resolved, p))
        })
        .collect()
}

/// The same sweep with the trunk kept: exact CDRNR by rounds.
pub fn trunk_kept_action_sweep(p_grid: &[f64]) -> Result<Vec<SweepRow>> {
    let base = build_ce_gadget();
    let model = ce_gadget_model(&base);
    let config = ResolveConfig::new(Scheme::ByRound).with_solver(StepSolver::Exact);
    p_grid
        .iter()
        .map(|&p| {
            let out = cdrnr(&base, &model, p, &config, None)?;
            Ok(sweep_row(&base, &out.strategy, p))
        })
        .collect()
}

/// `n` evenly spaced points from 0 to 1.
pub fn unit_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|k| k as f64 / (n - 1) as f64).collect(),
    }
}
