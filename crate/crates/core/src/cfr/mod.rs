//! CFR+ for whole games and for depth-limited pieces of games.
//!
//! The solver works on a [`Problem`]: a [`Scope`] of the tree with fixed reaches at
//! its roots and, per player, a mask of frozen infosets whose strategy never
//! changes. Border histories of the scope are evaluated with a value function that
//! is queried with the current iterate's ranges on every pass.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::efg::eval::{best_response_in, Reach};
use crate::efg::{BehavioralStrategy, GameTree, InfosetId, Player, Scope, Slot, StrategyProfile};
use crate::error::{Error, Result};
use crate::valuefn::{ValueFunction, ValueQuery};

mod bounds;

pub use bounds::{best_iterate_trunk_br, lemma1_bound, lemma1_bound_main_text, trunk_br_oracle, TrunkBr};

/// A game or game piece to solve.
#[derive(Clone, Debug)]
pub struct Problem<'t> {
    pub tree: &'t GameTree,
    pub scope: Scope,
    /// Reaches `[max, min, chance]` at the scope roots.
    pub root_reach: Vec<Reach<f64>>,
    /// Per player, per tree infoset: `true` when the strategy is fixed.
    pub frozen: [Vec<bool>; 2],
    /// Starting profile. Frozen infosets keep these probabilities and infosets
    /// outside the scope are copied to the result unchanged.
    pub initial: StrategyProfile,
}

impl<'t> Problem<'t> {
    pub fn new(tree: &'t GameTree, scope: Scope, root_reach: Vec<Reach<f64>>) -> Self {
        assert_eq!(root_reach.len(), scope.num_roots());
        Problem {
            tree,
            scope,
            root_reach,
            frozen: [vec![false; tree.num_infosets(Player::Max)], vec![false; tree.num_infosets(Player::Min)]],
            initial: StrategyProfile::uniform(tree),
        }
    }

    /// The whole game from the root.
    pub fn full(tree: &'t GameTree) -> Self {
        Problem::new(tree, Scope::full(tree), vec![[1.0, 1.0, 1.0]])
    }

    /// Fixes `player`'s strategy to `fixed` on every infoset where `mask` is set.
    pub fn freeze(mut self, player: Player, mask: &[bool], fixed: &BehavioralStrategy) -> Self {
        assert_eq!(fixed.owner, player);
        let i = player.index();
        for (k, &m) in mask.iter().enumerate() {
            if m {
                self.frozen[i][k] = true;
                let info = InfosetId(k as u32);
                self.initial.of_mut(player).set(info, fixed.get(info)).expect("valid fixed strategy");
            }
        }
        self
    }

    /// Fixes every infoset of `player`.
    pub fn freeze_all(self, player: Player, fixed: &BehavioralStrategy) -> Self {
        let mask = vec![true; self.tree.num_infosets(player)];
        self.freeze(player, &mask, fixed)
    }

    pub fn free_mask(&self, player: Player) -> Vec<bool> {
        self.frozen[player.index()].iter().map(|f| !f).collect()
    }

    /// Infosets of `player` inside the scope that the solver updates.
    pub fn free_infosets(&self, player: Player) -> impl Iterator<Item = InfosetId> + '_ {
        self.scope
            .infosets(player)
            .iter()
            .copied()
            .filter(move |i| !self.frozen[player.index()][i.index()])
    }
}

/// Solver settings.
#[derive(Clone, Debug, PartialEq)]
pub struct CfrConfig {
    pub iterations: u32,
    /// Keep the `Max` iterate with the highest utility.
    pub track_best_iterate: bool,
    /// Write an iteration log row every this many iterations (0 disables the log).
    pub log_every: u32,
    /// Stop once the average profile's exploitability within the scope is at most
    /// this value.
    pub target: Option<f64>,
    /// How often the target is checked.
    pub check_every: u32,
}

impl CfrConfig {
    pub fn iterations(iterations: u32) -> Self {
        CfrConfig { iterations, track_best_iterate: false, log_every: 0, target: None, check_every: 0 }
    }

    pub fn with_target(mut self, target: f64, check_every: u32) -> Self {
        self.target = Some(target);
        self.check_every = check_every.max(1);
        self
    }

    pub fn with_best_iterate(mut self) -> Self {
        self.track_best_iterate = true;
        self
    }

    pub fn with_log(mut self, every: u32) -> Self {
        self.log_every = every;
        self
    }
}

/// One row of the iteration log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogRow {
    pub iter: u32,
    /// Exploitability of the average profile inside the scope when the scope has no
    /// borders, otherwise the regret bound.
    pub expl_estimate: f64,
    /// Best `Max` iterate utility so far (NaN when not tracked).
    pub best_iterate_utility: f64,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub average: StrategyProfile,
    /// Best `Max` iterate and its utility, when tracked.
    pub best_iterate: Option<(BehavioralStrategy, f64)>,
    pub iterations: u32,
    /// Sum over both players' free infosets of the largest clipped regret, divided
    /// by the iteration count.
    pub regret_bound: f64,
    /// Last measured exploitability of the average profile, when checked.
    pub nash_conv: Option<f64>,
    pub log: Vec<LogRow>,
}

/// Runs CFR+ with alternating updates (`Max` first), regret matching+ from a
/// uniform start, and linear averaging.
pub fn solve(problem: &Problem, mut vf: Option<&mut dyn ValueFunction>, config: &CfrConfig) -> Result<SolveResult> {
    let has_borders = !problem.scope.borders().is_empty();
    if has_borders && vf.is_none() {
        return Err(Error::Config(format!(
            "scope has {} border public states but no value function",
            problem.scope.borders().len()
        )));
    }
    let mut e = Engine::new(problem);
    let mut best: Option<(BehavioralStrategy, f64)> = None;
    let mut log = Vec::new();
    let mut nash_conv = None;
    let free = [
        problem.free_infosets(Player::Max).next().is_some(),
        problem.free_infosets(Player::Min).next().is_some(),
    ];
    let mut t = 0;
    while t < config.iterations {
        t += 1;
        for p in Player::BOTH {
            let tracking = p == Player::Max && config.track_best_iterate;
            if !free[p.index()] && !tracking {
                continue;
            }
            // The utility is measured before the update, so it belongs to the
            // iterate as it was when the pass started.
            let before = tracking.then(|| e.current.max.clone());
            let u = e.pass(p, t, vf.as_deref_mut(), free[p.index()])?;
            if let Some(s) = before {
                if best.as_ref().is_none_or(|b| u > b.1) {
                    best = Some((s, u));
                }
            }
        }
        let check = config.check_every > 0 && t % config.check_every == 0;
        let logged = config.log_every > 0 && (t % config.log_every == 0 || t == config.iterations);
        if check || logged {
            let est = if has_borders {
                e.regret_bound(t)
            } else {
                let nc = scope_nash_conv(problem, &e.average(), None);
                nash_conv = Some(nc);
                nc
            };
            if logged {
                log.push(LogRow {
                    iter: t,
                    expl_estimate: est,
                    best_iterate_utility: best.as_ref().map_or(f64::NAN, |b| b.1),
                });
            }
            if check && !has_borders && config.target.is_some_and(|target| est <= target) {
                break;
            }
        }
    }
    Ok(SolveResult {
        average: e.average(),
        best_iterate: best,
        iterations: t,
        regret_bound: e.regret_bound(t.max(1)),
        nash_conv,
        log,
    })
}

/// Solves a whole game to the given exploitability and returns the average profile
/// and the game value to `Max`.
pub fn solve_game(tree: &GameTree, tolerance: f64, max_iterations: u32) -> Result<(StrategyProfile, f64)> {
    let problem = Problem::full(tree);
    let r = solve(&problem, None, &CfrConfig::iterations(max_iterations).with_target(tolerance, 100))?;
    let v = crate::efg::expected_utility(tree, &r.average);
    Ok((r.average, v))
}

/// Utility to `Max` of `profile` over the problem's scope, with border histories
/// valued by `vf` at the profile's ranges.
pub fn scope_utility(problem: &Problem, profile: &StrategyProfile, vf: Option<&mut (dyn ValueFunction + '_)>) -> Result<f64> {
    if !problem.scope.borders().is_empty() && vf.is_none() {
        return Err(Error::Config("scope has border public states but no value function".into()));
    }
    let mut e = Engine::new(problem);
    e.current = profile.clone();
    e.pass(Player::Max, 1, vf, false)
}

/// Node values (utility to `Max`) of every local node of `scope` under `profile`;
/// border histories take `leaf`.
pub fn scope_values(tree: &GameTree, scope: &Scope, profile: &StrategyProfile, leaf: Option<&[f64]>) -> Vec<f64> {
    let mut val = vec![0.0; scope.len()];
    backward(tree, scope, profile, leaf.unwrap_or(&[]), &mut val);
    val
}

fn backward(tree: &GameTree, scope: &Scope, profile: &StrategyProfile, leaf: &[f64], val: &mut [f64]) {
    for l in (0..scope.len() as u32).rev() {
        let g = scope.global(l);
        val[l as usize] = match scope.slot(l) {
            Slot::Terminal => tree.node(g).utility,
            Slot::Border => leaf[l as usize],
            Slot::Chance => {
                let probs = tree.chance_probs(g);
                scope.children(l).zip(probs).map(|(c, p)| p * val[c as usize]).sum()
            }
            Slot::Decision(p) => {
                let s = profile.of(p).get(InfosetId(tree.node(g).infoset));
                scope.children(l).zip(s).map(|(c, q)| q * val[c as usize]).sum()
            }
        };
    }
}

fn forward(tree: &GameTree, scope: &Scope, root_reach: &[Reach<f64>], profile: &StrategyProfile, out: &mut [Reach<f64>]) {
    out[..root_reach.len()].copy_from_slice(root_reach);
    for l in 0..scope.len() as u32 {
        let g = scope.global(l);
        let r = out[l as usize];
        match scope.slot(l) {
            Slot::Chance => {
                for (c, p) in scope.children(l).zip(tree.chance_probs(g)) {
                    out[c as usize] = [r[0], r[1], r[2] * p];
                }
            }
            Slot::Decision(p) => {
                let i = p.index();
                let s = profile.of(p).get(InfosetId(tree.node(g).infoset));
                for (c, q) in scope.children(l).zip(s) {
                    let mut x = r;
                    x[i] *= q;
                    out[c as usize] = x;
                }
            }
            Slot::Terminal | Slot::Border => {}
        }
    }
}

/// Exploitability of `profile` inside the problem's scope: the sum of both players'
/// best-response improvements, where best responses may only change free infosets.
pub fn scope_nash_conv(problem: &Problem, profile: &StrategyProfile, leaf: Option<&[f64]>) -> f64 {
    let tree = problem.tree;
    let u = {
        let mut reach = vec![[0.0; 3]; problem.scope.len()];
        forward(tree, &problem.scope, &problem.root_reach, profile, &mut reach);
        let vals = scope_values(tree, &problem.scope, profile, leaf);
        problem
            .root_reach
            .iter()
            .enumerate()
            .map(|(k, r)| r[0] * r[1] * r[2] * vals[k])
            .sum::<f64>()
    };
    let mut total = 0.0;
    for p in Player::BOTH {
        let mask = problem.free_mask(p);
        let br = best_response_in(tree, &problem.scope, &problem.root_reach, profile, p, Some(&mask), leaf);
        total += br.value - p.sign() * u;
    }
    total.max(0.0)
}

/// Per-border data for value-function queries: for each border node, its index
/// in the public state's `root_aug` lists.
struct BorderMap {
    nodes: Vec<(u32, usize, usize)>,
    sizes: [usize; 2],
}

struct Engine<'p, 't> {
    pb: &'p Problem<'t>,
    current: StrategyProfile,
    regrets: [Vec<f64>; 2],
    avg: [Vec<f64>; 2],
    reach: Vec<Reach<f64>>,
    val: Vec<f64>,
    leaf: Vec<f64>,
    inst: Vec<f64>,
    borders: Vec<BorderMap>,
    /// Local nodes of every infoset, per player.
    members: [Vec<Vec<u32>>; 2],
}

impl<'p, 't> Engine<'p, 't> {
    fn new(pb: &'p Problem<'t>) -> Self {
        let tree = pb.tree;
        let n = pb.scope.len();
        let borders = pb
            .scope
            .borders()
            .iter()
            .map(|b| {
                let ps = tree.public_state(b.ps);
                let nodes = b
                    .nodes
                    .iter()
                    .map(|&l| {
                        let g = pb.scope.global(l);
                        let k = |p: Player| {
                            let a = tree.aug_of(g, p).expect("border nodes are inner nodes");
                            ps.root_aug[p.index()].binary_search(&a).expect("border node is a root")
                        };
                        (l, k(Player::Max), k(Player::Min))
                    })
                    .collect();
                BorderMap { nodes, sizes: [ps.root_aug[0].len(), ps.root_aug[1].len()] }
            })
            .collect();
        let mut members = [vec![Vec::new(); tree.num_infosets(Player::Max)], vec![Vec::new(); tree.num_infosets(Player::Min)]];
        for l in 0..n as u32 {
            if let Slot::Decision(p) = pb.scope.slot(l) {
                members[p.index()][tree.node(pb.scope.global(l)).infoset as usize].push(l);
            }
        }
        let mut current = pb.initial.clone();
        // Free infosets in the scope start uniform.
        for p in Player::BOTH {
            for info in pb.free_infosets(p) {
                let na = tree.infoset(p, info).num_actions();
                let u = vec![1.0 / na as f64; na];
                current.of_mut(p).set(info, &u).expect("uniform");
            }
        }
        Engine {
            pb,
            current,
            regrets: [vec![0.0; tree.num_actions(Player::Max)], vec![0.0; tree.num_actions(Player::Min)]],
            avg: [vec![0.0; tree.num_actions(Player::Max)], vec![0.0; tree.num_actions(Player::Min)]],
            reach: vec![[0.0; 3]; n],
            val: vec![0.0; n],
            leaf: vec![0.0; n],
            inst: vec![0.0; tree.max_actions()],
            borders,
            members,
        }
    }

    /// One pass for player `p`: evaluates the current profile and, if `update`,
    /// accumulates regrets and the average and moves to the next iterate. Returns
    /// the current profile's utility to `Max` over the scope.
    fn pass(&mut self, p: Player, t: u32, vf: Option<&mut (dyn ValueFunction + '_)>, update: bool) -> Result<f64> {
        let tree = self.pb.tree;
        let scope = &self.pb.scope;
        forward(tree, scope, &self.pb.root_reach, &self.current, &mut self.reach);
        if let Some(vf) = vf {
            self.fill_leaves(p, vf)?;
        }
        backward(tree, scope, &self.current, &self.leaf, &mut self.val);
        let utility: f64 = self
            .pb
            .root_reach
            .iter()
            .enumerate()
            .map(|(k, r)| r[0] * r[1] * r[2] * self.val[k])
            .sum();
        if !update {
            return Ok(utility);
        }

        let i = p.index();
        let sign = p.sign();
        let weight = t as f64;
        for info in self.pb.free_infosets(p) {
            let infoset = tree.infoset(p, info);
            let off = infoset.action_offset as usize;
            let na = infoset.num_actions();
            let inst = &mut self.inst[..na];
            inst.iter_mut().for_each(|x| *x = 0.0);
            let mut own = 0.0;
            for &l in &self.members[i][info.index()] {
                let r = self.reach[l as usize];
                own = r[i];
                let opp = r[1 - i] * r[2];
                if opp == 0.0 {
                    continue;
                }
                let v = self.val[l as usize];
                for (a, c) in scope.children(l).enumerate() {
                    inst[a] += opp * sign * (self.val[c as usize] - v);
                }
            }
            let cur = self.current.of(p).get(info);
            let reg = &mut self.regrets[i][off..off + na];
            let avg = &mut self.avg[i][off..off + na];
            for a in 0..na {
                avg[a] += weight * own * cur[a];
                reg[a] = (reg[a] + inst[a]).max(0.0);
            }
            let total: f64 = reg.iter().sum();
            let next: Vec<f64> = if total > 0.0 {
                reg.iter().map(|r| r / total).collect()
            } else {
                vec![1.0 / na as f64; na]
            };
            self.current.of_mut(p).flat_mut()[off..off + na].copy_from_slice(&next);
        }
        Ok(utility)
    }

    /// Queries the value function at every border public state and converts the
    /// counterfactual values of `p`'s augmented infosets into per-history leaf
    /// utilities: the value divided by the infoset's opponent-and-chance reach.
    fn fill_leaves(&mut self, p: Player, vf: &mut dyn ValueFunction) -> Result<()> {
        let tree = self.pb.tree;
        let i = p.index();
        for (b, map) in self.pb.scope.borders().iter().zip(&self.borders) {
            let mut range_up = vec![0.0; map.sizes[0]];
            let mut range_down = vec![0.0; map.sizes[1]];
            let mut den = vec![0.0; map.sizes[i]];
            for &(l, ku, kd) in &map.nodes {
                let r = self.reach[l as usize];
                range_up[ku] = r[0];
                range_down[kd] = r[1];
                den[if i == 0 { ku } else { kd }] += r[1 - i] * r[2];
            }
            let res = vf.evaluate(tree, &ValueQuery { ps: b.ps, range_up, range_down })?;
            let values = if i == 0 { &res.values_up } else { &res.values_down };
            for &(l, ku, kd) in &map.nodes {
                let k = if i == 0 { ku } else { kd };
                self.leaf[l as usize] = if den[k] > 0.0 { p.sign() * values[k] / den[k] } else { 0.0 };
            }
        }
        Ok(())
    }

    fn regret_bound(&self, t: u32) -> f64 {
        let mut total = 0.0;
        for p in Player::BOTH {
            for info in self.pb.free_infosets(p) {
                let infoset = self.pb.tree.infoset(p, info);
                let off = infoset.action_offset as usize;
                let m = self.regrets[p.index()][off..off + infoset.num_actions()]
                    .iter()
                    .fold(0.0f64, |a, &b| a.max(b));
                total += m;
            }
        }
        total / t as f64
    }

    fn average(&self) -> StrategyProfile {
        let mut out = self.current.clone();
        for p in Player::BOTH {
            for info in self.pb.free_infosets(p) {
                let infoset = self.pb.tree.infoset(p, info);
                let off = infoset.action_offset as usize;
                let na = infoset.num_actions();
                let a = &self.avg[p.index()][off..off + na];
                let total: f64 = a.iter().sum();
                let v: Vec<f64> = if total > 0.0 {
                    a.iter().map(|x| x / total).collect()
                } else {
                    vec![1.0 / na as f64; na]
                };
                out.of_mut(p).flat_mut()[off..off + na].copy_from_slice(&v);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efg::{exploitability, nash_conv};
    use crate::games;

    #[test]
    fn kuhn_converges() {
        let t = games::build_kuhn();
        let r = solve(&Problem::full(&t), None, &CfrConfig::iterations(10_000)).unwrap();
        let nc = nash_conv(&t, &r.average);
        assert!(nc <= 1e-3, "nash conv {nc}");
        let v = crate::efg::expected_utility(&t, &r.average);
        assert!((v + 1.0 / 18.0).abs() < 1e-3);
        assert!(exploitability(&t, &r.average.max, -1.0 / 18.0) <= 1e-3);
    }

    #[test]
    fn kuhn_game_value() {
        let t = games::build_kuhn();
        let (_, v) = solve_game(&t, 1e-7, 200_000).unwrap();
        assert!((v + 1.0 / 18.0).abs() < 1e-6, "value {v}");
    }

    #[test]
    fn ce_mp_uniform_equilibrium() {
        let t = games::build_ce_mp();
        let r = solve(&Problem::full(&t), None, &CfrConfig::iterations(10_000)).unwrap();
        let s = r.average.max.get(InfosetId(0));
        assert!((s[0] - 0.5).abs() < 1e-2, "{s:?}");
    }

    #[test]
    fn single_action() {
        let t = games::single_action_game(1.5);
        let r = solve(&Problem::full(&t), None, &CfrConfig::iterations(1)).unwrap();
        assert_eq!(r.average.max.get(InfosetId(0)), &[1.0]);
    }

    #[test]
    fn frozen_infosets_keep_their_strategy() {
        let t = games::build_ce_mp();
        let model = games::ce_mp_model(&t);
        let pb = Problem::full(&t).freeze_all(Player::Min, &model);
        let r = solve(&pb, None, &CfrConfig::iterations(2000).with_best_iterate()).unwrap();
        assert_eq!(r.average.min, model);
        let (best, u) = r.best_iterate.unwrap();
        assert!((u - 10.0 / 3.0).abs() < 1e-9);
        assert_eq!(best.get(InfosetId(0)), &[0.0, 1.0]);
    }

    #[test]
    fn missing_value_function_is_a_config_error() {
        let t = games::build_leduc();
        let root_ps = t.node(t.root()).public_state;
        let scope = Scope::build(&t, &[t.root()], |ps| t.public_state(ps).round == 0);
        let _ = root_ps;
        let pb = Problem::new(&t, scope, vec![[1.0; 3]]);
        assert!(matches!(solve(&pb, None, &CfrConfig::iterations(1)), Err(Error::Config(_))));
    }

    #[test]
    fn deterministic() {
        let t = games::build_kuhn();
        let a = solve(&Problem::full(&t), None, &CfrConfig::iterations(300)).unwrap();
        let b = solve(&Problem::full(&t), None, &CfrConfig::iterations(300)).unwrap();
        assert_eq!(a.average, b.average);
    }
}
