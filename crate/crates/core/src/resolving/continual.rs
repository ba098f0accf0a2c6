//! Continual depth-limited best response (CDBR) and restricted Nash response
//! (CDRNR).
//!
//! Both drivers walk the partitioning breadth first, covering every branch, and
//! solve one piece per step. A piece is skipped together with everything below it
//! when no history at its start is reachable.
//!
//! Two step modes exist. `Query` solves exactly the depth-limited piece and asks the
//! value function for the values of the public states below it on every CFR pass.
//! `Joint` replaces those queries by solving the piece together with the rest of the
//! game below it, where both players are free. For the optimal value function the
//! two describe the same game: the parts below different border public states are
//! independent, and each is worth its equilibrium value for the ranges entering it.

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::cfr::{scope_nash_conv, solve, CfrConfig, Problem};
use crate::efg::eval::reach;
use crate::efg::{BehavioralStrategy, GameTree, NodeKind, Player, PsId, Scope, StrategyProfile};
use crate::error::{Error, Result};
use crate::valuefn::{ValueFunction, ValueQuery, ValueResult};

use super::exact::solve_exact;
use super::partition::{make_partitioning, Scheme, SubgamePartitioning};
use super::rnr::{make_rnr, RnrGame};
use super::Evaluation;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResolveMode {
    /// Solve each piece together with everything below it.
    Joint,
    /// Solve each piece alone with value-function queries at its borders.
    Query,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSolver {
    /// CFR+ for at most `iterations` iterations. In joint mode the run stops early
    /// once the step's exploitability is at most `target` times the game's utility
    /// range.
    Cfr { iterations: u32, target: Option<f64> },
    /// Exact maximin over the single free `Max` infoset of each step.
    Exact,
}

#[derive(Clone, Copy, Debug)]
pub struct ResolveConfig {
    pub scheme: Scheme,
    pub mode: ResolveMode,
    pub solver: StepSolver,
    /// Seconds since an arbitrary origin, used for the per-step wall time.
    pub clock: Option<fn() -> f64>,
}

impl ResolveConfig {
    pub fn new(scheme: Scheme) -> Self {
        ResolveConfig {
            scheme,
            mode: ResolveMode::Joint,
            solver: StepSolver::Cfr { iterations: 5000, target: Some(1e-5) },
            clock: None,
        }
    }

    pub fn with_mode(mut self, mode: ResolveMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_solver(mut self, solver: StepSolver) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_clock(mut self, clock: fn() -> f64) -> Self {
        self.clock = Some(clock);
        self
    }

    fn now(&self) -> f64 {
        self.clock.map_or(0.0, |c| c())
    }
}

/// Record of one resolve step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub piece: usize,
    /// Key of the piece's first public state.
    pub start: String,
    pub solved_nodes: usize,
    /// `Max` augmented infosets at the roots of the borders inside the subgame.
    pub border_infosets: usize,
    /// `Max` augmented infosets at the roots of the public states where play leaves
    /// the trunk outside the subgame.
    pub leave_infosets: usize,
    /// Regret of the step's solution.
    pub eps_r: f64,
    pub iterations: u32,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug)]
pub struct ResolveOutput {
    /// The assembled `Max` strategy on the base game.
    pub strategy: BehavioralStrategy,
    pub steps: Vec<StepDiagnostics>,
    /// Largest error the value function reported over all queries.
    pub eps_v: f64,
    pub partitioning: SubgamePartitioning,
}

impl ResolveOutput {
    pub fn evaluate(&self, tree: &GameTree, model: &BehavioralStrategy) -> Evaluation {
        Evaluation::of(tree, &self.strategy, model)
    }

    pub fn max_eps_r(&self) -> f64 {
        self.steps.iter().map(|s| s.eps_r).fold(0.0, f64::max)
    }
}

/// Forwards queries and remembers the largest reported error.
struct Recording<'a, 'v> {
    inner: &'a mut (dyn ValueFunction + 'v),
    eps: f64,
}

impl ValueFunction for Recording<'_, '_> {
    fn evaluate(&mut self, tree: &GameTree, query: &ValueQuery) -> Result<ValueResult> {
        let r = self.inner.evaluate(tree, query)?;
        self.eps = self.eps.max(r.epsilon);
        Ok(r)
    }
}

fn has_max_decision(tree: &GameTree, ps: PsId) -> bool {
    tree.public_state(ps).nodes.iter().any(|&n| tree.node(n).kind == NodeKind::Decision(Player::Max))
}

fn max_root_augs(tree: &GameTree, states: &[PsId]) -> usize {
    states.iter().map(|&s| tree.public_state(s).root_aug[0].len()).sum()
}

struct StepResult {
    max: BehavioralStrategy,
    eps_r: f64,
    iterations: u32,
}

/// Runs the configured solver on one step. `keep_best` selects the best `Max`
/// iterate in query mode, which is only meaningful when `Min` is frozen throughout.
fn run_step(
    problem: &Problem,
    config: &ResolveConfig,
    vf: Option<&mut Recording<'_, '_>>,
    keep_best: bool,
) -> Result<StepResult> {
    match config.solver {
        StepSolver::Exact => {
            let mut max = problem.initial.max.clone();
            if let Some(step) = solve_exact(problem)? {
                let probs: Vec<f64> = step.strategy.iter().map(|x| crate::efg::Scalar::to_f64(x)).collect();
                max.set(step.infoset, &probs)?;
            }
            Ok(StepResult { max, eps_r: 0.0, iterations: 0 })
        }
        StepSolver::Cfr { iterations, target } => match config.mode {
            ResolveMode::Joint => {
                let (lo, hi) = problem.tree.utility_range();
                let mut cfr = CfrConfig::iterations(iterations);
                if let Some(t) = target {
                    cfr = cfr.with_target(t * (hi - lo).max(1e-12), 50);
                }
                let r = solve(problem, None, &cfr)?;
                let eps_r = scope_nash_conv(problem, &r.average, None);
                Ok(StepResult { max: r.average.max, eps_r, iterations: r.iterations })
            }
            ResolveMode::Query => {
                let mut cfr = CfrConfig::iterations(iterations);
                if keep_best {
                    cfr = cfr.with_best_iterate();
                }
                let vf = vf.map(|v| v as &mut dyn ValueFunction);
                let r = solve(problem, vf, &cfr)?;
                let max = match r.best_iterate {
                    Some((s, _)) => s,
                    None => r.average.max,
                };
                Ok(StepResult { max, eps_r: r.regret_bound, iterations: r.iterations })
            }
        },
    }
}

/// Continual depth-limited best response to `model`.
///
/// Each step solves one piece with `Min` following the model inside the piece. In
/// query mode `vf` values the public states below the piece; joint mode ignores it.
pub fn cdbr(
    tree: &GameTree,
    model: &BehavioralStrategy,
    config: &ResolveConfig,
    vf: Option<&mut dyn ValueFunction>,
) -> Result<ResolveOutput> {
    model.check_covers(tree)?;
    if config.mode == ResolveMode::Query && vf.is_none() {
        return Err(Error::Config("query mode needs a value function".into()));
    }
    let mut rec = vf.map(|inner| Recording { inner, eps: 0.0 });
    let part = make_partitioning(tree, config.scheme)?;
    let mut out = BehavioralStrategy::uniform(tree, Player::Max);
    let mut steps = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(q) = queue.pop_front() {
        let piece = &part.pieces[q];
        let start = tree.public_state(piece.start);
        let profile = StrategyProfile::new(out.clone(), model.clone());
        let root_reach = start.roots.iter().map(|&r| reach(tree, &profile, r)).collect::<Result<Vec<_>>>()?;
        if !root_reach.iter().any(|r| r[0] > 0.0 && r[1] * r[2] > 0.0) {
            continue;
        }
        queue.extend(piece.children.iter().copied());
        if !piece.members.iter().any(|&m| has_max_decision(tree, m)) {
            continue;
        }
        let t0 = config.now();
        let in_piece = part.mask(&[q]);
        let scope = match config.mode {
            ResolveMode::Joint => Scope::below(tree, piece.start),
            ResolveMode::Query => Scope::build(tree, &start.roots, |ps| in_piece[ps.index()]),
        };
        let min_mask: Vec<bool> =
            tree.infosets(Player::Min).iter().map(|i| in_piece[i.public_state.index()]).collect();
        let problem = Problem::new(tree, scope, root_reach).freeze(Player::Min, &min_mask, model);
        let r = run_step(&problem, config, rec.as_mut(), true)?;
        for info in problem.scope.infosets(Player::Max) {
            if in_piece[tree.infoset(Player::Max, *info).public_state.index()] {
                out.set(*info, r.max.get(*info))?;
            }
        }
        let sets = part.step_sets(q);
        steps.push(StepDiagnostics {
            step: steps.len(),
            piece: q,
            start: start.key.clone(),
            solved_nodes: problem.scope.solved_nodes(),
            border_infosets: max_root_augs(tree, &sets.border),
            leave_infosets: 0,
            eps_r: r.eps_r,
            iterations: r.iterations,
            wall_time_s: config.now() - t0,
        });
    }
    Ok(ResolveOutput { strategy: out, steps, eps_v: rec.map_or(0.0, |r| r.eps), partitioning: part })
}

/// Continual depth-limited restricted Nash response to `model` with probability
/// `p` of the fixed copy.
///
/// Steps run on the RNR game. Step `i` solves the trunk grown by the new piece:
/// `Max` is frozen on earlier pieces, the model is frozen in the fixed copy of the
/// trunk and `Min` is free in the other copy.
pub fn cdrnr(
    tree: &GameTree,
    model: &BehavioralStrategy,
    p: f64,
    config: &ResolveConfig,
    vf: Option<&mut dyn ValueFunction>,
) -> Result<ResolveOutput> {
    let rnr = make_rnr(tree, model, p)?;
    let (strategy, steps, eps_v, partitioning) = cdrnr_on(&rnr, config, vf)?;
    Ok(ResolveOutput { strategy: rnr.max_to_base(&strategy, tree), steps, eps_v, partitioning })
}

type RnrRun = (BehavioralStrategy, Vec<StepDiagnostics>, f64, SubgamePartitioning);

/// CDRNR on an already built RNR game; the strategy is on the RNR game.
pub fn cdrnr_on(rnr: &RnrGame, config: &ResolveConfig, vf: Option<&mut dyn ValueFunction>) -> Result<RnrRun> {
    if config.mode == ResolveMode::Query && vf.is_none() {
        return Err(Error::Config("query mode needs a value function".into()));
    }
    let mut rec = vf.map(|inner| Recording { inner, eps: 0.0 });
    let tree = &rnr.tree;
    let part = make_partitioning(tree, config.scheme)?;
    let fixed_min = rnr.fixed_min();
    let fixed_copy = rnr.fixed_mask();
    let mut out = BehavioralStrategy::uniform(tree, Player::Max);
    let mut emitted = vec![false; tree.num_infosets(Player::Max)];
    let mut steps = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(q) = queue.pop_front() {
        let piece = &part.pieces[q];
        let start = tree.public_state(piece.start);
        let profile = StrategyProfile::new(out.clone(), fixed_min.clone());
        let live = start
            .roots
            .iter()
            .map(|&r| reach(tree, &profile, r))
            .collect::<Result<Vec<_>>>()?
            .iter()
            .any(|r| r[0] > 0.0 && r[2] > 0.0);
        if !live {
            continue;
        }
        queue.extend(piece.children.iter().copied());
        if !piece.members.iter().any(|&m| has_max_decision(tree, m)) {
            continue;
        }
        let t0 = config.now();
        let path = part.path(q);
        let in_trunk = part.mask(&path);
        let scope = match config.mode {
            ResolveMode::Joint => Scope::full(tree),
            ResolveMode::Query => Scope::build(tree, &[tree.root()], |ps| in_trunk[ps.index()]),
        };
        let min_mask: Vec<bool> = tree
            .infosets(Player::Min)
            .iter()
            .zip(&fixed_copy)
            .map(|(i, &f)| f && in_trunk[i.public_state.index()])
            .collect();
        let problem = Problem::new(tree, scope, vec![[1.0, 1.0, 1.0]])
            .freeze(Player::Max, &emitted, &out)
            .freeze(Player::Min, &min_mask, &fixed_min);
        let r = run_step(&problem, config, rec.as_mut(), false)?;
        let in_piece = part.mask(&[q]);
        for (k, info) in tree.infosets(Player::Max).iter().enumerate() {
            if in_piece[info.public_state.index()] {
                let id = crate::efg::InfosetId(k as u32);
                out.set(id, r.max.get(id))?;
                emitted[k] = true;
            }
        }
        let sets = part.step_sets(q);
        steps.push(StepDiagnostics {
            step: steps.len(),
            piece: q,
            start: start.key.clone(),
            solved_nodes: problem.scope.solved_nodes(),
            border_infosets: max_root_augs(tree, &sets.border),
            leave_infosets: max_root_augs(tree, &sets.leave),
            eps_r: r.eps_r,
            iterations: r.iterations,
            wall_time_s: config.now() - t0,
        });
    }
    Ok((out, steps, rec.map_or(0.0, |r| r.eps), part))
}
