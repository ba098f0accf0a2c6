//! Value functions for depth-limited solving.
//!
//! A value function takes a public state and both players' ranges and returns one
//! counterfactual value per augmented infoset of each player at that public state.
//! Ranges are unnormalized own reaches, indexed like
//! [`crate::efg::PublicState::root_aug`]. Values are counterfactual: they are
//! weighted by the opponent's and chance's reach but not by the player's own, and
//! each player's values are in that player's own utility.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::hash::{Hash, Hasher};
use core::str::FromStr;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cfr::{self, CfrConfig, Problem};
use crate::efg::eval::Reach;
use crate::efg::{GameTree, Player, PsId, Scope, Slot};
use crate::error::{Error, Result};

/// Input of a value function.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueQuery {
    pub ps: PsId,
    /// Own reach of each `Max` augmented infoset at the public state.
    pub range_up: Vec<f64>,
    /// Own reach of each `Min` augmented infoset at the public state.
    pub range_down: Vec<f64>,
}

/// Output of a value function.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueResult {
    /// Counterfactual values of `Max`'s augmented infosets (utility to `Max`).
    pub values_up: Vec<f64>,
    /// Counterfactual values of `Min`'s augmented infosets (utility to `Min`).
    pub values_down: Vec<f64>,
    /// Error bound on the returned values: the measured exploitability of the
    /// continuation used to produce them, plus any injected noise.
    pub epsilon: f64,
}

impl ValueResult {
    fn zeros(up: usize, down: usize) -> Self {
        ValueResult { values_up: vec![0.0; up], values_down: vec![0.0; down], epsilon: 0.0 }
    }
}

/// Anything that can evaluate depth-limit public states.
pub trait ValueFunction {
    fn evaluate(&mut self, tree: &GameTree, query: &ValueQuery) -> Result<ValueResult>;
}

/// Value function flavor selected by `vf.kind`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VfKind {
    /// Solve the continuation to the tolerance.
    Optimal,
    /// Run a fixed number of CFR+ iterations on the continuation.
    Limited(u32),
    /// Optimal values plus seeded uniform noise in `[-eps, eps]` per entry.
    Noisy { eps: f64, seed: u64 },
}

impl FromStr for VfKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad value function spec {s:?}"));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["optimal"] => Ok(VfKind::Optimal),
            ["limited", n] => {
                let n: u32 = n.parse().map_err(|_| bad())?;
                if n == 0 {
                    return Err(Error::Parameter("limited value function needs at least one iteration".into()));
                }
                Ok(VfKind::Limited(n))
            }
            ["noisy", eps, seed] => {
                let eps: f64 = eps.parse().map_err(|_| bad())?;
                if !(eps >= 0.0) {
                    return Err(Error::Parameter(format!("noise level must be nonnegative, got {eps}")));
                }
                Ok(VfKind::Noisy { eps, seed: seed.parse().map_err(|_| bad())? })
            }
            _ => Err(bad()),
        }
    }
}

impl core::fmt::Display for VfKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            VfKind::Optimal => f.write_str("optimal"),
            VfKind::Limited(n) => write!(f, "limited:{n}"),
            VfKind::Noisy { eps, seed } => write!(f, "noisy:{eps}:{seed}"),
        }
    }
}

/// Default tolerance of the optimal value function, relative to the utility range.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// Value function that re-solves the continuation below the queried public state
/// with CFR+, with an exact-hit cache.
#[derive(Clone, Debug)]
pub struct SolvingValueFunction {
    pub kind: VfKind,
    /// Target exploitability of the continuation, relative to the utility range.
    pub tolerance: f64,
    /// Iteration cap for the optimal kind.
    pub max_iterations: u32,
    cache: BTreeMap<(u32, Vec<i64>, Vec<i64>), ValueResult>,
    pub queries: u64,
}

impl SolvingValueFunction {
    pub fn new(kind: VfKind) -> Self {
        SolvingValueFunction {
            kind,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: 200_000,
            cache: BTreeMap::new(),
            queries: 0,
        }
    }

    pub fn optimal() -> Self {
        Self::new(VfKind::Optimal)
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    fn compute(&self, tree: &GameTree, q: &ValueQuery) -> Result<ValueResult> {
        let ps = tree.public_state(q.ps);
        let (nu, nd) = (ps.root_aug[0].len(), ps.root_aug[1].len());
        if q.range_up.len() != nu || q.range_down.len() != nd {
            return Err(Error::Parameter(format!(
                "ranges of sizes {}/{} do not match public state {:?} with {}/{} infosets",
                q.range_up.len(),
                q.range_down.len(),
                ps.key,
                nu,
                nd
            )));
        }
        if q.range_up.iter().chain(&q.range_down).any(|&r| !(r >= 0.0)) {
            return Err(Error::Parameter("ranges must be nonnegative".into()));
        }
        let zero_up = q.range_up.iter().all(|&r| r == 0.0);
        let zero_down = q.range_down.iter().all(|&r| r == 0.0);
        if zero_up && zero_down {
            return Ok(ValueResult::zeros(nu, nd));
        }
        // A player without reach has well-defined counterfactual values only for
        // the opponent; solve as if that player reached every infoset.
        let ones_up;
        let ones_down;
        let (up, down) = match (zero_up, zero_down) {
            (true, _) => {
                ones_up = vec![1.0; nu];
                (&ones_up[..], &q.range_down[..])
            }
            (_, true) => {
                ones_down = vec![1.0; nd];
                (&q.range_up[..], &ones_down[..])
            }
            _ => (&q.range_up[..], &q.range_down[..]),
        };
        let mut out = self.solve_values(tree, q.ps, up, down)?;
        if zero_up {
            out.values_down.iter_mut().for_each(|v| *v = 0.0);
        }
        if zero_down {
            out.values_up.iter_mut().for_each(|v| *v = 0.0);
        }
        Ok(out)
    }

    fn solve_values(&self, tree: &GameTree, ps_id: PsId, up: &[f64], down: &[f64]) -> Result<ValueResult> {
        let ps = tree.public_state(ps_id);
        let scope = Scope::below(tree, ps_id);
        let idx = |p: Player, node| -> usize {
            let a = tree.aug_of(node, p).expect("public state roots are inner nodes");
            ps.root_aug[p.index()].binary_search(&a).expect("root augmented infoset")
        };
        let mut roots: Vec<Reach<f64>> = Vec::with_capacity(ps.roots.len());
        let mut total = 0.0;
        for &h in &ps.roots {
            let r = [up[idx(Player::Max, h)], down[idx(Player::Min, h)], tree.chance_reach(h)];
            total += r[0] * r[1] * r[2];
            roots.push(r);
        }
        let (lo, hi) = tree.utility_range();
        let scale = (hi - lo).max(1e-12);
        let mut values_up = vec![0.0; up.len()];
        let mut values_down = vec![0.0; down.len()];
        if total == 0.0 {
            return Ok(ValueResult { values_up, values_down, epsilon: 0.0 });
        }
        // Solve on normalized weights so the tolerance is relative to the state's
        // probability mass, then evaluate with the original reaches.
        let normalized: Vec<Reach<f64>> = roots.iter().map(|r| [r[0], r[1], r[2] / total]).collect();
        let problem = Problem::new(tree, scope, normalized.clone());
        let config = match self.kind {
            VfKind::Limited(n) => CfrConfig::iterations(n),
            _ => CfrConfig::iterations(self.max_iterations).with_target(self.tolerance * scale, 50),
        };
        let solved = cfr::solve(&problem, None, &config)?;
        let nash_conv = cfr::scope_nash_conv(&problem, &solved.average, None);

        let node_values = cfr::scope_values(tree, &problem.scope, &solved.average, None);
        for (k, &h) in ps.roots.iter().enumerate() {
            let r = &roots[k];
            // Roots are the first local nodes of the scope in the same order.
            let v = node_values[k];
            debug_assert_eq!(problem.scope.global(k as u32), h);
            debug_assert!(!matches!(problem.scope.slot(k as u32), Slot::Border));
            values_up[idx(Player::Max, h)] += r[1] * r[2] * v;
            values_down[idx(Player::Min, h)] -= r[0] * r[2] * v;
        }
        Ok(ValueResult { values_up, values_down, epsilon: nash_conv * total })
    }
}

impl ValueFunction for SolvingValueFunction {
    fn evaluate(&mut self, tree: &GameTree, query: &ValueQuery) -> Result<ValueResult> {
        self.queries += 1;
        let key = (query.ps.0, quantize(&query.range_up), quantize(&query.range_down));
        let base = match self.cache.get(&key) {
            Some(hit) => hit.clone(),
            None => {
                let r = self.compute(tree, query)?;
                self.cache.insert(key.clone(), r.clone());
                r
            }
        };
        match self.kind {
            VfKind::Noisy { eps, seed } if eps > 0.0 => {
                let mut hasher = fnv::FnvHasher::default();
                seed.hash(&mut hasher);
                key.hash(&mut hasher);
                let mut rng = ChaCha8Rng::seed_from_u64(hasher.finish());
                let mut noisy = base;
                for v in noisy.values_up.iter_mut().chain(noisy.values_down.iter_mut()) {
                    *v += eps * (2.0 * unit(&mut rng) - 1.0);
                }
                noisy.epsilon += eps;
                Ok(noisy)
            }
            _ => Ok(base),
        }
    }
}

fn quantize(v: &[f64]) -> Vec<i64> {
    v.iter().map(|&x| libm::round(x * 1e12) as i64).collect()
}

/// Uniform draw from `[0, 1]` with 53 bits of resolution.
fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / ((1u64 << 53) - 1) as f64
}

/// Counterfactual values of every root augmented infoset of `ps` under a given
/// profile, by direct traversal.
pub fn counterfactual_values(
    tree: &GameTree,
    ps_id: PsId,
    profile: &crate::efg::StrategyProfile,
    range_up: &[f64],
    range_down: &[f64],
) -> ValueResult {
    let ps = tree.public_state(ps_id);
    let scope = Scope::below(tree, ps_id);
    let vals = cfr::scope_values(tree, &scope, profile, None);
    let mut out = ValueResult::zeros(range_up.len(), range_down.len());
    for (k, &h) in ps.roots.iter().enumerate() {
        let iu = ps.root_aug[0].binary_search(&tree.aug_of(h, Player::Max).unwrap()).unwrap();
        let id = ps.root_aug[1].binary_search(&tree.aug_of(h, Player::Min).unwrap()).unwrap();
        let c = tree.chance_reach(h);
        out.values_up[iu] += range_down[id] * c * vals[k];
        out.values_down[id] -= range_up[iu] * c * vals[k];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games;

    fn unit_query(tree: &GameTree, ps: PsId) -> ValueQuery {
        let p = tree.public_state(ps);
        ValueQuery { ps, range_up: vec![1.0; p.root_aug[0].len()], range_down: vec![1.0; p.root_aug[1].len()] }
    }

    #[test]
    fn root_query_gives_game_value() {
        let t = games::build_kuhn();
        let mut vf = SolvingValueFunction::optimal();
        let q = unit_query(&t, t.node(t.root()).public_state);
        let r = vf.evaluate(&t, &q).unwrap();
        assert_eq!(r.values_up.len(), 1);
        assert!((r.values_up[0] + 1.0 / 18.0).abs() < 1e-5, "{:?}", r);
        assert!((r.values_up[0] + r.values_down[0]).abs() < 1e-12);
    }

    #[test]
    fn ce_coin_values_are_zero_at_equilibrium() {
        let t = games::build_ce_coin();
        let act = t.ps_by_key("act").unwrap();
        let mut vf = SolvingValueFunction::optimal().with_tolerance(1e-9);
        // Min playing RH and GH is an equilibrium: P is worth -3, so Max plays Q.
        let root_aug = &t.public_state(act).root_aug[1];
        let range_down: Vec<f64> = root_aug
            .iter()
            .map(|&a| match t.aug_infosets(Player::Min)[a as usize].key.as_str() {
                "o:RH" | "o:GH" => 1.0,
                _ => 0.0,
            })
            .collect();
        assert_eq!(range_down.iter().sum::<f64>(), 2.0);
        let q = ValueQuery { ps: act, range_up: vec![1.0], range_down };
        let r = vf.evaluate(&t, &q).unwrap();
        for v in r.values_up.iter().chain(&r.values_down) {
            assert!(v.abs() < 1e-6, "{r:?}");
        }
    }

    #[test]
    fn zero_ranges() {
        let t = games::build_ce_mp();
        let ps = t.ps_by_key("mp").unwrap();
        let mut vf = SolvingValueFunction::optimal();
        let r = vf.evaluate(&t, &ValueQuery { ps, range_up: vec![0.0, 0.0], range_down: vec![0.0] }).unwrap();
        assert!(r.values_up.iter().chain(&r.values_down).all(|&v| v == 0.0));
        let r = vf.evaluate(&t, &ValueQuery { ps, range_up: vec![0.0, 0.0], range_down: vec![1.0] }).unwrap();
        assert!(r.values_down.iter().all(|&v| v == 0.0));
        assert!(r.values_up.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn noisy_with_zero_eps_is_optimal() {
        let t = games::build_kuhn();
        let ps = t.ps_by_key("k:c").unwrap();
        let q = unit_query(&t, ps);
        let a = SolvingValueFunction::optimal().evaluate(&t, &q).unwrap();
        let b = SolvingValueFunction::new(VfKind::Noisy { eps: 0.0, seed: 3 }).evaluate(&t, &q).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kinds_parse() {
        assert_eq!("optimal".parse::<VfKind>().unwrap(), VfKind::Optimal);
        assert_eq!("limited:500".parse::<VfKind>().unwrap(), VfKind::Limited(500));
        assert_eq!("noisy:0.01:7".parse::<VfKind>().unwrap(), VfKind::Noisy { eps: 0.01, seed: 7 });
        assert!(matches!("limited:0".parse::<VfKind>(), Err(Error::Parameter(_))));
        assert!(matches!("noisy:-1:2".parse::<VfKind>(), Err(Error::Parameter(_))));
        assert!("fancy".parse::<VfKind>().is_err());
    }
}
