//! Best-iterate trunk responses and the bound on their suboptimality.

use alloc::format;
use alloc::vec::Vec;

use super::{scope_utility, solve, CfrConfig, LogRow, Problem};
use crate::efg::{BehavioralStrategy, InfosetId, Player};
use crate::error::{Error, Result};
use crate::valuefn::ValueFunction;

/// Result of a best-iterate trunk response.
#[derive(Clone, Debug)]
pub struct TrunkBr {
    pub strategy: BehavioralStrategy,
    /// Trunk utility of `strategy` with border values from the value function.
    pub utility: f64,
    pub log: Vec<LogRow>,
}

/// Runs `iterations` of CFR+ for `Max` on a trunk where `Min` is frozen everywhere
/// and returns the iterate with the highest trunk utility.
pub fn best_iterate_trunk_br(problem: &Problem, vf: Option<&mut dyn ValueFunction>, iterations: u32) -> Result<TrunkBr> {
    if problem.free_infosets(Player::Min).next().is_some() {
        return Err(Error::Parameter("the opponent must be frozen on the whole trunk".into()));
    }
    if iterations == 0 {
        return Err(Error::Parameter("at least one iteration is needed".into()));
    }
    let config = CfrConfig::iterations(iterations).with_best_iterate().with_log(1);
    let r = solve(problem, vf, &config)?;
    let (strategy, utility) = r.best_iterate.expect("tracked");
    Ok(TrunkBr { strategy, utility, log: r.log })
}

/// Exhaustive trunk best response: tries every pure `Max` strategy on the free
/// trunk infosets (at most `cap` of them) and returns the best one with its trunk
/// utility.
pub fn trunk_br_oracle(
    problem: &Problem,
    mut vf: Option<&mut dyn ValueFunction>,
    cap: usize,
) -> Result<(BehavioralStrategy, f64)> {
    let tree = problem.tree;
    let free: Vec<InfosetId> = problem.free_infosets(Player::Max).collect();
    let sizes: Vec<usize> = free.iter().map(|&i| tree.infoset(Player::Max, i).num_actions()).collect();
    let count = sizes.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n));
    match count {
        Some(c) if c <= cap => {}
        _ => {
            return Err(Error::Parameter(format!(
                "too many pure trunk strategies ({:?}) for the cap {cap}",
                count
            )))
        }
    }
    let mut choice = alloc::vec![0usize; free.len()];
    let mut best: Option<(BehavioralStrategy, f64)> = None;
    loop {
        let mut profile = problem.initial.clone();
        for (k, &info) in free.iter().enumerate() {
            let mut v = alloc::vec![0.0; sizes[k]];
            v[choice[k]] = 1.0;
            profile.max.set(info, &v)?;
        }
        let u = scope_utility(problem, &profile, vf.as_deref_mut())?;
        if best.as_ref().is_none_or(|b| u > b.1) {
            best = Some((profile.max, u));
        }
        // Odometer over the choices.
        let mut k = 0;
        while k < choice.len() {
            choice[k] += 1;
            if choice[k] < sizes[k] {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
        if k == choice.len() {
            break;
        }
    }
    Ok(best.expect("at least one pure strategy"))
}

fn check_inputs(values: &[f64], t: u64) -> Result<()> {
    if t == 0 {
        return Err(Error::Parameter("the iteration count must be positive".into()));
    }
    if values.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::Parameter("bound inputs must be nonnegative".into()));
    }
    Ok(())
}

/// Suboptimality bound of the best trunk iterate after `t` iterations:
/// `delta * sqrt(actions / t) * trunk_infosets + subgames * eps_s`.
pub fn lemma1_bound(delta: f64, actions: f64, trunk_infosets: f64, t: u64, subgames: f64, eps_s: f64) -> Result<f64> {
    check_inputs(&[delta, actions, trunk_infosets, subgames, eps_s], t)?;
    Ok(delta * libm::sqrt(actions / t as f64) * trunk_infosets + subgames * eps_s)
}

/// The same bound with the value-function term multiplied by `t`, charging the
/// value-function error once per iteration.
pub fn lemma1_bound_main_text(
    delta: f64,
    actions: f64,
    trunk_infosets: f64,
    t: u64,
    subgames: f64,
    eps_s: f64,
) -> Result<f64> {
    check_inputs(&[delta, actions, trunk_infosets, subgames, eps_s], t)?;
    Ok(delta * libm::sqrt(actions / t as f64) * trunk_infosets + t as f64 * subgames * eps_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games;

    #[test]
    fn bound_arithmetic() {
        let b = lemma1_bound(1.0, 2.0, 4.0, 100, 0.0, 0.0).unwrap();
        assert!((b - 4.0 * libm::sqrt(0.02)).abs() < 1e-12);
        assert!((b - 0.565_685_424_949_238).abs() < 1e-12);
        assert!(lemma1_bound(1.0, 2.0, 4.0, 1 << 60, 0.0, 0.0).unwrap() < 1e-8);
        assert!(matches!(lemma1_bound(1.0, 2.0, 4.0, 0, 0.0, 0.0), Err(Error::Parameter(_))));
        assert!(lemma1_bound(-1.0, 2.0, 4.0, 1, 0.0, 0.0).is_err());
        let main = lemma1_bound_main_text(1.0, 2.0, 4.0, 100, 1.0, 0.5).unwrap();
        assert!((main - (b + 50.0)).abs() < 1e-12);
    }

    #[test]
    fn one_iteration_returns_uniform() {
        let t = games::build_ce_mp();
        let model = games::ce_mp_model(&t);
        let pb = Problem::full(&t).freeze_all(Player::Min, &model);
        let r = best_iterate_trunk_br(&pb, None, 1).unwrap();
        assert_eq!(r.strategy, BehavioralStrategy::uniform(&t, Player::Max));
        assert!((r.utility - 0.5 * (2.0 / 3.0) - 0.5 * (10.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn best_so_far_is_monotone() {
        let t = games::build_kuhn();
        let pb = Problem::full(&t).freeze_all(Player::Min, &BehavioralStrategy::uniform(&t, Player::Min));
        let r = best_iterate_trunk_br(&pb, None, 200).unwrap();
        for w in r.log.windows(2) {
            assert!(w[1].best_iterate_utility >= w[0].best_iterate_utility);
        }
        let (_, oracle) = trunk_br_oracle(&pb, None, 1 << 12).unwrap();
        assert!(oracle - r.utility <= lemma1_bound(4.0, 2.0, 6.0, 200, 0.0, 0.0).unwrap());
    }
}
