//! Reach-balance constraints of the multi-round counterexample.
//!
//! At `p = 0.5` the combined reach of the free and fixed copies into round `n` must
//! match the equilibrium reach: `prod_k σ(c_k) + prod_k σ_F(c_k) = 1 / 2^(n-1)`,
//! with the products over rounds `1..=n`.

use alloc::format;
use alloc::vec::Vec;

use super::rnr::{RnrGame, Side, FREE_PREFIX};
use crate::efg::{BehavioralStrategy, Player};
use crate::error::{Error, Result};
use crate::games::round_letter;

/// Probabilities of the continue action in rounds `1..=n` under the free-copy
/// strategy and under the model.
fn continue_probs(rnr: &RnrGame, sigma_prime: &BehavioralStrategy, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !rnr.tree.name.starts_with("ce_rounds") {
        return Err(Error::UnsupportedDomain(format!("reach balance needs a ce_rounds game, got `{}`", rnr.tree.name)));
    }
    if (rnr.p - 0.5).abs() > 1e-12 {
        return Err(Error::Parameter(format!("reach balance needs p = 0.5, got {}", rnr.p)));
    }
    let mut free = Vec::with_capacity(n);
    let mut fixed = Vec::with_capacity(n);
    for k in 0..n {
        let letter = round_letter(k as u32);
        let key = format!("{FREE_PREFIX}{letter}");
        let info = rnr
            .tree
            .infoset_by_key(Player::Min, &key)
            .ok_or_else(|| Error::Parameter(format!("round {} does not exist", k + 1)))?;
        let (side, base) = rnr.min_base[info.index()];
        debug_assert_eq!(side, Side::Free);
        let actions = &rnr.tree.infoset(Player::Min, info).actions;
        let c = actions
            .iter()
            .position(|a| *a == format!("c{letter}"))
            .ok_or_else(|| Error::Structure(format!("no continue action in round {letter}")))?;
        free.push(sigma_prime.prob(base, c));
        fixed.push(rnr.fixed_model.prob(base, c));
    }
    Ok((free, fixed))
}

fn lhs_target(free: &[f64], fixed: &[f64]) -> (f64, f64) {
    let lhs = free.iter().product::<f64>() + fixed.iter().product::<f64>();
    let target = 1.0 / (1u64 << (free.len() - 1)) as f64;
    (lhs, target)
}

/// Left-hand side and target of the round-`round` balance equation (`round`
/// counts from 1) for the free-copy strategy `sigma_prime` on the base game.
pub fn reach_balance_check(rnr: &RnrGame, sigma_prime: &BehavioralStrategy, round: usize) -> Result<(f64, f64)> {
    if round == 0 {
        return Err(Error::Parameter("rounds count from 1".into()));
    }
    let (free, fixed) = continue_probs(rnr, sigma_prime, round)?;
    Ok(lhs_target(&free, &fixed))
}

/// Outcome of searching for a free-copy continue probability that balances one
/// round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BalanceSearch {
    /// Best grid value of the freed probability (`None` when nothing is freed).
    pub value: Option<f64>,
    /// Smallest `|lhs - target|` seen.
    pub residual: f64,
    /// Whether the residual is within one grid step.
    pub found: bool,
}

/// Tries to satisfy the round-`round` equation by changing only the free-copy
/// continue probability of round `freed` (1-based) over a grid with spacing
/// `step`; every other probability stays as in `sigma_prime`. With `freed = None`
/// the strategy is checked as it is.
pub fn balance_grid_search(
    rnr: &RnrGame,
    sigma_prime: &BehavioralStrategy,
    round: usize,
    freed: Option<usize>,
    step: f64,
) -> Result<BalanceSearch> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::Parameter(format!("grid step {step} is outside (0, 1]")));
    }
    if round == 0 || freed.is_some_and(|f| f == 0 || f > round) {
        return Err(Error::Parameter(format!("cannot free round {freed:?} for the round-{round} equation")));
    }
    let (mut free, fixed) = continue_probs(rnr, sigma_prime, round)?;
    let Some(f) = freed else {
        let (lhs, target) = lhs_target(&free, &fixed);
        let residual = (lhs - target).abs();
        return Ok(BalanceSearch { value: None, residual, found: residual <= step });
    };
    let points = libm::round(1.0 / step) as u64;
    let mut best = BalanceSearch { value: None, residual: f64::INFINITY, found: false };
    for i in 0..=points {
        let x = (i as f64 * step).min(1.0);
        free[f - 1] = x;
        let (lhs, target) = lhs_target(&free, &fixed);
        let residual = (lhs - target).abs();
        if residual < best.residual {
            best = BalanceSearch { value: Some(x), residual, found: residual <= step };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games;
    use crate::resolving::make_rnr;

    fn companion_setup() -> (RnrGame, BehavioralStrategy) {
        let t = games::build_ce_rounds(3).unwrap();
        let mut model = BehavioralStrategy::uniform(&t, Player::Min);
        let mut sigma = BehavioralStrategy::uniform(&t, Player::Min);
        for (k, c) in [(0u32, 0.4), (1, 0.35), (2, 57.0 / 70.0)] {
            let l = round_letter(k);
            let info = t.infoset_by_key(Player::Min, &format!("{l}")).unwrap();
            let ci = t.infoset(Player::Min, info).actions.iter().position(|a| *a == format!("c{l}")).unwrap();
            let mut v = [0.0; 2];
            v[ci] = 0.6;
            v[1 - ci] = 0.4;
            model.set(info, &v).unwrap();
            v[ci] = c;
            v[1 - ci] = 1.0 - c;
            sigma.set(info, &v).unwrap();
        }
        (make_rnr(&t, &model, 0.5).unwrap(), sigma)
    }

    #[test]
    fn first_rounds_balance() {
        let (rnr, sigma) = companion_setup();
        let (l, t) = reach_balance_check(&rnr, &sigma, 1).unwrap();
        assert!((l - 1.0).abs() < 1e-12 && t == 1.0);
        let (l, t) = reach_balance_check(&rnr, &sigma, 2).unwrap();
        assert!((l - 0.5).abs() < 1e-12 && t == 0.5);
    }

    #[test]
    fn last_round_needs_a_freed_constraint() {
        let (rnr, sigma) = companion_setup();
        let frozen = balance_grid_search(&rnr, &sigma, 3, None, 1e-4).unwrap();
        assert!(!frozen.found);
        for r in 1..=3 {
            let s = balance_grid_search(&rnr, &sigma, 3, Some(r), 1e-4).unwrap();
            assert!(s.found, "round {r}: {s:?}");
        }
    }

    #[test]
    fn uniform_first_round() {
        let t = games::build_ce_rounds(3).unwrap();
        let u = BehavioralStrategy::uniform(&t, Player::Min);
        let rnr = make_rnr(&t, &u, 0.5).unwrap();
        assert_eq!(reach_balance_check(&rnr, &u, 1).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn other_games_are_rejected() {
        let t = games::build_kuhn();
        let u = BehavioralStrategy::uniform(&t, Player::Min);
        let rnr = make_rnr(&t, &u, 0.5).unwrap();
        assert!(matches!(reach_balance_check(&rnr, &u, 1), Err(Error::UnsupportedDomain(_))));
    }
}
