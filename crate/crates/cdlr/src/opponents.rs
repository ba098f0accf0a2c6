//! Opponent models: truncated CFR+ runs, random strategies and strategy files.

use anyhow::Result;
use cdlr_core::cfr::{solve, CfrConfig, Problem};
use cdlr_core::{BehavioralStrategy, GameTree, InfosetId, Player};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::config::OpponentSpec;
use crate::strategy_io;

/// Average `Min` strategy of CFR+ stopped after `iterations` iterations.
pub fn gen_opponent_cfr(tree: &GameTree, iterations: u32) -> Result<BehavioralStrategy> {
    let r = solve(&Problem::full(tree), None, &CfrConfig::iterations(iterations))?;
    Ok(r.average.min)
}

/// A `Min` strategy with one uniform point of the simplex per infoset.
///
/// Normalized unit exponentials are a symmetric Dirichlet(1) draw. Infosets are
/// visited in id order, so a seed always gives the same strategy.
pub fn gen_opponent_random(tree: &GameTree, seed: u64) -> BehavioralStrategy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = BehavioralStrategy::uniform(tree, Player::Min);
    for (i, info) in tree.infosets(Player::Min).iter().enumerate() {
        let draws: Vec<f64> = (0..info.num_actions()).map(|_| Exp1.sample(&mut rng)).collect();
        let total: f64 = draws.iter().sum();
        let probs: Vec<f64> = draws.iter().map(|x| x / total).collect();
        s.set(InfosetId(i as u32), &probs).expect("normalized draw");
    }
    s
}

pub fn make_opponent(tree: &GameTree, spec: &OpponentSpec) -> Result<BehavioralStrategy> {
    match spec {
        OpponentSpec::Cfr(n) => gen_opponent_cfr(tree, *n),
        OpponentSpec::Random(seed) => Ok(gen_opponent_random(tree, *seed)),
        OpponentSpec::File(path) => strategy_io::read(path, tree, Player::Min),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cdlr_core::efg::exploitability;
    use cdlr_core::games::{build_kuhn, build_leduc};

    #[test]
    fn random_opponents_are_seeded_distributions() {
        let t = build_leduc();
        let a = gen_opponent_random(&t, 3);
        assert_eq!(a, gen_opponent_random(&t, 3));
        assert_ne!(a, gen_opponent_random(&t, 4));
        for i in 0..t.num_infosets(Player::Min) {
            let total: f64 = a.get(InfosetId(i as u32)).iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_opponents_average_to_uniform() {
        let t = build_leduc();
        let n = 10_000;
        let info = InfosetId(0);
        let na = t.infoset(Player::Min, info).num_actions();
        let mut mean = vec![0.0; na];
        for seed in 0..n {
            let s = gen_opponent_random(&t, seed);
            for (m, x) in mean.iter_mut().zip(s.get(info)) {
                *m += x / n as f64;
            }
        }
        // One coordinate of a flat Dirichlet has variance (k-1)/(k^2 (k+1)).
        let k = na as f64;
        let se = ((k - 1.0) / (k * k * (k + 1.0)) / n as f64).sqrt();
        for m in mean {
            assert!((m - 1.0 / k).abs() <= 3.0 * se, "mean {m}, se {se}");
        }
    }

    #[test]
    fn longer_cfr_runs_are_less_exploitable() {
        let t = build_kuhn();
        let gv = -1.0 / 18.0;
        let short = exploitability(&t, &gen_opponent_cfr(&t, 5).unwrap(), gv);
        let long = exploitability(&t, &gen_opponent_cfr(&t, 500).unwrap(), gv);
        assert!(short > long, "{short} vs {long}");
        assert_eq!(gen_opponent_cfr(&t, 5).unwrap(), gen_opponent_cfr(&t, 5).unwrap());
    }
}
