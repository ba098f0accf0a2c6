//! Exact solution of resolve steps with a single free `Max` infoset.
//!
//! With one free infoset the step is a matrix game between the infoset's actions
//! and the opponent's pure strategies on its free infosets. Its maximin strategy is
//! found by enumerating the vertices of the feasible region in rational arithmetic.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::cfr::Problem;
use crate::efg::{rationalize, InfosetId, Player, Slot, Q};
use crate::error::{Error, Result};

/// Largest number of opponent pure strategies enumerated.
pub const MAX_PURE_STRATEGIES: usize = 1 << 14;

/// Maximin strategy of the single free `Max` infoset of a step.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactStep {
    pub infoset: InfosetId,
    pub strategy: Vec<Q>,
    /// Guaranteed utility to `Max` over the step's scope.
    pub value: Q,
}

/// Solves `problem` exactly. Returns `None` when no `Max` infoset is free.
pub fn solve_exact(problem: &Problem) -> Result<Option<ExactStep>> {
    let free_max: Vec<InfosetId> = problem.free_infosets(Player::Max).collect();
    let info = match free_max.as_slice() {
        [] => return Ok(None),
        [i] => *i,
        _ => {
            return Err(Error::ExactUnsupported(format!(
                "{} free Max infosets in one step; the exact solver handles one",
                free_max.len()
            )))
        }
    };
    if !problem.scope.borders().is_empty() {
        return Err(Error::ExactUnsupported("the exact solver needs a scope without borders".into()));
    }
    let tree = problem.tree;
    let free_min: Vec<InfosetId> = problem.free_infosets(Player::Min).collect();
    let sizes: Vec<usize> = free_min.iter().map(|&i| tree.infoset(Player::Min, i).num_actions()).collect();
    let count = sizes.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n)).filter(|&c| c <= MAX_PURE_STRATEGIES);
    let Some(count) = count else {
        return Err(Error::ExactUnsupported(format!("too many opponent pure strategies ({} free infosets)", free_min.len())));
    };
    let actions = tree.infoset(Player::Max, info).num_actions();
    let terminals = terminal_table(problem, info, &free_min);

    // One payoff row per opponent pure strategy.
    let mut rows: Vec<Vec<Q>> = Vec::with_capacity(count);
    let mut choice = vec![0usize; free_min.len()];
    for _ in 0..count {
        let mut row = vec![Q::zero(); actions];
        for t in &terminals {
            if t.min.iter().all(|&(k, a)| choice[k] == a) {
                match t.max {
                    Some(a) => row[a] = row[a].clone() + t.value.clone(),
                    None => row.iter_mut().for_each(|r| *r = r.clone() + t.value.clone()),
                }
            }
        }
        rows.push(row);
        for k in 0..choice.len() {
            choice[k] += 1;
            if choice[k] < sizes[k] {
                break;
            }
            choice[k] = 0;
        }
    }
    let (strategy, value) = maximin(&prune(rows), actions);
    Ok(Some(ExactStep { infoset: info, strategy, value }))
}

/// A terminal of the step with everything fixed folded into its value: the
/// reach-weighted utility given that `Max` takes `max` at the free infoset and
/// `Min` takes the listed actions at its free infosets.
struct TerminalRow {
    max: Option<usize>,
    min: Vec<(usize, usize)>,
    value: Q,
}

fn terminal_table(problem: &Problem, info: InfosetId, free_min: &[InfosetId]) -> Vec<TerminalRow> {
    let tree = problem.tree;
    let scope = &problem.scope;
    let min_index = |i: InfosetId| free_min.iter().position(|&f| f == i);
    let mut state: Vec<Option<TerminalRow>> = (0..scope.len()).map(|_| None).collect();
    for (l, r) in problem.root_reach.iter().enumerate() {
        let w = rationalize(r[0]) * rationalize(r[1]) * rationalize(r[2]);
        state[l] = Some(TerminalRow { max: None, min: Vec::new(), value: w });
    }
    let mut out = Vec::new();
    for l in 0..scope.len() as u32 {
        let Some(cur) = state[l as usize].take() else { continue };
        if cur.value.is_zero() {
            continue;
        }
        let g = scope.global(l);
        let node = tree.node(g);
        match scope.slot(l) {
            Slot::Terminal => {
                let value = cur.value * rationalize(node.utility);
                out.push(TerminalRow { value, ..cur });
            }
            Slot::Border => unreachable!("checked above"),
            Slot::Chance => {
                for (c, &p) in scope.children(l).zip(tree.chance_probs(g)) {
                    let value = cur.value.clone() * rationalize(p);
                    state[c as usize] = Some(TerminalRow { max: cur.max, min: cur.min.clone(), value });
                }
            }
            Slot::Decision(player) => {
                let i = node.infoset().expect("decision");
                for (a, c) in scope.children(l).enumerate() {
                    let mut next = TerminalRow { max: cur.max, min: cur.min.clone(), value: cur.value.clone() };
                    match player {
                        Player::Max if i == info => next.max = Some(a),
                        Player::Min if problem.frozen[1][i.index()] => {}
                        Player::Min => next.min.push((min_index(i).expect("free Min infoset"), a)),
                        Player::Max => {}
                    }
                    let fixed = match player {
                        Player::Max if i == info => None,
                        Player::Max => Some(problem.initial.max.prob(i, a)),
                        Player::Min if problem.frozen[1][i.index()] => Some(problem.initial.min.prob(i, a)),
                        Player::Min => None,
                    };
                    if let Some(pr) = fixed {
                        next.value = next.value * rationalize(pr);
                    }
                    state[c as usize] = Some(next);
                }
            }
        }
    }
    out
}

/// Drops duplicate rows and rows that some other row is at most everywhere.
fn prune(rows: Vec<Vec<Q>>) -> Vec<Vec<Q>> {
    let mut kept: Vec<Vec<Q>> = Vec::new();
    for r in rows {
        if kept.iter().any(|k| k.iter().zip(&r).all(|(a, b)| a <= b)) {
            continue;
        }
        kept.retain(|k| !r.iter().zip(k).all(|(a, b)| a <= b));
        kept.push(r);
    }
    kept
}

/// Maximises `min_r rows[r]·x` over the probability simplex. Ties between optimal
/// vertices go to the first one enumerated.
pub fn maximin(rows: &[Vec<Q>], actions: usize) -> (Vec<Q>, Q) {
    if actions == 1 {
        let v = rows.iter().map(|r| r[0].clone()).min().unwrap_or_else(Q::zero);
        return (vec![Q::one()], v);
    }
    // Constraints 0..actions are x_j >= 0, the rest are t <= rows[r]·x.
    let total = actions + rows.len();
    let mut best: Option<(Vec<Q>, Q)> = None;
    let mut pick: Vec<usize> = (0..actions).collect();
    loop {
        if let Some((x, t)) = vertex(rows, actions, &pick) {
            if feasible(rows, &x, &t) && best.as_ref().is_none_or(|b| t > b.1) {
                best = Some((x, t));
            }
        }
        // Next combination in lexicographic order.
        let mut k = actions;
        while k > 0 && pick[k - 1] == total - actions + k - 1 {
            k -= 1;
        }
        if k == 0 {
            break;
        }
        pick[k - 1] += 1;
        for j in k..actions {
            pick[j] = pick[j - 1] + 1;
        }
    }
    best.expect("the simplex has at least one vertex")
}

/// Solves for the point where the picked constraints are tight and `x` sums to one.
fn vertex(rows: &[Vec<Q>], actions: usize, pick: &[usize]) -> Option<(Vec<Q>, Q)> {
    let n = actions + 1;
    // Unknowns x_0..x_{actions-1}, t.
    let mut m: Vec<Vec<Q>> = Vec::with_capacity(n);
    let mut sum = vec![Q::one(); n + 1];
    sum[actions] = Q::zero();
    m.push(sum);
    for &c in pick {
        let mut eq = vec![Q::zero(); n + 1];
        if c < actions {
            eq[c] = Q::one();
        } else {
            for (j, u) in rows[c - actions].iter().enumerate() {
                eq[j] = -u.clone();
            }
            eq[actions] = Q::one();
        }
        m.push(eq);
    }
    // Gauss-Jordan elimination.
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        let inv = Q::one() / m[col][col].clone();
        for v in m[col].iter_mut() {
            *v = v.clone() * inv.clone();
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for j in col..=n {
                    let d = f.clone() * m[col][j].clone();
                    m[r][j] = m[r][j].clone() - d;
                }
            }
        }
    }
    let x = (0..actions).map(|j| m[j][n].clone()).collect();
    Some((x, m[actions][n].clone()))
}

fn feasible(rows: &[Vec<Q>], x: &[Q], t: &Q) -> bool {
    x.iter().all(|v| *v >= Q::zero())
        && rows.iter().all(|r| {
            let u = r.iter().zip(x).fold(Q::zero(), |acc, (a, b)| acc + a.clone() * b.clone());
            *t <= u
        })
}
