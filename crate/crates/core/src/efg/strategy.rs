use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::scalar::Scalar;
use super::tree::{GameTree, InfosetId, Player, PsId};
use crate::error::{Error, Result};

/// Per-infoset action distributions of one player, stored flat in the tree's
/// action order (see [`crate::efg::Infoset::action_offset`]).
#[derive(Clone, Debug, PartialEq)]
pub struct BehavioralStrategy<S = f64> {
    pub owner: Player,
    probs: Vec<S>,
    offsets: Vec<u32>,
}

impl<S: Scalar> BehavioralStrategy<S> {
    /// Uniform distribution at every infoset of `owner`.
    pub fn uniform(tree: &GameTree, owner: Player) -> Self {
        let mut probs = Vec::with_capacity(tree.num_actions(owner));
        let mut offsets = Vec::with_capacity(tree.num_infosets(owner) + 1);
        for info in tree.infosets(owner) {
            offsets.push(probs.len() as u32);
            let n = info.num_actions();
            let p = S::one() / S::from_f64(n as f64);
            probs.extend((0..n).map(|_| p.clone()));
        }
        offsets.push(probs.len() as u32);
        BehavioralStrategy { owner, probs, offsets }
    }

    /// Builds a strategy from per-infoset vectors; each must match the infoset's
    /// action count, be nonnegative and sum to one within `1e-9`.
    pub fn from_vecs(tree: &GameTree, owner: Player, vecs: Vec<Vec<S>>) -> Result<Self> {
        if vecs.len() != tree.num_infosets(owner) {
            return Err(Error::IncompleteStrategy(format!(
                "expected {} infosets, got {}",
                tree.num_infosets(owner),
                vecs.len()
            )));
        }
        let mut s = Self::uniform(tree, owner);
        for (i, v) in vecs.into_iter().enumerate() {
            s.set(InfosetId(i as u32), &v)?;
        }
        Ok(s)
    }

    /// Wraps a flat probability array laid out like the tree's action offsets.
    pub fn from_flat(tree: &GameTree, owner: Player, probs: Vec<S>) -> Self {
        assert_eq!(probs.len(), tree.num_actions(owner));
        let mut offsets: Vec<u32> = tree.infosets(owner).iter().map(|i| i.action_offset).collect();
        offsets.push(probs.len() as u32);
        BehavioralStrategy { owner, probs, offsets }
    }

    #[inline]
    pub fn get(&self, infoset: InfosetId) -> &[S] {
        let i = infoset.index();
        &self.probs[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    #[inline]
    pub fn prob(&self, infoset: InfosetId, action: usize) -> S {
        self.probs[self.offsets[infoset.index()] as usize + action].clone()
    }

    pub fn set(&mut self, infoset: InfosetId, probs: &[S]) -> Result<()> {
        let i = infoset.index();
        let (a, b) = (self.offsets[i] as usize, self.offsets[i + 1] as usize);
        if probs.len() != b - a {
            return Err(Error::Parameter(format!(
                "infoset {i} has {} actions, got {} probabilities",
                b - a,
                probs.len()
            )));
        }
        let mut total = 0.0;
        for p in probs {
            let x = p.to_f64();
            if !(x >= -1e-12) {
                return Err(Error::Parameter(format!("negative probability {x} at infoset {i}")));
            }
            total += x;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Parameter(format!("probabilities at infoset {i} sum to {total}")));
        }
        self.probs[a..b].clone_from_slice(probs);
        Ok(())
    }

    pub fn num_infosets(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn flat(&self) -> &[S] {
        &self.probs
    }

    pub fn flat_mut(&mut self) -> &mut [S] {
        &mut self.probs
    }

    /// Checks that the strategy matches the tree's infosets of its owner.
    pub fn check_covers(&self, tree: &GameTree) -> Result<()> {
        if self.num_infosets() != tree.num_infosets(self.owner) || self.probs.len() != tree.num_actions(self.owner) {
            let missing: Vec<String> = tree
                .infosets(self.owner)
                .iter()
                .skip(self.num_infosets())
                .take(5)
                .map(|i| i.key.clone())
                .collect();
            return Err(Error::IncompleteStrategy(format!(
                "{} strategy has {} infosets, tree has {} (first missing: {:?})",
                self.owner.tag(),
                self.num_infosets(),
                tree.num_infosets(self.owner),
                missing
            )));
        }
        Ok(())
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> BehavioralStrategy<T> {
        BehavioralStrategy {
            owner: self.owner,
            probs: self.probs.iter().map(f).collect(),
            offsets: self.offsets.clone(),
        }
    }

    /// True when every infoset puts all mass on one action.
    pub fn is_pure(&self) -> bool {
        (0..self.num_infosets()).all(|i| {
            let v = self.get(InfosetId(i as u32));
            v.iter().filter(|p| !p.is_zero()).count() == 1
        })
    }
}

impl BehavioralStrategy<f64> {
    /// Pure strategy choosing `choice[i]` at infoset `i`.
    pub fn pure(tree: &GameTree, owner: Player, choice: &[usize]) -> Self {
        let mut s = Self::uniform(tree, owner);
        for (i, &a) in choice.iter().enumerate() {
            let range = s.offsets[i] as usize..s.offsets[i + 1] as usize;
            for (k, p) in s.probs[range].iter_mut().enumerate() {
                *p = if k == a { 1.0 } else { 0.0 };
            }
        }
        s
    }

    /// Largest absolute probability difference over all actions.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// One strategy per player on the same tree.
#[derive(Clone, Debug, PartialEq)]
pub struct StrategyProfile<S = f64> {
    pub max: BehavioralStrategy<S>,
    pub min: BehavioralStrategy<S>,
}

impl<S: Scalar> StrategyProfile<S> {
    pub fn new(max: BehavioralStrategy<S>, min: BehavioralStrategy<S>) -> Self {
        assert_eq!(max.owner, Player::Max);
        assert_eq!(min.owner, Player::Min);
        StrategyProfile { max, min }
    }

    pub fn uniform(tree: &GameTree) -> Self {
        StrategyProfile {
            max: BehavioralStrategy::uniform(tree, Player::Max),
            min: BehavioralStrategy::uniform(tree, Player::Min),
        }
    }

    #[inline]
    pub fn of(&self, player: Player) -> &BehavioralStrategy<S> {
        match player {
            Player::Max => &self.max,
            Player::Min => &self.min,
        }
    }

    #[inline]
    pub fn of_mut(&mut self, player: Player) -> &mut BehavioralStrategy<S> {
        match player {
            Player::Max => &mut self.max,
            Player::Min => &mut self.min,
        }
    }

    pub fn with(&self, player: Player, s: BehavioralStrategy<S>) -> Self {
        let mut out = self.clone();
        *out.of_mut(player) = s;
        out
    }
}

/// Unnormalized own-reach probabilities of one player's augmented infosets at a
/// public state, in the order of [`crate::efg::PublicState::root_aug`].
#[derive(Clone, Debug, PartialEq)]
pub struct Range {
    pub public_state: PsId,
    pub player: Player,
    pub reaches: Vec<f64>,
}

impl Range {
    pub fn is_zero(&self) -> bool {
        self.reaches.iter().all(|&r| r == 0.0)
    }
}
