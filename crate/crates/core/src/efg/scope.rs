use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::tree::{GameTree, InfosetId, NodeId, NodeKind, Player, PsId, NONE};

/// Role of a node inside a [`Scope`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Chance,
    Decision(Player),
    Terminal,
    /// Root of a public state outside the region; its value comes from elsewhere.
    Border,
}

/// Histories at one border public state reached from the scope.
#[derive(Clone, Debug)]
pub struct BorderPs {
    pub ps: PsId,
    /// Local indices of the border nodes.
    pub nodes: Vec<u32>,
}

/// A connected part of a tree: every history below a set of root histories whose
/// public state belongs to a region, plus the terminals and border histories
/// hanging off it.
///
/// Local indices follow the tree's layout rule: roots come first, and the children
/// of every inner node form a contiguous block after it.
#[derive(Clone, Debug)]
pub struct Scope {
    pub(crate) nodes: Vec<NodeId>,
    pub(crate) slots: Vec<Slot>,
    pub(crate) first_child: Vec<u32>,
    pub(crate) num_children: Vec<u32>,
    pub(crate) num_roots: usize,
    pub(crate) borders: Vec<BorderPs>,
    /// Border index of each border slot, `NONE` elsewhere.
    pub(crate) border_index: Vec<u32>,
    /// Infosets of each player with nodes in the scope, sorted.
    pub(crate) infosets: [Vec<InfosetId>; 2],
    /// For every infoset of the tree, one local node of it (or `NONE`).
    pub(crate) representative: [Vec<u32>; 2],
}

impl Scope {
    /// The whole tree.
    pub fn full(tree: &GameTree) -> Scope {
        Scope::build(tree, &[tree.root()], |_| true)
    }

    /// Everything below the roots of `ps`, to the end of the game.
    pub fn below(tree: &GameTree, ps: PsId) -> Scope {
        Scope::build(tree, &tree.public_state(ps).roots, |_| true)
    }

    /// Histories below `roots` whose public state satisfies `in_region`.
    pub fn build(tree: &GameTree, roots: &[NodeId], in_region: impl Fn(PsId) -> bool) -> Scope {
        let mut s = Scope {
            nodes: Vec::new(),
            slots: Vec::new(),
            first_child: Vec::new(),
            num_children: Vec::new(),
            num_roots: roots.len(),
            borders: Vec::new(),
            border_index: Vec::new(),
            infosets: [Vec::new(), Vec::new()],
            representative: [
                vec![NONE; tree.num_infosets(Player::Max)],
                vec![NONE; tree.num_infosets(Player::Min)],
            ],
        };
        let mut border_map: BTreeMap<PsId, Vec<u32>> = BTreeMap::new();
        let mut stack: Vec<u32> = Vec::new();
        for &r in roots {
            let l = s.push(tree, r, true, &mut border_map);
            if s.is_inner(l) {
                stack.push(l);
            }
        }
        // Expand in LIFO order; each expansion allocates the whole child block.
        while let Some(l) = stack.pop() {
            let g = s.nodes[l as usize];
            let node = tree.node(g);
            let first = s.nodes.len() as u32;
            s.first_child[l as usize] = first;
            s.num_children[l as usize] = node.num_children;
            for c in node.children() {
                let cid = NodeId(c as u32);
                let inside = tree.node(cid).is_terminal() || in_region(tree.node(cid).public_state);
                let cl = s.push(tree, cid, inside, &mut border_map);
                if s.is_inner(cl) {
                    stack.push(cl);
                }
            }
        }
        s.border_index = vec![NONE; s.nodes.len()];
        for (k, (ps, nodes)) in border_map.into_iter().enumerate() {
            for &l in &nodes {
                s.border_index[l as usize] = k as u32;
            }
            s.borders.push(BorderPs { ps, nodes });
        }
        for p in Player::BOTH {
            let mut v: Vec<InfosetId> = s.representative[p.index()]
                .iter()
                .enumerate()
                .filter(|(_, &r)| r != NONE)
                .map(|(i, _)| InfosetId(i as u32))
                .collect();
            v.sort_unstable();
            s.infosets[p.index()] = v;
        }
        s
    }

    fn push(&mut self, tree: &GameTree, g: NodeId, inside: bool, borders: &mut BTreeMap<PsId, Vec<u32>>) -> u32 {
        let l = self.nodes.len() as u32;
        let node = tree.node(g);
        let slot = if !inside {
            borders.entry(node.public_state).or_default().push(l);
            Slot::Border
        } else {
            match node.kind {
                NodeKind::Chance => Slot::Chance,
                NodeKind::Terminal => Slot::Terminal,
                NodeKind::Decision(p) => {
                    let rep = &mut self.representative[p.index()][node.infoset as usize];
                    if *rep == NONE {
                        *rep = l;
                    }
                    Slot::Decision(p)
                }
            }
        };
        self.nodes.push(g);
        self.slots.push(slot);
        self.first_child.push(NONE);
        self.num_children.push(0);
        l
    }

    #[inline]
    fn is_inner(&self, l: u32) -> bool {
        matches!(self.slots[l as usize], Slot::Chance | Slot::Decision(_))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    pub fn num_roots(&self) -> usize {
        self.num_roots
    }

    #[inline]
    pub fn global(&self, local: u32) -> NodeId {
        self.nodes[local as usize]
    }

    #[inline]
    pub fn slot(&self, local: u32) -> Slot {
        self.slots[local as usize]
    }

    #[inline]
    pub fn children(&self, local: u32) -> core::ops::Range<u32> {
        let f = self.first_child[local as usize];
        f..f + self.num_children[local as usize]
    }

    pub fn borders(&self) -> &[BorderPs] {
        &self.borders
    }

    pub fn infosets(&self, player: Player) -> &[InfosetId] {
        &self.infosets[player.index()]
    }

    pub fn contains_infoset(&self, player: Player, infoset: InfosetId) -> bool {
        self.representative[player.index()][infoset.index()] != NONE
    }

    /// One local node of `infoset`, if the infoset is in the scope.
    pub fn representative(&self, player: Player, infoset: InfosetId) -> Option<u32> {
        let r = self.representative[player.index()][infoset.index()];
        (r != NONE).then_some(r)
    }

    pub fn border_of(&self, local: u32) -> Option<usize> {
        let b = self.border_index[local as usize];
        (b != NONE).then_some(b as usize)
    }

    /// Number of histories that are not border placeholders.
    pub fn solved_nodes(&self) -> usize {
        self.slots.iter().filter(|s| !matches!(s, Slot::Border)).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games;

    #[test]
    fn full_scope_covers_tree() {
        let t = games::build_kuhn();
        let s = Scope::full(&t);
        assert_eq!(s.len(), t.num_nodes());
        assert!(s.borders().is_empty());
        for l in 0..s.len() as u32 {
            for c in s.children(l) {
                assert!(c > l);
                let g = s.global(c);
                assert_eq!(t.node(g).parent, Some(s.global(l)));
            }
        }
        assert_eq!(s.infosets(Player::Max).len(), 6);
    }

    #[test]
    fn region_scope_has_borders() {
        let t = games::build_leduc();
        let root_ps = t.node(t.root()).public_state;
        let round0 = |ps: PsId| t.public_state(ps).round == 0;
        let s = Scope::build(&t, &t.public_state(root_ps).roots, round0);
        assert!(!s.borders().is_empty());
        for b in s.borders() {
            assert_eq!(t.public_state(b.ps).round, 1);
            assert_eq!(b.nodes.len(), t.public_state(b.ps).roots.len());
        }
    }
}
