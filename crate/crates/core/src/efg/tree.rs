use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// The two decision makers. `Max` (△) is the player whose utility the tree stores;
/// `Min` (▽) receives the negation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Player {
    Max,
    Min,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::Max, Player::Min];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Player::Max => 0,
            Player::Min => 1,
        }
    }

    #[inline]
    pub fn opponent(self) -> Player {
        match self {
            Player::Max => Player::Min,
            Player::Min => Player::Max,
        }
    }

    /// Sign that turns a utility-to-`Max` into a utility to this player.
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Player::Max => 1.0,
            Player::Min => -1.0,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Player::Max => "max",
            Player::Min => "min",
        }
    }
}

macro_rules! id_type {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

id_type!(
    /// Index of a history in [`GameTree::nodes`].
    NodeId
);
id_type!(
    /// Index of an information set within one player's infoset list.
    InfosetId
);
id_type!(
    /// Index of a public state.
    PsId
);

pub(crate) const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Chance,
    Decision(Player),
    Terminal,
}

#[derive(Clone, Debug)]
pub struct Node {
    pub kind: NodeKind,
    pub parent: Option<NodeId>,
    /// Position among the parent's children.
    pub action_index: u32,
    pub first_child: u32,
    pub num_children: u32,
    /// Infoset of the acting player for decision nodes, `u32::MAX` otherwise.
    pub(crate) infoset: u32,
    /// Utility to `Max`; zero for non-terminals.
    pub utility: f64,
    /// Offset into the chance probability table for chance nodes.
    pub(crate) chance_offset: u32,
    pub public_state: PsId,
    /// Augmented infoset of each player; `u32::MAX` at terminals.
    pub(crate) aug: [u32; 2],
    /// Label of the edge leading into this node.
    pub label: String,
    pub depth: u32,
}

impl Node {
    #[inline]
    pub fn children(&self) -> core::ops::Range<usize> {
        self.first_child as usize..(self.first_child + self.num_children) as usize
    }

    #[inline]
    pub fn infoset(&self) -> Option<InfosetId> {
        (self.infoset != NONE).then_some(InfosetId(self.infoset))
    }

    #[inline]
    pub fn is_terminal(&self) -> bool {
        self.kind == NodeKind::Terminal
    }
}

#[derive(Clone, Debug)]
pub struct Infoset {
    pub player: Player,
    pub key: String,
    pub nodes: Vec<NodeId>,
    pub actions: Vec<String>,
    /// Number of the owner's own decisions before reaching this infoset.
    pub seq_len: u32,
    pub public_state: PsId,
    /// Offset of this infoset's first action in flat per-player action arrays.
    pub action_offset: u32,
}

impl Infoset {
    #[inline]
    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }
}

#[derive(Clone, Debug)]
pub struct AugInfoset {
    pub player: Player,
    pub key: String,
    pub nodes: Vec<NodeId>,
    pub public_state: PsId,
}

#[derive(Clone, Debug)]
pub struct PublicState {
    pub key: String,
    pub round: u32,
    /// Non-terminal member histories.
    pub nodes: Vec<NodeId>,
    /// Members whose parent lies outside this public state.
    pub roots: Vec<NodeId>,
    pub parent: Option<PsId>,
    pub children: Vec<PsId>,
    pub has_decision: bool,
    /// Augmented infosets (per player) that contain a root history, sorted.
    pub root_aug: [Vec<u32>; 2],
}

/// Coarse domain tag used by operations that only make sense for some games.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Domain {
    Poker,
    Other,
}

/// Immutable, fully enumerated two-player zero-sum extensive-form game.
///
/// Nodes are stored so that the children of every node occupy a contiguous block
/// with indices larger than the parent. A forward sweep in index order therefore
/// visits parents before children, and a reverse sweep does the opposite.
#[derive(Clone, Debug)]
pub struct GameTree {
    pub name: String,
    pub domain: Domain,
    pub(crate) nodes: Vec<Node>,
    pub(crate) chance_probs: Vec<f64>,
    pub(crate) infosets: [Vec<Infoset>; 2],
    pub(crate) aug: [Vec<AugInfoset>; 2],
    pub(crate) public_states: Vec<PublicState>,
    pub(crate) num_actions: [usize; 2],
    /// Infosets per player ordered by decreasing own-sequence length.
    pub(crate) bottom_up: [Vec<u32>; 2],
}

impl GameTree {
    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn checked_node(&self, id: NodeId) -> Result<&Node> {
        self.nodes
            .get(id.index())
            .ok_or_else(|| Error::Structure(format!("unknown node id {}", id.0)))
    }

    /// Probabilities of a chance node's outcomes in child order.
    #[inline]
    pub fn chance_probs(&self, id: NodeId) -> &[f64] {
        let n = &self.nodes[id.index()];
        let start = n.chance_offset as usize;
        &self.chance_probs[start..start + n.num_children as usize]
    }

    #[inline]
    pub fn infosets(&self, player: Player) -> &[Infoset] {
        &self.infosets[player.index()]
    }

    #[inline]
    pub fn infoset(&self, player: Player, id: InfosetId) -> &Infoset {
        &self.infosets[player.index()][id.index()]
    }

    pub fn num_infosets(&self, player: Player) -> usize {
        self.infosets[player.index()].len()
    }

    /// Total number of (infoset, action) pairs of a player.
    #[inline]
    pub fn num_actions(&self, player: Player) -> usize {
        self.num_actions[player.index()]
    }

    pub fn infoset_by_key(&self, player: Player, key: &str) -> Option<InfosetId> {
        self.infosets[player.index()]
            .iter()
            .position(|i| i.key == key)
            .map(|i| InfosetId(i as u32))
    }

    #[inline]
    pub fn aug_infosets(&self, player: Player) -> &[AugInfoset] {
        &self.aug[player.index()]
    }

    /// Augmented infoset of `player` containing a non-terminal node.
    #[inline]
    pub fn aug_of(&self, node: NodeId, player: Player) -> Option<u32> {
        let a = self.nodes[node.index()].aug[player.index()];
        (a != NONE).then_some(a)
    }

    #[inline]
    pub fn public_states(&self) -> &[PublicState] {
        &self.public_states
    }

    #[inline]
    pub fn public_state(&self, id: PsId) -> &PublicState {
        &self.public_states[id.index()]
    }

    pub fn ps_by_key(&self, key: &str) -> Option<PsId> {
        self.public_states
            .iter()
            .position(|p| p.key == key)
            .map(|i| PsId(i as u32))
    }

    /// Public states in the public subtree rooted at `ps`, including `ps`, in
    /// breadth-first order.
    pub fn public_subtree(&self, ps: PsId) -> Vec<PsId> {
        let mut out = vec![ps];
        let mut i = 0;
        while i < out.len() {
            let cur = out[i];
            out.extend(self.public_states[cur.index()].children.iter().copied());
            i += 1;
        }
        out
    }

    /// Infosets of `player` ordered by decreasing own-sequence length, the order a
    /// bottom-up best response needs.
    pub fn infosets_bottom_up(&self, player: Player) -> impl Iterator<Item = InfosetId> + '_ {
        self.bottom_up[player.index()].iter().map(|&i| InfosetId(i))
    }

    /// Smallest and largest terminal utility.
    pub fn utility_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for n in self.nodes.iter().filter(|n| n.is_terminal()) {
            lo = lo.min(n.utility);
            hi = hi.max(n.utility);
        }
        (lo, hi)
    }

    pub fn max_actions(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n.kind, NodeKind::Decision(_)))
            .map(|n| n.num_children as usize)
            .max()
            .unwrap_or(1)
    }

    pub fn num_terminals(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_terminal()).count()
    }

    /// Product of chance probabilities on the path to `node`.
    pub fn chance_reach(&self, node: NodeId) -> f64 {
        let mut p = 1.0;
        let mut cur = node;
        while let Some(parent) = self.nodes[cur.index()].parent {
            let pn = &self.nodes[parent.index()];
            if pn.kind == NodeKind::Chance {
                p *= self.chance_probs[pn.chance_offset as usize + self.nodes[cur.index()].action_index as usize];
            }
            cur = parent;
        }
        p
    }

    /// Edge labels from the root to `node`, joined with `/`.
    pub fn history_string(&self, node: NodeId) -> String {
        let mut parts = Vec::new();
        let mut cur = node;
        while let Some(parent) = self.nodes[cur.index()].parent {
            parts.push(self.nodes[cur.index()].label.as_str());
            cur = parent;
        }
        parts.reverse();
        parts.join("/")
    }

    /// Rebuilds a [`NodeSpec`] for the subtree at `node`, preserving keys, labels and
    /// public-state annotations. Used to derive modified games.
    pub fn to_spec(&self, node: NodeId) -> NodeSpec {
        let n = &self.nodes[node.index()];
        let obs = |p: Player| -> String {
            let a = n.aug[p.index()];
            if a == NONE {
                String::new()
            } else {
                let key = &self.aug[p.index()][a as usize].key;
                key.strip_prefix("o:").unwrap_or("").to_string()
            }
        };
        let (public, round) = {
            let ps = &self.public_states[n.public_state.index()];
            (ps.key.clone(), ps.round)
        };
        let kind = match n.kind {
            NodeKind::Terminal => SpecKind::Terminal { utility: n.utility },
            NodeKind::Chance => {
                let probs = self.chance_probs(node);
                SpecKind::Chance {
                    outcomes: n
                        .children()
                        .zip(probs)
                        .map(|(c, &p)| (self.nodes[c].label.clone(), p, self.to_spec(NodeId(c as u32))))
                        .collect(),
                }
            }
            NodeKind::Decision(player) => {
                let info = &self.infosets[player.index()][n.infoset as usize];
                SpecKind::Decision {
                    player,
                    infoset: info.key.clone(),
                    actions: n
                        .children()
                        .map(|c| (self.nodes[c].label.clone(), self.to_spec(NodeId(c as u32))))
                        .collect(),
                }
            }
        };
        let mut spec = NodeSpec {
            kind,
            public,
            round,
            obs: [obs(Player::Max), obs(Player::Min)],
        };
        if n.is_terminal() {
            spec.public.clear();
        }
        spec
    }
}

/// Description of a node and its subtree, consumed by [`build`].
///
/// Each non-terminal node names its public state, a round label used by the
/// `by_round` partitioning, and an observation key per player. Histories of one
/// public state sharing a player's observation key form one augmented infoset of
/// that player; at a player's own decision nodes the infoset key plays that role.
#[derive(Clone, Debug)]
pub struct NodeSpec {
    pub kind: SpecKind,
    pub public: String,
    pub round: u32,
    pub obs: [String; 2],
}

#[derive(Clone, Debug)]
pub enum SpecKind {
    Terminal { utility: f64 },
    Chance { outcomes: Vec<(String, f64, NodeSpec)> },
    Decision { player: Player, infoset: String, actions: Vec<(String, NodeSpec)> },
}

impl NodeSpec {
    pub fn terminal(utility: f64) -> Self {
        NodeSpec {
            kind: SpecKind::Terminal { utility },
            public: String::new(),
            round: 0,
            obs: [String::new(), String::new()],
        }
    }

    pub fn chance(outcomes: Vec<(String, f64, NodeSpec)>) -> Self {
        NodeSpec {
            kind: SpecKind::Chance { outcomes },
            public: String::new(),
            round: 0,
            obs: [String::new(), String::new()],
        }
    }

    pub fn decision(player: Player, infoset: impl Into<String>, actions: Vec<(String, NodeSpec)>) -> Self {
        NodeSpec {
            kind: SpecKind::Decision { player, infoset: infoset.into(), actions },
            public: String::new(),
            round: 0,
            obs: [String::new(), String::new()],
        }
    }

    /// Sets the public state key and round label.
    pub fn public(mut self, key: impl Into<String>, round: u32) -> Self {
        self.public = key.into();
        self.round = round;
        self
    }

    /// Sets the observation key of `player` at this node.
    pub fn obs(mut self, player: Player, key: impl Into<String>) -> Self {
        self.obs[player.index()] = key.into();
        self
    }
}

/// Flattens a [`NodeSpec`] into a validated [`GameTree`].
pub fn build(name: &str, domain: Domain, root: NodeSpec) -> Result<GameTree> {
    let mut b = Builder::default();
    b.nodes.push(placeholder());
    let mut stack: Vec<(u32, NodeSpec, u32)> = vec![(0, root, 0)];
    while let Some((id, spec, depth)) = stack.pop() {
        b.place(id, spec, depth, &mut stack)?;
    }
    b.finish(name, domain)
}

fn placeholder() -> Node {
    Node {
        kind: NodeKind::Terminal,
        parent: None,
        action_index: 0,
        first_child: 0,
        num_children: 0,
        infoset: NONE,
        utility: 0.0,
        chance_offset: NONE,
        public_state: PsId(NONE),
        aug: [NONE, NONE],
        label: String::new(),
        depth: 0,
    }
}

#[derive(Default)]
struct Builder {
    nodes: Vec<Node>,
    chance_probs: Vec<f64>,
    infoset_keys: [BTreeMap<String, u32>; 2],
    infosets: [Vec<Infoset>; 2],
    aug_keys: [BTreeMap<(u32, String), u32>; 2],
    aug: [Vec<AugInfoset>; 2],
    ps_keys: BTreeMap<String, u32>,
    public_states: Vec<PublicState>,
}

impl Builder {
    fn intern_ps(&mut self, key: &str, round: u32) -> Result<u32> {
        if let Some(&id) = self.ps_keys.get(key) {
            if self.public_states[id as usize].round != round {
                return Err(Error::Structure(format!("public state {key:?} has inconsistent round labels")));
            }
            return Ok(id);
        }
        let id = self.public_states.len() as u32;
        self.ps_keys.insert(key.to_string(), id);
        self.public_states.push(PublicState {
            key: key.to_string(),
            round,
            nodes: Vec::new(),
            roots: Vec::new(),
            parent: None,
            children: Vec::new(),
            has_decision: false,
            root_aug: [Vec::new(), Vec::new()],
        });
        Ok(id)
    }

    fn intern_aug(&mut self, player: Player, key: String, ps: u32) -> u32 {
        let p = player.index();
        // Observation keys only need to be unique within a public state.
        if let Some(&id) = self.aug_keys[p].get(&(ps, key.clone())) {
            return id;
        }
        let id = self.aug[p].len() as u32;
        self.aug_keys[p].insert((ps, key.clone()), id);
        self.aug[p].push(AugInfoset { player, key, nodes: Vec::new(), public_state: PsId(ps) });
        id
    }

    fn place(&mut self, id: u32, spec: NodeSpec, depth: u32, stack: &mut Vec<(u32, NodeSpec, u32)>) -> Result<()> {
        let NodeSpec { kind, public, round, obs } = spec;
        let idx = id as usize;
        self.nodes[idx].depth = depth;
        let first_child = self.nodes.len() as u32;

        if let SpecKind::Terminal { utility } = kind {
            if !utility.is_finite() {
                return Err(Error::Structure(format!("non-finite utility at node {id}")));
            }
            self.nodes[idx].kind = NodeKind::Terminal;
            self.nodes[idx].utility = utility;
            // Terminals join their parent's public state.
            let ps = match self.nodes[idx].parent {
                Some(p) => self.nodes[p.index()].public_state,
                None => PsId(self.intern_ps(&public, round)?),
            };
            self.nodes[idx].public_state = ps;
            return Ok(());
        }

        let ps = self.intern_ps(&public, round)?;
        self.nodes[idx].public_state = PsId(ps);
        self.public_states[ps as usize].nodes.push(NodeId(id));

        let children: Vec<(String, Option<f64>, NodeSpec)> = match kind {
            SpecKind::Chance { outcomes } => {
                if outcomes.is_empty() {
                    return Err(Error::Structure(format!("chance node {id} has no outcomes")));
                }
                self.nodes[idx].kind = NodeKind::Chance;
                self.nodes[idx].chance_offset = self.chance_probs.len() as u32;
                let total: f64 = outcomes.iter().map(|o| o.1).sum();
                if (total - 1.0).abs() > 1e-12 || outcomes.iter().any(|o| !(o.1 >= 0.0)) {
                    return Err(Error::Structure(format!(
                        "chance distribution at node {id} sums to {total}"
                    )));
                }
                for p in Player::BOTH {
                    let a = self.intern_aug(p, format!("o:{}", obs[p.index()]), ps);
                    self.nodes[idx].aug[p.index()] = a;
                }
                outcomes.into_iter().map(|(l, p, s)| (l, Some(p), s)).collect()
            }
            SpecKind::Decision { player, infoset, actions } => {
                if actions.is_empty() {
                    return Err(Error::Structure(format!("decision node {id} has no actions")));
                }
                self.public_states[ps as usize].has_decision = true;
                self.nodes[idx].kind = NodeKind::Decision(player);
                let pi = player.index();
                let info_id = match self.infoset_keys[pi].get(&infoset) {
                    Some(&i) => {
                        let info = &self.infosets[pi][i as usize];
                        if info.actions.len() != actions.len()
                            || info.actions.iter().zip(&actions).any(|(a, b)| *a != b.0)
                        {
                            return Err(Error::Structure(format!(
                                "infoset {infoset:?} has inconsistent action sets"
                            )));
                        }
                        i
                    }
                    None => {
                        let i = self.infosets[pi].len() as u32;
                        self.infoset_keys[pi].insert(infoset.clone(), i);
                        self.infosets[pi].push(Infoset {
                            player,
                            key: infoset.clone(),
                            nodes: Vec::new(),
                            actions: actions.iter().map(|a| a.0.clone()).collect(),
                            seq_len: 0,
                            public_state: PsId(ps),
                            action_offset: 0,
                        });
                        i
                    }
                };
                if self.infosets[pi][info_id as usize].public_state != PsId(ps) {
                    return Err(Error::Structure(format!("infoset {infoset:?} spans public states")));
                }
                self.infosets[pi][info_id as usize].nodes.push(NodeId(id));
                self.nodes[idx].infoset = info_id;
                for p in Player::BOTH {
                    let key = if p == player {
                        format!("i:{infoset}")
                    } else {
                        format!("o:{}", obs[p.index()])
                    };
                    let a = self.intern_aug(p, key, ps);
                    self.nodes[idx].aug[p.index()] = a;
                }
                actions.into_iter().map(|(l, s)| (l, None, s)).collect()
            }
            SpecKind::Terminal { .. } => unreachable!(),
        };

        self.nodes[idx].first_child = first_child;
        self.nodes[idx].num_children = children.len() as u32;
        for (k, (label, prob, child)) in children.into_iter().enumerate() {
            let cid = self.nodes.len() as u32;
            let mut n = placeholder();
            n.parent = Some(NodeId(id));
            n.action_index = k as u32;
            n.label = label;
            self.nodes.push(n);
            if let Some(p) = prob {
                self.chance_probs.push(p);
            }
            stack.push((cid, child, depth + 1));
        }
        Ok(())
    }

    fn finish(mut self, name: &str, domain: Domain) -> Result<GameTree> {
        let n = self.nodes.len();
        // Augmented infoset membership.
        for (i, node) in self.nodes.iter().enumerate() {
            for p in Player::BOTH {
                let a = node.aug[p.index()];
                if a != NONE {
                    let aug = &mut self.aug[p.index()][a as usize];
                    if aug.public_state != node.public_state {
                        return Err(Error::Structure(format!(
                            "augmented infoset {:?} of {:?} spans public states {:?} and {:?}",
                            aug.key,
                            p,
                            self.public_states[aug.public_state.index()].key,
                            self.public_states[node.public_state.index()].key
                        )));
                    }
                    aug.nodes.push(NodeId(i as u32));
                }
            }
        }

        // Own-sequence ids for perfect recall: seq[p][node] is an interned id of the
        // (infoset, action) sequence of player p on the path to node.
        let mut seq = [vec![0u32; n], vec![0u32; n]];
        let mut seq_len = [vec![0u32; n], vec![0u32; n]];
        let mut seq_intern: BTreeMap<(u32, u32, u32), u32> = BTreeMap::new();
        for i in 0..n {
            let node = &self.nodes[i];
            for c in node.children() {
                for p in Player::BOTH {
                    let pi = p.index();
                    if node.kind == NodeKind::Decision(p) {
                        let key = (seq[pi][i], node.infoset, self.nodes[c].action_index);
                        let next = seq_intern.len() as u32 + 1;
                        let id = *seq_intern.entry(key).or_insert(next);
                        seq[pi][c] = id;
                        seq_len[pi][c] = seq_len[pi][i] + 1;
                    } else {
                        seq[pi][c] = seq[pi][i];
                        seq_len[pi][c] = seq_len[pi][i];
                    }
                }
            }
        }
        for p in Player::BOTH {
            let pi = p.index();
            for info in &mut self.infosets[pi] {
                let s0 = seq[pi][info.nodes[0].index()];
                if info.nodes.iter().any(|h| seq[pi][h.index()] != s0) {
                    return Err(Error::Structure(format!("imperfect recall at infoset {:?}", info.key)));
                }
                info.seq_len = seq_len[pi][info.nodes[0].index()];
            }
            for aug in &self.aug[pi] {
                let s0 = seq[pi][aug.nodes[0].index()];
                if aug.nodes.iter().any(|h| seq[pi][h.index()] != s0) {
                    return Err(Error::Structure(format!(
                        "imperfect recall at augmented infoset {:?} of {:?}",
                        aug.key, p
                    )));
                }
            }
        }

        // Public tree.
        for ps_idx in 0..self.public_states.len() {
            let mut roots = Vec::new();
            let mut parent_ps: Option<PsId> = None;
            for &h in &self.public_states[ps_idx].nodes {
                let parent = self.nodes[h.index()].parent;
                let outside = match parent {
                    None => true,
                    Some(par) => self.nodes[par.index()].public_state.index() != ps_idx,
                };
                if outside {
                    roots.push(h);
                    if let Some(par) = parent {
                        let pps = self.nodes[par.index()].public_state;
                        match parent_ps {
                            None => parent_ps = Some(pps),
                            Some(x) if x != pps => {
                                return Err(Error::Structure(format!(
                                    "public state {:?} is entered from several public states",
                                    self.public_states[ps_idx].key
                                )))
                            }
                            _ => {}
                        }
                    }
                }
            }
            let mut root_aug = [Vec::new(), Vec::new()];
            for p in Player::BOTH {
                let mut v: Vec<u32> = roots.iter().map(|h| self.nodes[h.index()].aug[p.index()]).collect();
                v.sort_unstable();
                v.dedup();
                root_aug[p.index()] = v;
            }
            let ps = &mut self.public_states[ps_idx];
            ps.roots = roots;
            ps.parent = parent_ps;
            ps.root_aug = root_aug;
        }
        for ps_idx in 0..self.public_states.len() {
            if let Some(par) = self.public_states[ps_idx].parent {
                self.public_states[par.index()].children.push(PsId(ps_idx as u32));
            }
        }
        if self.public_states.iter().filter(|p| p.parent.is_none()).count() != 1 {
            return Err(Error::Structure("public tree must have exactly one root".into()));
        }

        let mut num_actions = [0usize; 2];
        let mut bottom_up = [Vec::new(), Vec::new()];
        for p in Player::BOTH {
            let pi = p.index();
            let mut off = 0u32;
            for info in &mut self.infosets[pi] {
                info.action_offset = off;
                off += info.actions.len() as u32;
            }
            num_actions[pi] = off as usize;
            let mut order: Vec<u32> = (0..self.infosets[pi].len() as u32).collect();
            order.sort_by_key(|&i| (core::cmp::Reverse(self.infosets[pi][i as usize].seq_len), i));
            bottom_up[pi] = order;
        }

        Ok(GameTree {
            name: name.to_string(),
            domain,
            nodes: self.nodes,
            chance_probs: self.chance_probs,
            infosets: self.infosets,
            aug: self.aug,
            public_states: self.public_states,
            num_actions,
            bottom_up,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> NodeSpec {
        // Chance then Max acts without seeing it.
        let leaf = |u| NodeSpec::terminal(u);
        let max_node = |c: &str| {
            NodeSpec::decision(Player::Max, "m", vec![("l".into(), leaf(1.0)), ("r".into(), leaf(-1.0))])
                .public("act", 1)
                .obs(Player::Min, c)
        };
        NodeSpec::chance(vec![("a".into(), 0.5, max_node("a")), ("b".into(), 0.5, max_node("b"))]).public("root", 0)
    }

    #[test]
    fn children_follow_parents() {
        let t = build("tiny", Domain::Other, tiny()).unwrap();
        assert_eq!(t.num_nodes(), 7);
        for (i, n) in t.nodes().iter().enumerate() {
            for c in n.children() {
                assert!(c > i);
                assert_eq!(t.nodes()[c].parent, Some(NodeId(i as u32)));
            }
        }
        assert_eq!(t.num_infosets(Player::Max), 1);
        assert_eq!(t.infosets(Player::Max)[0].nodes.len(), 2);
        assert_eq!(t.public_states().len(), 2);
        let act = t.ps_by_key("act").unwrap();
        assert_eq!(t.public_state(act).roots.len(), 2);
        assert_eq!(t.public_state(act).parent, t.ps_by_key("root"));
    }

    #[test]
    fn rejects_bad_chance() {
        let bad = NodeSpec::chance(vec![("a".into(), 0.4, NodeSpec::terminal(0.0))]);
        assert!(matches!(build("bad", Domain::Other, bad), Err(Error::Structure(_))));
    }

    #[test]
    fn rejects_infoset_across_public_states() {
        let leaf = |u| NodeSpec::terminal(u);
        let a = NodeSpec::decision(Player::Max, "m", vec![("x".into(), leaf(0.0))]).public("p1", 0);
        let b = NodeSpec::decision(Player::Max, "m", vec![("x".into(), leaf(0.0))]).public("p2", 0);
        let root = NodeSpec::chance(vec![("a".into(), 0.5, a), ("b".into(), 0.5, b)]).public("r", 0);
        assert!(build("bad", Domain::Other, root).is_err());
    }

    #[test]
    fn rejects_imperfect_recall() {
        let leaf = |u| NodeSpec::terminal(u);
        let inner = |tag: &str| {
            NodeSpec::decision(Player::Max, "forget", vec![("x".into(), leaf(0.0)), ("y".into(), leaf(1.0))])
                .public("p1", 0)
                .obs(Player::Min, tag)
        };
        let root = NodeSpec::decision(Player::Max, "first", vec![("a".into(), inner("a")), ("b".into(), inner("b"))])
            .public("p0", 0);
        assert!(matches!(build("bad", Domain::Other, root), Err(Error::Structure(_))));
    }

    #[test]
    fn to_spec_round_trips() {
        let t = build("tiny", Domain::Other, tiny()).unwrap();
        let t2 = build("tiny", Domain::Other, t.to_spec(t.root())).unwrap();
        assert_eq!(t.num_nodes(), t2.num_nodes());
        for (a, b) in t.nodes().iter().zip(t2.nodes()) {
            assert_eq!(a.kind, b.kind);
            assert_eq!(a.utility, b.utility);
            assert_eq!(a.label, b.label);
        }
    }
}
